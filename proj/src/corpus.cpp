#include "pocr/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "pocr/charset.hpp"
#include "pocr/error.hpp"
#include "pocr/font.hpp"
#include "pocr/parallel.hpp"
#include "pocr/rng.hpp"

namespace pocr {

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kTestIv:
      return "test_iv";
    case Split::kTestOov:
      return "test_oov";
  }
  return "train";
}

std::string_view to_string(PseudoOp op) noexcept {
  switch (op) {
    case PseudoOp::kRemove:
      return "remove";
    case PseudoOp::kSwap:
      return "swap";
    case PseudoOp::kTruncateHead:
      return "truncate_head";
    case PseudoOp::kTruncateTail:
      return "truncate_tail";
  }
  return "remove";
}

std::optional<Split> parse_split(std::string_view s) noexcept {
  if (s == "train") return Split::kTrain;
  if (s == "test_iv") return Split::kTestIv;
  if (s == "test_oov") return Split::kTestOov;
  return std::nullopt;
}

std::optional<PseudoOp> parse_op(std::string_view s) noexcept {
  if (s == "remove") return PseudoOp::kRemove;
  if (s == "swap") return PseudoOp::kSwap;
  if (s == "truncate_head") return PseudoOp::kTruncateHead;
  if (s == "truncate_tail") return PseudoOp::kTruncateTail;
  return std::nullopt;
}

std::string validate_sample(const TextSample& s) {
  if (s.boxes.size() != s.label.size()) {
    return "box count " + std::to_string(s.boxes.size()) + " != label length " +
           std::to_string(s.label.size());
  }
  if (static_cast<std::size_t>(s.image.width) * static_cast<std::size_t>(s.image.height) !=
      s.image.pixels.size()) {
    return "pixel buffer size does not match dimensions";
  }
  for (std::size_t k = 0; k < s.boxes.size(); ++k) {
    const CharBox& b = s.boxes[k];
    if (!b.inside(s.image.width, s.image.height)) return "box " + std::to_string(k) + " outside image";
    if (!(b.confidence >= 0.0 && b.confidence <= 1.0)) return "confidence out of [0,1]";
    if (k > 0 && b.x <= s.boxes[k - 1].x) return "boxes not strictly ordered by x";
  }
  if (!(s.quality >= 0.0 && s.quality <= 1.0)) return "quality out of [0,1]";
  return {};
}

void RenderStyle::validate() const {
  if (glyph_scale < 2) throw InvalidStyle("glyph_scale must be >= 2");
  if (inter_char_gap < 0) throw InvalidStyle("inter_char_gap must be >= 0");
  if (!(noise_sigma >= 0.0)) throw InvalidStyle("noise_sigma must be >= 0");
  if (blur_passes < 0) throw InvalidStyle("blur_passes must be >= 0");
  if (!(contrast > 0.0 && contrast <= 1.0)) throw InvalidStyle("contrast must be in (0, 1]");
  if (baseline_jitter < 0) throw InvalidStyle("baseline_jitter must be >= 0");
}

namespace {

void box_blur3(GrayImage& img) {
  const GrayImage src = img;
  const int w = img.width;
  const int h = img.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int sum = 0;
      for (int dy = -1; dy <= 1; ++dy) {
        const int yy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -1; dx <= 1; ++dx) sum += src.at(std::clamp(x + dx, 0, w - 1), yy);
      }
      img.at(x, y) = static_cast<std::uint8_t>((sum + 4) / 9);
    }
  }
}

}  // namespace

TextSample render_word(std::string_view word, const RenderStyle& style, std::uint64_t seed) {
  style.validate();
  if (word.empty()) throw UnsupportedCharacter("cannot render an empty word");
  for (char c : word) {
    if (!Charset::contains(c)) {
      throw UnsupportedCharacter("character 0x" + std::to_string(static_cast<unsigned char>(c)) +
                                 " is outside the charset");
    }
  }
  const int s = style.glyph_scale;
  const int margin_x = 3 * s;
  const int margin_y = 2 * s + style.baseline_jitter;
  int width = 2 * margin_x + style.inter_char_gap * static_cast<int>(word.size() - 1);
  for (char c : word) {
    const auto span = font::ink_columns(c);
    width += (span.last - span.first + 1) * s;
  }
  const int height = font::kCellHeight * s + 2 * margin_y;

  Rng rng(seed);
  std::vector<int> jitter(word.size(), 0);
  if (style.baseline_jitter > 0) {
    for (int& j : jitter) j = static_cast<int>(rng.uniform_range(-style.baseline_jitter, style.baseline_jitter));
  }

  TextSample sample;
  sample.label = std::string(word);
  sample.image = GrayImage(width, height, kBackgroundLevel);
  int cursor = margin_x;
  for (std::size_t k = 0; k < word.size(); ++k) {
    const char c = word[k];
    const auto span = font::ink_columns(c);
    const int ink_w = (span.last - span.first + 1) * s;
    const int x0 = cursor - span.first * s;
    const int y0 = margin_y + jitter[k];
    for (int fy = 0; fy < font::kCellHeight; ++fy) {
      for (int fx = span.first; fx <= span.last; ++fx) {
        if (!font::ink(c, fx, fy)) continue;
        for (int dy = 0; dy < s; ++dy) {
          for (int dx = 0; dx < s; ++dx) sample.image.at(x0 + fx * s + dx, y0 + fy * s + dy) = kInkLevel;
        }
      }
    }
    sample.boxes.push_back(CharBox{cursor, 0, ink_w, height, 1.0, c});
    cursor += ink_w + style.inter_char_gap;
  }

  if (style.contrast < 1.0) {
    for (auto& p : sample.image.pixels) {
      const double v = kBackgroundLevel - style.contrast * (kBackgroundLevel - static_cast<double>(p));
      p = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  for (int pass = 0; pass < style.blur_passes; ++pass) box_blur3(sample.image);
  if (style.noise_sigma > 0.0) {
    for (auto& p : sample.image.pixels) {
      const double v = static_cast<double>(p) + style.noise_sigma * rng.normal();
      p = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  sample.quality = 1.0;
  return sample;
}

CorpusManifest build_corpus(const Lexicon& lexicon, const CorpusOptions& options,
                            const DetectorConfig& detector) {
  const std::size_t n = lexicon.size();
  if (n < 10) throw PartitionError("lexicon needs at least 10 words, got " + std::to_string(n));
  if (!(options.holdout_fraction > 0.0 && options.holdout_fraction < 1.0)) {
    throw PartitionError("holdout_fraction must be in (0, 1)");
  }
  const auto n_oov = static_cast<std::size_t>(std::llround(options.holdout_fraction * static_cast<double>(n)));
  if (n_oov < 1 || n_oov >= n) throw PartitionError("holdout leaves an empty partition");
  if (options.per_word < 1 || options.test_per_word < 0) throw PartitionError("per_word must be >= 1");
  if (options.styles.empty()) throw InvalidStyle("no render styles");
  std::vector<double> weights;
  for (const auto& ws : options.styles) {
    ws.style.validate();
    if (!(ws.weight >= 0.0)) throw InvalidStyle("negative style weight");
    weights.push_back(ws.weight);
  }

  std::vector<std::string> words = lexicon.words();
  Rng partition_rng(derive_seed(options.seed, "partition"));
  partition_rng.shuffle(words);
  const std::vector<std::string> oov(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(n_oov));
  const std::vector<std::string> train(words.begin() + static_cast<std::ptrdiff_t>(n_oov), words.end());

  struct Job {
    const std::string* word;
    Split split;
  };
  std::vector<Job> jobs;
  for (const auto& w : train) {
    for (int r = 0; r < options.per_word; ++r) jobs.push_back({&w, Split::kTrain});
  }
  for (const auto& w : train) {
    for (int r = 0; r < options.test_per_word; ++r) jobs.push_back({&w, Split::kTestIv});
  }
  for (const auto& w : oov) {
    for (int r = 0; r < options.test_per_word; ++r) jobs.push_back({&w, Split::kTestOov});
  }

  CorpusManifest manifest;
  manifest.samples.resize(jobs.size());
  parallel_for(jobs.size(), [&](std::size_t k) {
    const std::uint64_t sample_seed = derive_seed(options.seed, static_cast<std::uint64_t>(k));
    Rng style_rng(derive_seed(sample_seed, "style"));
    const RenderStyle& style = options.styles[style_rng.weighted(weights)].style;
    TextSample s = render_word(*jobs[k].word, style, derive_seed(sample_seed, "render"));
    char id[32];
    std::snprintf(id, sizeof id, "s%06zu", k);
    s.id = id;
    s.split = jobs[k].split;
    manifest.samples[k] = score_sample(std::move(s), detector);
  });
  return manifest;
}

Lexicon train_vocabulary(const CorpusManifest& manifest) {
  Lexicon vocab;
  for (const auto& s : manifest.samples) {
    if (s.split == Split::kTrain && !s.provenance.is_pseudo()) vocab.add(s.label);
  }
  return vocab;
}

}  // namespace pocr
