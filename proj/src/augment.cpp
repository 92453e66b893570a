#include "pocr/augment.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "pocr/error.hpp"
#include "pocr/parallel.hpp"

namespace pocr {

namespace {

TextSample derived(const TextSample& src, PseudoOp op, std::size_t draw) {
  TextSample out;
  out.id = src.id + "_" + std::string(to_string(op)) + "_" + std::to_string(draw);
  out.provenance = Provenance::pseudo(src.id, op);
  out.split = Split::kTrain;
  return out;
}

bool aligned(const TextSample& s) { return !s.boxes.empty() && s.boxes.size() == s.label.size(); }

double relative_gap(int a, int b) {
  const int hi = std::max(a, b);
  return hi <= 0 ? 0.0 : static_cast<double>(std::abs(a - b)) / hi;
}

}  // namespace

void AugmentConfig::validate() const {
  auto unit = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string("augment.") + name + " must be in [0, 1]");
  };
  unit(min_char_conf, "min_char_conf");
  unit(min_image_quality, "min_image_quality");
  unit(swap_size_tolerance, "swap_size_tolerance");
  double sum = 0.0;
  for (double p : op_mix) {
    if (!(p >= 0.0)) throw ConfigError("augment.op_mix entries must be non-negative");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("augment.op_mix must sum to 1");
  if (policy.max_correct_distance > 8) throw ConfigError("semcheck.max_correct_distance too large");
  inpaint.validate();
}

std::uint8_t border_median(const GrayImage& image) {
  std::vector<std::uint8_t> v;
  for (int x = 0; x < image.width; ++x) {
    v.push_back(image.at(x, 0));
    if (image.height > 1) v.push_back(image.at(x, image.height - 1));
  }
  for (int y = 1; y + 1 < image.height; ++y) {
    v.push_back(image.at(0, y));
    if (image.width > 1) v.push_back(image.at(image.width - 1, y));
  }
  if (v.empty()) return 0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  return *mid;
}

std::optional<TextSample> remove_char_at(const TextSample& sample, std::size_t index, const AugmentConfig& cfg,
                                         std::size_t draw) {
  if (!aligned(sample) || sample.label.size() < 2 || index >= sample.boxes.size()) return std::nullopt;
  if (sample.quality < cfg.min_image_quality) return std::nullopt;
  if (sample.boxes[index].confidence < cfg.min_char_conf) return std::nullopt;
  const Mask mask = mask_from_box(sample.boxes[index], sample.image.width, sample.image.height, 0);
  TextSample out = derived(sample, PseudoOp::kRemove, draw);
  out.image = inpaint(sample.image, mask, cfg.inpaint);
  out.label = sample.label;
  out.label.erase(index, 1);
  out.boxes = sample.boxes;
  out.boxes.erase(out.boxes.begin() + static_cast<std::ptrdiff_t>(index));
  out.quality = word_quality(out.boxes, cfg.min_image_quality);
  return out;
}

std::optional<TextSample> remove_char(const TextSample& sample, Rng& rng, const AugmentConfig& cfg,
                                      std::size_t draw) {
  if (!aligned(sample) || sample.label.size() < 2 || sample.quality < cfg.min_image_quality) return std::nullopt;
  std::vector<std::size_t> eligible;
  for (std::size_t k = 0; k < sample.boxes.size(); ++k) {
    if (sample.boxes[k].confidence >= cfg.min_char_conf) eligible.push_back(k);
  }
  if (eligible.empty()) return std::nullopt;
  return remove_char_at(sample, eligible[rng.uniform_int(eligible.size())], cfg, draw);
}

bool swappable(const TextSample& sample, std::size_t i, std::size_t j, const AugmentConfig& cfg) {
  if (!aligned(sample) || i == j || i >= sample.boxes.size() || j >= sample.boxes.size()) return false;
  if (sample.label[i] == sample.label[j]) return false;
  const CharBox& a = sample.boxes[i];
  const CharBox& b = sample.boxes[j];
  return relative_gap(a.w, b.w) <= cfg.swap_size_tolerance && relative_gap(a.h, b.h) <= cfg.swap_size_tolerance;
}

std::optional<TextSample> swap_chars_at(const TextSample& sample, std::size_t i, std::size_t j,
                                        const AugmentConfig& cfg, std::size_t draw) {
  if (!swappable(sample, i, j, cfg)) return std::nullopt;
  const CharBox& a = sample.boxes[i];
  const CharBox& b = sample.boxes[j];
  const GrayImage patch_a = sample.image.crop(a.x, a.y, a.w, a.h);
  const GrayImage patch_b = sample.image.crop(b.x, b.y, b.w, b.h);
  const std::uint8_t bg = border_median(sample.image);

  TextSample out = derived(sample, PseudoOp::kSwap, draw);
  out.image = sample.image;
  auto paste = [&](const GrayImage& patch, const CharBox& dst) {
    for (int y = 0; y < dst.h; ++y) {
      for (int x = 0; x < dst.w; ++x) {
        out.image.at(dst.x + x, dst.y + y) = (x < patch.width && y < patch.height) ? patch.at(x, y) : bg;
      }
    }
  };
  paste(patch_b, a);
  paste(patch_a, b);
  out.label = sample.label;
  std::swap(out.label[i], out.label[j]);
  out.boxes = sample.boxes;
  std::swap(out.boxes[i].char_hint, out.boxes[j].char_hint);
  std::swap(out.boxes[i].confidence, out.boxes[j].confidence);
  out.quality = word_quality(out.boxes, cfg.min_image_quality);
  return out;
}

std::optional<TextSample> swap_chars(const TextSample& sample, Rng& rng, const AugmentConfig& cfg,
                                     std::size_t draw) {
  if (!aligned(sample)) return std::nullopt;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < sample.boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < sample.boxes.size(); ++j) {
      if (swappable(sample, i, j, cfg)) pairs.emplace_back(i, j);
    }
  }
  if (pairs.empty()) return std::nullopt;
  const auto [i, j] = pairs[rng.uniform_int(pairs.size())];
  return swap_chars_at(sample, i, j, cfg, draw);
}

std::optional<TextSample> truncate(const TextSample& sample, Side side, std::size_t draw) {
  if (!aligned(sample) || sample.label.size() < 3) return std::nullopt;
  const std::size_t n = sample.boxes.size();
  TextSample out = derived(sample, side == Side::kHead ? PseudoOp::kTruncateHead : PseudoOp::kTruncateTail, draw);
  out.label = sample.label;
  out.boxes = sample.boxes;
  if (side == Side::kHead) {
    const CharBox& first = sample.boxes[0];
    const CharBox& next = sample.boxes[1];
    const int cut = first.right() + (next.x - first.right()) / 2;
    if (cut <= 0 || cut >= sample.image.width) return std::nullopt;
    out.image = sample.image.crop(cut, 0, sample.image.width - cut, sample.image.height);
    out.label.erase(0, 1);
    out.boxes.erase(out.boxes.begin());
    for (auto& b : out.boxes) b.x -= cut;
  } else {
    const CharBox& prev = sample.boxes[n - 2];
    const CharBox& last = sample.boxes[n - 1];
    const int cut = prev.right() + (last.x - prev.right() + 1) / 2;
    if (cut <= 0 || cut >= sample.image.width) return std::nullopt;
    out.image = sample.image.crop(0, 0, cut, sample.image.height);
    out.label.pop_back();
    out.boxes.pop_back();
  }
  out.quality = word_quality(out.boxes, 0.5);
  return out;
}

std::string GenerationStats::to_json() const {
  static constexpr std::array<PseudoOp, 4> kOps{PseudoOp::kRemove, PseudoOp::kSwap, PseudoOp::kTruncateHead,
                                                PseudoOp::kTruncateTail};
  nlohmann::ordered_json j;
  j["budget"] = budget;
  j["attempts"] = attempts;
  j["emitted"] = emitted;
  j["emitted_iv"] = emitted_iv;
  j["emitted_oov"] = emitted_oov;
  j["acceptance_rate"] = acceptance_rate();
  j["budget_reached"] = budget_reached;
  j["warning"] = warning;
  nlohmann::ordered_json ops;
  for (std::size_t k = 0; k < kOps.size(); ++k) {
    const OpStats& s = per_op[k];
    ops[std::string(to_string(kOps[k]))] = {
        {"attempted", s.attempted},
        {"inapplicable", s.inapplicable},
        {"accept", s.accepted},
        {"corrected", s.corrected},
        {"reject_too_far", s.rejected_too_far},
        {"reject_empty", s.rejected_empty},
        {"reject_bad_charset", s.rejected_bad_charset},
        {"dropped_length_change", s.dropped_length_change},
        {"corrected_not_kept", s.corrected_not_kept},
        {"unchecked", s.unchecked},
    };
  }
  j["per_op"] = std::move(ops);
  return j.dump();
}

namespace {

enum class Outcome { kInapplicable, kKept, kRejected, kDropped };

struct Attempt {
  std::size_t op = 0;
  Outcome outcome = Outcome::kInapplicable;
  std::optional<TextSample> sample;
  std::optional<CheckVerdict> verdict;
};

Attempt run_attempt(const std::vector<const TextSample*>& pool, const Lexicon& check_lexicon,
                    const AugmentConfig& cfg, const DetectorConfig& detector, std::uint64_t seed, std::size_t k) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
  const TextSample& src = *pool[rng.uniform_int(pool.size())];
  Attempt a;
  a.op = rng.weighted(std::vector<double>(cfg.op_mix.begin(), cfg.op_mix.end()));
  std::optional<TextSample> out;
  switch (a.op) {
    case 0:
      out = remove_char(src, rng, cfg, k);
      break;
    case 1:
      out = swap_chars(src, rng, cfg, k);
      break;
    case 2:
      out = truncate(src, Side::kHead, k);
      break;
    default:
      out = truncate(src, Side::kTail, k);
      break;
  }
  if (!out) return a;
  TextSample s = score_sample(std::move(*out), detector);
  if (!cfg.semantic_check) {
    a.verdict = Accept{s.label};
    a.outcome = Outcome::kKept;
    a.sample = std::move(s);
    return a;
  }
  CheckVerdict v = check(s.label, check_lexicon, cfg.policy);
  if (std::holds_alternative<Reject>(v)) {
    a.outcome = Outcome::kRejected;
  } else if (const auto* c = std::get_if<Corrected>(&v)) {
    if (c->corrected.size() != s.label.size() || !cfg.keep_corrected) {
      a.outcome = Outcome::kDropped;
    } else {
      s.label = c->corrected;
      for (std::size_t i = 0; i < s.boxes.size(); ++i) s.boxes[i].char_hint = s.label[i];
      a.outcome = Outcome::kKept;
      a.sample = std::move(s);
    }
  } else {
    a.outcome = Outcome::kKept;
    a.sample = std::move(s);
  }
  a.verdict = std::move(v);
  return a;
}

}  // namespace

PseudoResult generate_pseudo(const CorpusManifest& corpus, const Lexicon& check_lexicon,
                             const Lexicon& train_vocab, const AugmentConfig& cfg,
                             const DetectorConfig& detector, std::uint64_t seed) {
  cfg.validate();
  detector.validate();
  PseudoResult result;
  result.stats.budget = cfg.budget;
  if (cfg.budget == 0) return result;

  std::vector<const TextSample*> pool;
  for (const auto& s : corpus.samples) {
    if (s.split == Split::kTrain) pool.push_back(&s);
  }
  if (pool.empty()) throw UsageError("corpus has no train samples to augment");
  if (cfg.semantic_check && check_lexicon.empty()) throw EmptyLexicon("checking lexicon is empty");

  constexpr std::size_t kChunk = 256;
  const std::size_t cap = cfg.max_attempts();
  GenerationStats& st = result.stats;
  std::size_t next = 0;
  while (st.emitted < cfg.budget && next < cap) {
    const std::size_t count = std::min(kChunk, cap - next);
    std::vector<Attempt> chunk(count);
    parallel_for(count, [&](std::size_t i) {
      chunk[i] = run_attempt(pool, check_lexicon, cfg, detector, seed, next + i);
    });
    for (std::size_t i = 0; i < count && st.emitted < cfg.budget; ++i) {
      Attempt& a = chunk[i];
      OpStats& os = st.per_op[a.op];
      ++st.attempts;
      ++os.attempted;
      if (a.outcome == Outcome::kInapplicable) {
        ++os.inapplicable;
        continue;
      }
      if (!cfg.semantic_check) {
        ++os.unchecked;
      } else if (const auto* r = std::get_if<Reject>(&*a.verdict)) {
        switch (r->reason) {
          case RejectReason::kTooFar:
            ++os.rejected_too_far;
            break;
          case RejectReason::kEmpty:
            ++os.rejected_empty;
            break;
          case RejectReason::kBadCharset:
            ++os.rejected_bad_charset;
            break;
        }
      } else if (a.outcome == Outcome::kDropped && !cfg.keep_corrected &&
                 std::get<Corrected>(*a.verdict).corrected.size() == std::get<Corrected>(*a.verdict).original.size()) {
        ++os.corrected_not_kept;
      } else if (a.outcome == Outcome::kDropped) {
        ++os.dropped_length_change;
      } else if (std::holds_alternative<Corrected>(*a.verdict)) {
        ++os.corrected;
      } else {
        ++os.accepted;
      }
      if (a.outcome != Outcome::kKept) continue;
      const VocabClass vc = classify_vocab(a.sample->label, train_vocab);
      ++(vc == VocabClass::kIv ? st.emitted_iv : st.emitted_oov);
      ++st.emitted;
      result.manifest.samples.push_back(std::move(*a.sample));
      result.records.push_back(PseudoRecord{std::move(*a.verdict), vc});
    }
    next += count;
  }
  if (st.emitted < cfg.budget) {
    st.budget_reached = false;
    st.warning = "budget of " + std::to_string(cfg.budget) + " not reached after " + std::to_string(st.attempts) +
                 " attempts; emitted " + std::to_string(st.emitted);
  }
  return result;
}

}  // namespace pocr
