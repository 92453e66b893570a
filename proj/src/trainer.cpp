#include "pocr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "pocr/charset.hpp"
#include "pocr/error.hpp"
#include "pocr/parallel.hpp"
#include "pocr/rng.hpp"
#include "pocr/semcheck.hpp"
#include "pocr/simd/kernels.hpp"

namespace pocr {

std::string_view to_string(LossVariant v) noexcept {
  switch (v) {
    case LossVariant::kQualityBox:
      return "quality_box";
    case LossVariant::kQualityImageNorm:
      return "quality_image_norm";
    case LossVariant::kFixedMargin:
      return "fixed_margin";
    case LossVariant::kSoftmax:
      return "softmax";
  }
  return "quality_box";
}

std::optional<LossVariant> parse_loss_variant(std::string_view s) noexcept {
  if (s == "quality_box") return LossVariant::kQualityBox;
  if (s == "quality_image_norm") return LossVariant::kQualityImageNorm;
  if (s == "fixed_margin") return LossVariant::kFixedMargin;
  if (s == "softmax") return LossVariant::kSoftmax;
  return std::nullopt;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
  if (!(lr_decay_factor > 0.0)) throw ConfigError("train.lr_decay_factor must be positive");
  if (dim < 1) throw ConfigError("train.dim must be >= 1");
  margin.validate();
}

double TrainConfig::learning_rate_at(int epoch) const noexcept {
  double lr = learning_rate;
  for (int e : lr_decay_epochs) {
    if (epoch >= e) lr *= lr_decay_factor;
  }
  return lr;
}

std::vector<double> extract_crop(const GrayImage& image, const CharBox& box) {
  if (box.w <= 0 || box.h <= 0) throw ShapeError("degenerate box");
  if (!box.inside(image.width, image.height)) throw ShapeError("box outside the image");
  std::vector<double> out(kCropPixels);
  const double sx = static_cast<double>(box.w) / kCropSide;
  const double sy = static_cast<double>(box.h) / kCropSide;
  for (int v = 0; v < kCropSide; ++v) {
    const double fy = std::clamp((v + 0.5) * sy - 0.5, 0.0, static_cast<double>(box.h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, box.h - 1);
    const double ty = fy - y0;
    for (int u = 0; u < kCropSide; ++u) {
      const double fx = std::clamp((u + 0.5) * sx - 0.5, 0.0, static_cast<double>(box.w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, box.w - 1);
      const double tx = fx - x0;
      const double top = (1.0 - tx) * image.at(box.x + x0, box.y + y0) + tx * image.at(box.x + x1, box.y + y0);
      const double bot = (1.0 - tx) * image.at(box.x + x0, box.y + y1) + tx * image.at(box.x + x1, box.y + y1);
      out[static_cast<std::size_t>(v) * kCropSide + u] = ((1.0 - ty) * top + ty * bot) / 255.0;
    }
  }
  return out;
}

namespace {

void center(double* p, std::size_t n) {
  double mean = 0.0;
  for (std::size_t k = 0; k < n; ++k) mean += p[k];
  mean /= static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) p[k] -= mean;
}

std::size_t argmax_cosine(const ModelParams& params, const std::vector<double>& feature) {
  const CosineClassifier& clf = params.classifier;
  std::vector<double> cos(clf.classes);
  simd::kernels().gemv(clf.weights.data(), clf.classes, clf.dim, feature.data(), cos.data());
  return static_cast<std::size_t>(std::max_element(cos.begin(), cos.end()) - cos.begin());
}

struct CropSet {
  std::vector<double> pixels;  // n x kCropPixels
  std::vector<std::size_t> labels;
  std::vector<double> qualities;
  std::size_t size() const noexcept { return labels.size(); }
};

void collect(const CorpusManifest& m, bool train_split_only, std::vector<const TextSample*>& out) {
  for (const auto& s : m.samples) {
    if (!train_split_only || s.split == Split::kTrain) out.push_back(&s);
  }
}

CropSet build_crops(const std::vector<const TextSample*>& samples, bool zero_mean, const DetectorConfig* detector) {
  std::vector<std::size_t> offset(samples.size() + 1, 0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const TextSample& s = *samples[i];
    if (s.boxes.size() != s.label.size()) throw ContractError("sample " + s.id + " has misaligned boxes");
    offset[i + 1] = offset[i] + s.boxes.size();
  }
  CropSet set;
  set.pixels.resize(offset.back() * kCropPixels);
  set.labels.resize(offset.back());
  set.qualities.resize(offset.back());
  parallel_for(samples.size(), [&](std::size_t i) {
    const TextSample& s = *samples[i];
    std::vector<CharBox> detected;
    if (detector) detected = detect_chars(s.image, *detector);
    const std::vector<CharBox>& boxes = detected.size() == s.boxes.size() ? detected : s.boxes;
    for (std::size_t k = 0; k < boxes.size(); ++k) {
      const std::size_t row = offset[i] + k;
      const auto cls = Charset::index_of(s.label[k]);
      if (!cls) throw UnsupportedCharacter("label of " + s.id + " is outside the charset");
      auto crop = extract_crop(s.image, boxes[k]);
      if (zero_mean) center(crop.data(), crop.size());
      std::copy(crop.begin(), crop.end(), set.pixels.begin() + static_cast<std::ptrdiff_t>(row * kCropPixels));
      set.labels[row] = *cls;
      set.qualities[row] = s.quality;
    }
  });
  return set;
}

double char_accuracy(const ModelParams& params, const CropSet& set) {
  if (set.size() == 0) return 0.0;
  std::size_t correct = 0;
  std::vector<double> f(params.dim);
  for (std::size_t i = 0; i < set.size(); ++i) {
    simd::kernels().gemv(params.embedding.data(), params.dim, params.inputs, &set.pixels[i * kCropPixels], f.data());
    if (argmax_cosine(params, f) == set.labels[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(set.size());
}

}  // namespace

std::vector<double> embed_raw(const ModelParams& params, const std::vector<double>& patch) {
  if (patch.size() != params.inputs) throw ShapeError("patch size does not match the embedding");
  std::vector<double> p = patch;
  if (params.zero_mean) center(p.data(), p.size());
  std::vector<double> f(params.dim);
  simd::kernels().gemv(params.embedding.data(), params.dim, params.inputs, p.data(), f.data());
  return f;
}

std::vector<double> embed(const ModelParams& params, const std::vector<double>& patch) {
  std::vector<double> f = embed_raw(params, patch);
  const double norm = std::sqrt(simd::kernels().dot(f.data(), f.data(), f.size()));
  if (norm > 0.0) {
    for (double& v : f) v /= norm;
  } else {
    std::fill(f.begin(), f.end(), 0.0);
    f[0] = 1.0;
  }
  return f;
}

std::size_t classify(const ModelParams& params, const std::vector<double>& patch) {
  return argmax_cosine(params, embed(params, patch));
}

TrainResult train(const CorpusManifest& train_set, const CorpusManifest* pseudo, const TrainConfig& cfg,
                  const DetectorConfig& detector, const CorpusManifest* validation) {
  cfg.validate();
  std::vector<const TextSample*> samples;
  collect(train_set, true, samples);
  if (pseudo) collect(*pseudo, false, samples);
  const DetectorConfig* crop_detector = cfg.crop_source == TrainConfig::CropSource::kDetected ? &detector : nullptr;
  const CropSet crops = build_crops(samples, cfg.zero_mean, crop_detector);
  if (crops.size() == 0) throw UsageError("no training characters");
  std::optional<CropSet> val;
  if (validation) {
    std::vector<const TextSample*> vs;
    for (const auto& s : validation->samples) {
      if (s.split != Split::kTrain) vs.push_back(&s);
    }
    val = build_crops(vs, cfg.zero_mean, nullptr);
  }

  const std::size_t d = cfg.dim;
  const std::size_t P = kCropPixels;
  const std::size_t M = Charset::kSize;
  const auto& kern = simd::kernels();

  TrainResult result;
  ModelParams& params = result.params;
  params.dim = d;
  params.inputs = P;
  params.zero_mean = cfg.zero_mean;
  params.embedding.resize(d * P);
  {
    Rng init(derive_seed(cfg.seed, "init"));
    const double scale = 1.0 / std::sqrt(static_cast<double>(P));
    for (double& e : params.embedding) e = scale * init.normal();
    params.classifier = CosineClassifier::random(M, d, init.next_u64());
  }

  std::vector<double> vel_e(d * P, 0.0);
  std::vector<double> vel_w(M * d, 0.0);
  std::vector<double> grad_e(d * P);
  std::vector<std::size_t> order(crops.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(cfg.seed, "shuffle"));

  FeatureBatch batch;
  batch.dim = d;
  std::vector<double> margins;
  const MarginConfig& mc = cfg.margin;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = cfg.learning_rate_at(epoch);
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t seen = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t B = std::min(cfg.batch_size, order.size() - start);
      batch.features.resize(B * d);
      batch.labels.resize(B);
      batch.qualities.resize(B);
      for (std::size_t b = 0; b < B; ++b) {
        const std::size_t i = order[start + b];
        kern.gemv(params.embedding.data(), d, P, &crops.pixels[i * P], batch.x(b));
        batch.labels[b] = crops.labels[i];
        batch.qualities[b] = crops.qualities[i];
      }
      margins.assign(B, 0.0);
      switch (cfg.loss_variant) {
        case LossVariant::kQualityBox:
          margins = quality_margins(batch, mc);
          break;
        case LossVariant::kFixedMargin:
          margins.assign(B, mc.to_radians(mc.u_m));
          break;
        case LossVariant::kSoftmax:
          break;
        case LossVariant::kQualityImageNorm: {
          std::vector<double> norms(B);
          for (std::size_t b = 0; b < B; ++b) norms[b] = std::sqrt(kern.dot(batch.x(b), batch.x(b), d));
          const auto [lo, hi] = std::minmax_element(norms.begin(), norms.end());
          for (std::size_t b = 0; b < B; ++b) {
            const double t = *hi > *lo ? (norms[b] - *lo) / (*hi - *lo) : 0.5;
            margins[b] = margin_of(mc.l_a + t * (mc.u_a - mc.l_a), mc);
          }
          break;
        }
      }
      LossCache cache;
      try {
        cache = forward_with_margins(batch, params.classifier, mc, margins);
      } catch (const NumericsError&) {
        throw TrainingDiverged(epoch);
      }
      for (std::size_t b = 0; b < B; ++b) {
        const double* c = &cache.cosines[b * M];
        if (static_cast<std::size_t>(std::max_element(c, c + M) - c) == batch.labels[b]) ++correct;
      }
      loss_sum += cache.loss * static_cast<double>(B);
      seen += B;
      const LossGradients g = backward(cache, batch, params.classifier, mc);

      std::fill(grad_e.begin(), grad_e.end(), 0.0);
      for (std::size_t b = 0; b < B; ++b) {
        kern.ger(grad_e.data(), d, P, 1.0, &g.d_features[b * d], &crops.pixels[order[start + b] * P]);
      }
      for (std::size_t k = 0; k < grad_e.size(); ++k) {
        vel_e[k] = cfg.momentum * vel_e[k] + grad_e[k] + cfg.weight_decay * params.embedding[k];
        params.embedding[k] -= lr * vel_e[k];
      }
      auto& w = params.classifier.weights;
      for (std::size_t k = 0; k < w.size(); ++k) {
        vel_w[k] = cfg.momentum * vel_w[k] + g.d_weights[k] + cfg.weight_decay * w[k];
        w[k] -= lr * vel_w[k];
      }
      params.classifier.renormalize();
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = lr;
    rec.loss = loss_sum / static_cast<double>(seen);
    if (!std::isfinite(rec.loss)) throw TrainingDiverged(epoch);
    rec.train_char_accuracy = 100.0 * static_cast<double>(correct) / static_cast<double>(seen);
    if (val) rec.validation_char_accuracy = char_accuracy(params, *val);
    result.history.push_back(rec);
  }
  return result;
}

std::string recognize_word(const GrayImage& image, const ModelParams& params, const DetectorConfig& detector) {
  std::string out;
  for (const auto& box : detect_chars(image, detector)) {
    out.push_back(Charset::symbol(classify(params, extract_crop(image, box))));
  }
  return out;
}

EvalReport evaluate(const CorpusManifest& test, const ModelParams& params, const Lexicon& train_vocab,
                    const DetectorConfig& detector) {
  std::vector<const TextSample*> samples;
  for (const auto& s : test.samples) {
    if (s.split != Split::kTrain) samples.push_back(&s);
  }
  if (samples.empty()) throw UsageError("no test samples to evaluate");

  struct Outcome {
    bool word_correct = false;
    std::vector<std::pair<char, char>> chars;
  };
  std::vector<Outcome> outcomes(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const TextSample& s = *samples[i];
    outcomes[i].word_correct = recognize_word(s.image, params, detector) == s.label;
    if (s.boxes.size() == s.label.size()) {
      for (std::size_t k = 0; k < s.boxes.size(); ++k) {
        const char pred = Charset::symbol(classify(params, extract_crop(s.image, s.boxes[k])));
        outcomes[i].chars.emplace_back(s.label[k], pred);
      }
    }
  });

  EvalReport r;
  std::map<std::pair<char, char>, std::size_t> confusions;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const bool iv = classify_vocab(samples[i]->label, train_vocab) == VocabClass::kIv;
    ++(iv ? r.n_iv : r.n_oov);
    if (outcomes[i].word_correct) ++(iv ? r.correct_iv : r.correct_oov);
    for (const auto& [t, p] : outcomes[i].chars) {
      ++r.chars_total;
      if (t == p) {
        ++r.chars_correct;
      } else {
        ++confusions[{t, p}];
      }
    }
  }
  auto pct = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : 100.0 * static_cast<double>(a) / b; };
  r.crw_iv = pct(r.correct_iv, r.n_iv);
  r.crw_oov = pct(r.correct_oov, r.n_oov);
  r.crw_all = pct(r.correct_iv + r.correct_oov, r.n_all());
  r.per_char_accuracy = pct(r.chars_correct, r.chars_total);
  for (const auto& [k, n] : confusions) r.top_confusions.push_back({k.first, k.second, n});
  std::stable_sort(r.top_confusions.begin(), r.top_confusions.end(),
                   [](const Confusion& a, const Confusion& b) { return a.count > b.count; });
  if (r.top_confusions.size() > 10) r.top_confusions.resize(10);
  return r;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["crw_iv"] = crw_iv;
  j["crw_oov"] = crw_oov;
  j["crw_all"] = crw_all;
  j["per_char_accuracy"] = per_char_accuracy;
  j["n_iv"] = n_iv;
  j["n_oov"] = n_oov;
  j["correct_iv"] = correct_iv;
  j["correct_oov"] = correct_oov;
  j["chars_total"] = chars_total;
  j["chars_correct"] = chars_correct;
  auto conf = nlohmann::ordered_json::array();
  for (const auto& c : top_confusions) {
    conf.push_back({{"truth", std::string(1, c.truth)}, {"predicted", std::string(1, c.predicted)}, {"count", c.count}});
  }
  j["top_confusions"] = std::move(conf);
  return j.dump();
}

std::string EvalReport::to_text() const {
  char buf[256];
  std::ostringstream os;
  std::snprintf(buf, sizeof buf, "%-10s %8s %8s %8s\n", "split", "words", "correct", "CRW");
  os << buf;
  std::snprintf(buf, sizeof buf, "%-10s %8zu %8zu %8.2f\n", "IV", n_iv, correct_iv, crw_iv);
  os << buf;
  std::snprintf(buf, sizeof buf, "%-10s %8zu %8zu %8.2f\n", "OOV", n_oov, correct_oov, crw_oov);
  os << buf;
  std::snprintf(buf, sizeof buf, "%-10s %8zu %8zu %8.2f\n", "all", n_all(), correct_iv + correct_oov, crw_all);
  os << buf;
  std::snprintf(buf, sizeof buf, "per-char accuracy %.2f%% (%zu/%zu)\n", per_char_accuracy, chars_correct,
                chars_total);
  os << buf;
  if (!top_confusions.empty()) {
    os << "top confusions:";
    for (const auto& c : top_confusions) os << ' ' << c.truth << "->" << c.predicted << " x" << c.count;
    os << '\n';
  }
  return os.str();
}

namespace {

constexpr char kMagic[8] = {'P', 'O', 'C', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int k = 0; k < 4; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, sizeof v);
  unsigned char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(v >> (8 * k));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_le(std::istream& is, int bytes) {
  unsigned char b[8] = {};
  if (!is.read(reinterpret_cast<char*>(b), bytes)) throw DecodeError("checkpoint is truncated");
  std::uint64_t v = 0;
  for (int k = bytes - 1; k >= 0; --k) v = (v << 8) | b[k];
  return v;
}

double get_f64(std::istream& is) {
  const std::uint64_t v = get_le(is, 8);
  double d;
  std::memcpy(&d, &v, sizeof d);
  return d;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(kMagic, sizeof kMagic);
  put_u32(os, kVersion);
  put_u32(os, static_cast<std::uint32_t>(params.dim));
  put_u32(os, static_cast<std::uint32_t>(params.inputs));
  put_u32(os, static_cast<std::uint32_t>(params.classifier.classes));
  const char flags[4] = {static_cast<char>(params.zero_mean ? 1 : 0), 0, 0, 0};
  os.write(flags, 4);
  for (double v : params.embedding) put_f64(os, v);
  for (double v : params.classifier.weights) put_f64(os, v);
  if (!os) throw IoError("short write to " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw DecodeError("not a checkpoint: bad magic");
  if (get_le(is, 4) != kVersion) throw DecodeError("unsupported checkpoint version");
  ModelParams p;
  p.dim = get_le(is, 4);
  p.inputs = get_le(is, 4);
  const std::size_t classes = get_le(is, 4);
  if (p.dim == 0 || p.inputs != kCropPixels || classes != Charset::kSize || p.dim > 4096) {
    throw DecodeError("checkpoint dimensions are invalid");
  }
  p.zero_mean = get_le(is, 4) & 1;
  p.embedding.resize(p.dim * p.inputs);
  for (double& v : p.embedding) v = get_f64(is);
  p.classifier = CosineClassifier(classes, p.dim);
  for (double& v : p.classifier.weights) v = get_f64(is);
  if (is.peek() != std::char_traits<char>::eof()) throw DecodeError("trailing bytes after checkpoint");
  return p;
}

std::string history_json(const std::vector<EpochRecord>& history) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : history) {
    nlohmann::ordered_json j;
    j["epoch"] = r.epoch;
    j["learning_rate"] = r.learning_rate;
    j["loss"] = r.loss;
    j["train_char_accuracy"] = r.train_char_accuracy;
    j["validation_char_accuracy"] = r.validation_char_accuracy ? nlohmann::ordered_json(*r.validation_char_accuracy)
                                                               : nlohmann::ordered_json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr.dump();
}

std::string history_text(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%5s %10s %12s %10s %10s\n", "epoch", "lr", "loss", "train%", "val%");
  os << buf;
  for (const auto& r : history) {
    if (r.validation_char_accuracy) {
      std::snprintf(buf, sizeof buf, "%5d %10.2e %12.6f %10.2f %10.2f\n", r.epoch, r.learning_rate, r.loss,
                    r.train_char_accuracy, *r.validation_char_accuracy);
    } else {
      std::snprintf(buf, sizeof buf, "%5d %10.2e %12.6f %10.2f %10s\n", r.epoch, r.learning_rate, r.loss,
                    r.train_char_accuracy, "-");
    }
    os << buf;
  }
  return os.str();
}

}  // namespace pocr
