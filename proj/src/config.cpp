#include "pocr/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "pocr/error.hpp"

#ifndef POCR_DATA_DIR
#define POCR_DATA_DIR "data"
#endif

namespace pocr {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  s = trim(s);
  if (s.empty()) return out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* expected) {
  throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " + expected +
                    ")");
}

template <typename T>
T parse_int(std::string_view key, std::string_view v) {
  v = trim(v);
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

double parse_double(std::string_view key, std::string_view v) {
  v = trim(v);
  const std::string s(v);
  char* end = nullptr;
  const double out = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(std::string_view key, std::string_view v) {
  v = trim(v);
  if (v == "true" || v == "on" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "off" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

template <typename T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::filesystem::path resolve(std::string_view v, const std::filesystem::path& base) {
  std::filesystem::path p{std::string(trim(v))};
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

struct Entry {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, std::string_view, const std::filesystem::path&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define POCR_NUM(sec, name, field)                                                                     \
  Entry {                                                                                              \
    sec, name,                                                                                         \
        [](RunConfig& c, std::string_view v, const std::filesystem::path&) {                           \
          using T = std::remove_reference_t<decltype(c.field)>;                                        \
          if constexpr (std::is_floating_point_v<T>) {                                                 \
            c.field = parse_double(sec "." name, v);                                                   \
          } else {                                                                                     \
            c.field = parse_int<T>(sec "." name, v);                                                   \
          }                                                                                            \
        },                                                                                             \
        [](const RunConfig& c) {                                                                       \
          using T = std::remove_cvref_t<decltype(c.field)>;                                            \
          if constexpr (std::is_floating_point_v<T>) {                                                 \
            return fmt_double(c.field);                                                                \
          } else {                                                                                     \
            return std::to_string(c.field);                                                            \
          }                                                                                            \
        }                                                                                              \
  }

#define POCR_BOOL(sec, name, field)                                                                         \
  Entry {                                                                                                   \
    sec, name,                                                                                              \
        [](RunConfig& c, std::string_view v, const std::filesystem::path&) { c.field = parse_bool(sec "." name, v); }, \
        [](const RunConfig& c) { return fmt_bool(c.field); }                                                \
  }

#define POCR_STYLE(prefix, style)                                     \
  POCR_NUM("corpus", prefix "glyph_scale", corpus.style.glyph_scale),          \
      POCR_NUM("corpus", prefix "inter_char_gap", corpus.style.inter_char_gap), \
      POCR_NUM("corpus", prefix "noise_sigma", corpus.style.noise_sigma),       \
      POCR_NUM("corpus", prefix "blur_passes", corpus.style.blur_passes),       \
      POCR_NUM("corpus", prefix "contrast", corpus.style.contrast),             \
      POCR_NUM("corpus", prefix "baseline_jitter", corpus.style.baseline_jitter)

const std::vector<Entry>& registry() {
  static const std::vector<Entry> entries = {
      POCR_NUM("", "seed", seed),
      Entry{"", "out",
            [](RunConfig& c, std::string_view v, const std::filesystem::path& b) { c.out_dir = resolve(v, b); },
            [](const RunConfig& c) { return c.out_dir.string(); }},

      Entry{"corpus", "lexicon",
            [](RunConfig& c, std::string_view v, const std::filesystem::path& b) { c.corpus.lexicon = resolve(v, b); },
            [](const RunConfig& c) { return c.corpus.lexicon.string(); }},
      POCR_NUM("corpus", "holdout_fraction", corpus.holdout_fraction),
      POCR_NUM("corpus", "per_word", corpus.per_word),
      POCR_NUM("corpus", "test_per_word", corpus.test_per_word),
      POCR_NUM("corpus", "degraded_fraction", corpus.degraded_fraction),
      POCR_STYLE("clean_", clean),
      POCR_STYLE("degraded_", degraded),

      Entry{"detector", "binarize",
            [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
              v = trim(v);
              if (v == "otsu") {
                c.detector.binarize = DetectorConfig::Binarize::kOtsu;
              } else if (v == "fixed") {
                c.detector.binarize = DetectorConfig::Binarize::kFixed;
              } else {
                bad_value("detector.binarize", v, "otsu or fixed");
              }
            },
            [](const RunConfig& c) {
              return std::string(c.detector.binarize == DetectorConfig::Binarize::kOtsu ? "otsu" : "fixed");
            }},
      POCR_NUM("detector", "fixed_threshold", detector.fixed_threshold),
      POCR_NUM("detector", "min_box_area", detector.min_box_area),
      POCR_NUM("detector", "merge_gap", detector.merge_gap),
      POCR_NUM("detector", "w_fill", detector.w_fill),
      POCR_NUM("detector", "w_contrast", detector.w_contrast),
      POCR_NUM("detector", "w_aspect", detector.w_aspect),
      POCR_NUM("detector", "fill_reference", detector.fill_reference),
      POCR_NUM("detector", "contrast_reference", detector.contrast_reference),
      POCR_NUM("detector", "aspect_free_ratio", detector.aspect_free_ratio),
      POCR_NUM("detector", "split_ratio", detector.split_ratio),
      POCR_NUM("detector", "empty_quality", detector.empty_quality),

      POCR_NUM("inpaint", "max_iters", augment.inpaint.max_iters),
      POCR_NUM("inpaint", "tol", augment.inpaint.tol),
      POCR_NUM("inpaint", "dilation", augment.inpaint.dilation),

      POCR_NUM("augment", "min_char_conf", augment.min_char_conf),
      POCR_NUM("augment", "min_image_quality", augment.min_image_quality),
      POCR_NUM("augment", "swap_size_tolerance", augment.swap_size_tolerance),
      POCR_NUM("augment", "budget", augment.budget),
      POCR_NUM("augment", "op_remove", augment.op_mix[0]),
      POCR_NUM("augment", "op_swap", augment.op_mix[1]),
      POCR_NUM("augment", "op_truncate_head", augment.op_mix[2]),
      POCR_NUM("augment", "op_truncate_tail", augment.op_mix[3]),
      POCR_BOOL("augment", "semantic_check", augment.semantic_check),
      POCR_BOOL("augment", "keep_corrected", augment.keep_corrected),

      POCR_NUM("semcheck", "max_correct_distance", semcheck.policy.max_correct_distance),
      POCR_BOOL("semcheck", "case_fold", semcheck.policy.case_fold_matching),
      Entry{"semcheck", "extra_lexicons",
            [](RunConfig& c, std::string_view v, const std::filesystem::path& b) {
              c.semcheck.extra_lexicons.clear();
              for (auto item : split_list(v)) c.semcheck.extra_lexicons.push_back(resolve(item, b));
            },
            [](const RunConfig& c) {
              std::vector<std::string> s;
              for (const auto& p : c.semcheck.extra_lexicons) s.push_back(p.string());
              return join(s);
            }},

      POCR_NUM("loss", "s", train.margin.s),
      POCR_NUM("loss", "l_a", train.margin.l_a),
      POCR_NUM("loss", "u_a", train.margin.u_a),
      POCR_NUM("loss", "l_m", train.margin.l_m),
      POCR_NUM("loss", "u_m", train.margin.u_m),
      Entry{"loss", "margin_unit",
            [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
              v = trim(v);
              if (v == "degrees") {
                c.train.margin.unit = MarginConfig::Unit::kDegrees;
              } else if (v == "radians") {
                c.train.margin.unit = MarginConfig::Unit::kRadians;
              } else {
                bad_value("loss.margin_unit", v, "degrees or radians");
              }
            },
            [](const RunConfig& c) {
              return std::string(c.train.margin.unit == MarginConfig::Unit::kDegrees ? "degrees" : "radians");
            }},
      Entry{"loss", "stability",
            [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
              v = trim(v);
              if (v == "arcface_fallback") {
                c.train.margin.stability = MarginConfig::Stability::kArcfaceFallback;
              } else if (v == "clamp_theta") {
                c.train.margin.stability = MarginConfig::Stability::kClampTheta;
              } else {
                bad_value("loss.stability", v, "arcface_fallback or clamp_theta");
              }
            },
            [](const RunConfig& c) { return std::string(to_string(c.train.margin.stability)); }},

      POCR_NUM("train", "epochs", train.epochs),
      POCR_NUM("train", "batch_size", train.batch_size),
      POCR_NUM("train", "learning_rate", train.learning_rate),
      POCR_NUM("train", "momentum", train.momentum),
      POCR_NUM("train", "weight_decay", train.weight_decay),
      Entry{"train", "lr_decay_epochs",
            [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
              c.train.lr_decay_epochs.clear();
              for (auto item : split_list(v)) c.train.lr_decay_epochs.push_back(parse_int<int>("train.lr_decay_epochs", item));
            },
            [](const RunConfig& c) { return join(c.train.lr_decay_epochs); }},
      POCR_NUM("train", "lr_decay_factor", train.lr_decay_factor),
      POCR_NUM("train", "dim", train.dim),
      POCR_BOOL("train", "zero_mean", train.zero_mean),
      Entry{"train", "crop_source",
            [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
              v = trim(v);
              if (v == "detected") {
                c.train.crop_source = TrainConfig::CropSource::kDetected;
              } else if (v == "ground_truth") {
                c.train.crop_source = TrainConfig::CropSource::kGroundTruth;
              } else {
                bad_value("train.crop_source", v, "detected or ground_truth");
              }
            },
            [](const RunConfig& c) {
              return std::string(c.train.crop_source == TrainConfig::CropSource::kDetected ? "detected"
                                                                                           : "ground_truth");
            }},
      Entry{"train", "loss_variant",
            [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
              const auto lv = parse_loss_variant(trim(v));
              if (!lv) bad_value("train.loss_variant", v, "quality_box, quality_image_norm, fixed_margin or softmax");
              c.train.loss_variant = *lv;
            },
            [](const RunConfig& c) { return std::string(to_string(c.train.loss_variant)); }},

      Entry{"experiment", "seeds",
            [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
              c.experiment.seeds.clear();
              for (auto item : split_list(v)) c.experiment.seeds.push_back(parse_int<std::uint64_t>("experiment.seeds", item));
            },
            [](const RunConfig& c) { return join(c.experiment.seeds); }},
      Entry{"experiment", "arms",
            [](RunConfig& c, std::string_view v, const std::filesystem::path&) {
              c.experiment.arms.clear();
              for (auto item : split_list(v)) c.experiment.arms.emplace_back(item);
            },
            [](const RunConfig& c) { return join(c.experiment.arms); }},
  };
  return entries;
}

#undef POCR_NUM
#undef POCR_BOOL
#undef POCR_STYLE

const Entry& lookup(std::string_view section, std::string_view key) {
  bool section_known = section.empty();
  for (const auto& e : registry()) {
    if (e.section == section) {
      section_known = true;
      if (e.key == key) return e;
    }
  }
  if (!section_known) throw UsageError("unknown config section [" + std::string(section) + "]");
  throw UsageError("unknown config key '" + (section.empty() ? "" : std::string(section) + ".") + std::string(key) + "'");
}

}  // namespace

CorpusOptions CorpusSection::options(std::uint64_t seed) const {
  CorpusOptions o;
  o.holdout_fraction = holdout_fraction;
  o.per_word = per_word;
  o.test_per_word = test_per_word;
  o.seed = seed;
  o.styles.clear();
  if (degraded_fraction < 1.0) o.styles.push_back({clean, 1.0 - degraded_fraction});
  if (degraded_fraction > 0.0) o.styles.push_back({degraded, degraded_fraction});
  return o;
}

RunConfig::RunConfig() {
  corpus.lexicon = std::filesystem::path(POCR_DATA_DIR) / "desk_lexicon.tsv";
  semcheck.extra_lexicons = {std::filesystem::path(POCR_DATA_DIR) / "check_extra.tsv"};
}

void RunConfig::set(std::string_view dotted_key, std::string_view value) {
  dotted_key = trim(dotted_key);
  const auto dot = dotted_key.find('.');
  const std::string_view section = dot == std::string_view::npos ? std::string_view{} : dotted_key.substr(0, dot);
  const std::string_view key = dot == std::string_view::npos ? dotted_key : dotted_key.substr(dot + 1);
  lookup(section, key).set(*this, value, {});
}

void RunConfig::apply_text(std::string_view text, const std::filesystem::path& base_dir) {
  std::string section;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(lineno, "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      bool known = false;
      for (const auto& e : registry()) known = known || (!section.empty() && e.section == section);
      if (!known) throw UsageError("unknown config section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(lineno, "expected key = value");
    lookup(section, trim(line.substr(0, eq))).set(*this, line.substr(eq + 1), base_dir);
  }
}

void RunConfig::validate() const {
  corpus.clean.validate();
  corpus.degraded.validate();
  if (!(corpus.holdout_fraction > 0.0 && corpus.holdout_fraction < 1.0)) {
    throw ConfigError("corpus.holdout_fraction must be in (0, 1)");
  }
  if (!(corpus.degraded_fraction >= 0.0 && corpus.degraded_fraction <= 1.0)) {
    throw ConfigError("corpus.degraded_fraction must be in [0, 1]");
  }
  if (corpus.per_word < 1 || corpus.test_per_word < 1) throw ConfigError("corpus per-word counts must be >= 1");
  detector.validate();
  augment.validate();
  train.validate();
  if (experiment.seeds.empty()) throw ConfigError("experiment.seeds must not be empty");
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  std::string current;
  for (const auto& e : registry()) {
    if (e.section != current) {
      current = e.section;
      os << "\n[" << current << "]\n";
    }
    os << e.key << " = " << e.get(*this) << '\n';
  }
  return os.str();
}

std::vector<std::string> RunConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& e : registry()) out.push_back(e.section.empty() ? e.key : e.section + "." + e.key);
  return out;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig cfg;
  cfg.apply_text(buf.str(), path.parent_path());
  return cfg;
}

}  // namespace pocr
