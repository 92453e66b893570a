#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pocr/augment.hpp"
#include "pocr/corpus.hpp"
#include "pocr/detector.hpp"
#include "pocr/inpaint.hpp"
#include "pocr/qloss.hpp"
#include "pocr/semcheck.hpp"
#include "pocr/trainer.hpp"

namespace pocr {

inline constexpr const char* kConfigEnvVar = "POCR_CONFIG";

struct CorpusSection {
  std::filesystem::path lexicon;
  double holdout_fraction = 0.3;
  int per_word = 1;
  int test_per_word = 1;
  RenderStyle clean;
  RenderStyle degraded{2, 5, 20.0, 1, 0.7, 2};
  double degraded_fraction = 0.3;

  CorpusOptions options(std::uint64_t seed) const;
};

struct SemcheckSection {
  CheckPolicy policy;
  // Word lists unioned with the corpus lexicon to form the checking lexicon.
  std::vector<std::filesystem::path> extra_lexicons;
};

struct ExperimentSection {
  std::vector<std::uint64_t> seeds{1, 2, 3};
  std::vector<std::string> arms;
};

// Every tunable of a run. Text form:
//   seed = 7
//   [train]
//   epochs = 40
// Keys outside a section are global. Unknown sections or keys throw
// UsageError; malformed values throw ConfigError.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "runs";
  CorpusSection corpus;
  DetectorConfig detector;
  AugmentConfig augment;  // the [inpaint] section is augment.inpaint
  SemcheckSection semcheck;
  TrainConfig train;  // the [loss] section is train.margin
  ExperimentSection experiment;

  RunConfig();

  // Applies `section.key=value` (or `key=value` for globals).
  void set(std::string_view dotted_key, std::string_view value);
  // Parses config text; relative paths resolve against base_dir.
  void apply_text(std::string_view text, const std::filesystem::path& base_dir = {});
  // Validates every section; throws ConfigError.
  void validate() const;
  // Complete, re-parseable snapshot with doubles printed round-trip exact.
  std::string to_text() const;

  std::vector<std::string> keys() const;
};

RunConfig load_config(const std::filesystem::path& path);

}  // namespace pocr
