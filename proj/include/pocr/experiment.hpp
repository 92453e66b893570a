#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pocr/augment.hpp"
#include "pocr/config.hpp"
#include "pocr/trainer.hpp"

namespace pocr {

enum class DataVariant { kBaseline, kPseudo, kPseudoNoCheck, kNoRemove, kNoSwap };
std::string_view to_string(DataVariant v) noexcept;

// Arm names: "<data>[:<loss>]" with data in {baseline, pseudo, pseudo_nocheck,
// no_remove, no_swap}, or a bare loss variant name meaning baseline data with
// that loss. The loss defaults to train.loss_variant.
struct ArmSpec {
  std::string name;
  DataVariant data = DataVariant::kBaseline;
  LossVariant loss = LossVariant::kQualityBox;
};

// Throws UsageError for unknown names.
ArmSpec parse_arm(std::string_view name, LossVariant default_loss);
std::vector<std::string> default_arms();

// Augmentation settings of a data variant; nullopt for baseline.
std::optional<AugmentConfig> augment_for(DataVariant v, const AugmentConfig& base);

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<std::string> manifests;  // corpus and pseudo manifests consumed
  std::optional<GenerationStats> generation;
  EvalReport eval;
  double final_loss = 0.0;
  double train_seconds = 0.0;
};

struct ArmResult {
  ArmSpec spec;
  std::vector<SeedRun> runs;
  double mean_crw_iv = 0.0;
  double mean_crw_oov = 0.0;
  double mean_crw_all = 0.0;
  double mean_per_char = 0.0;
};

struct ExperimentReport {
  std::string config_snapshot;
  std::vector<ArmResult> arms;
  double wall_seconds = 0.0;

  const ArmResult* arm(std::string_view name) const;
  // Without timings the JSON holds only quantities that reruns must reproduce.
  std::string to_json(bool with_timings = true) const;
  std::string to_text() const;
  std::string to_csv() const;
};

using ProgressFn = std::function<void(std::string_view)>;

// Runs every configured arm for every seed in experiment.seeds. Repetition r
// works from base = derive_seed(seed, r): the corpus uses derive_seed(base,
// "corpus"), pseudo generation derive_seed(base, "pseudo") and training
// derive_seed(base, "train"), so arms of one repetition share data and
// initialization. Identical (data, loss) pairs are trained once. When
// manifest_dir is set, the corpus and pseudo manifests are saved beneath it.
ExperimentReport ablate(const RunConfig& cfg, const std::optional<std::filesystem::path>& manifest_dir = std::nullopt,
                        const ProgressFn& progress = {});

// Checking lexicon: the corpus lexicon unioned with semcheck.extra_lexicons.
Lexicon checking_lexicon(const RunConfig& cfg);

}  // namespace pocr
