#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pocr/corpus.hpp"
#include "pocr/detector.hpp"
#include "pocr/inpaint.hpp"
#include "pocr/lexicon.hpp"
#include "pocr/rng.hpp"
#include "pocr/semcheck.hpp"

namespace pocr {

struct AugmentConfig {
  double min_char_conf = 0.5;
  double min_image_quality = 0.5;
  double swap_size_tolerance = 0.3;
  std::size_t budget = 1000;
  // Draw probabilities for remove, swap, truncate_head, truncate_tail.
  std::array<double, 4> op_mix{0.4, 0.4, 0.1, 0.1};
  bool semantic_check = true;
  // Corrected verdicts relabel the sample; when false they are counted but
  // not emitted.
  bool keep_corrected = true;
  CheckPolicy policy;
  InpaintConfig inpaint;

  // Throws ConfigError.
  void validate() const;
  std::size_t max_attempts() const noexcept { return 50 * budget; }
};

// The ops return the edited sample (id "<origin>_<op>_<draw>", provenance
// pseudo, split train) or nullopt when their preconditions fail. Box
// confidences are carried over; generate_pseudo re-scores afterwards.

// Erases one uniformly chosen character whose confidence is >= min_char_conf
// by inpainting its box. Requires quality >= min_image_quality and a label of
// length >= 2.
std::optional<TextSample> remove_char(const TextSample& sample, Rng& rng, const AugmentConfig& cfg,
                                      std::size_t draw = 0);
// Same with the character index fixed; nullopt when it is not eligible.
std::optional<TextSample> remove_char_at(const TextSample& sample, std::size_t index, const AugmentConfig& cfg,
                                         std::size_t draw = 0);

// Two boxes may swap when their widths and heights each differ by at most
// swap_size_tolerance relative to the larger one and their characters differ.
bool swappable(const TextSample& sample, std::size_t i, std::size_t j, const AugmentConfig& cfg);
// Exchanges the pixel patches of a uniformly chosen swappable pair.
std::optional<TextSample> swap_chars(const TextSample& sample, Rng& rng, const AugmentConfig& cfg,
                                     std::size_t draw = 0);
std::optional<TextSample> swap_chars_at(const TextSample& sample, std::size_t i, std::size_t j,
                                        const AugmentConfig& cfg, std::size_t draw = 0);

enum class Side { kHead, kTail };
// Crops the first or last character away, cutting halfway through the gap to
// its neighbour. Requires a label of length >= 3.
std::optional<TextSample> truncate(const TextSample& sample, Side side, std::size_t draw = 0);

// Median of the image's outermost rows and columns.
std::uint8_t border_median(const GrayImage& image);

struct OpStats {
  std::size_t attempted = 0;
  std::size_t inapplicable = 0;
  std::size_t accepted = 0;
  std::size_t corrected = 0;
  std::size_t rejected_too_far = 0;
  std::size_t rejected_empty = 0;
  std::size_t rejected_bad_charset = 0;
  std::size_t dropped_length_change = 0;
  std::size_t corrected_not_kept = 0;
  std::size_t unchecked = 0;
};

struct GenerationStats {
  std::size_t budget = 0;
  std::size_t attempts = 0;
  std::size_t emitted = 0;
  std::size_t emitted_iv = 0;
  std::size_t emitted_oov = 0;
  std::array<OpStats, 4> per_op{};
  bool budget_reached = true;
  std::string warning;

  double acceptance_rate() const noexcept {
    return attempts == 0 ? 0.0 : static_cast<double>(emitted) / static_cast<double>(attempts);
  }
  std::string to_json() const;
};

struct PseudoRecord {
  CheckVerdict verdict;  // Accept(label) when checking is disabled
  VocabClass vocab = VocabClass::kOov;
};

struct PseudoResult {
  CorpusManifest manifest;
  std::vector<PseudoRecord> records;  // parallel to manifest.samples
  GenerationStats stats;
};

// Draws a train sample and an op per attempt (attempt k uses
// derive_seed(seed, k)), applies it, re-scores with the detector, runs the
// semantic check against `check_lexicon`, and keeps Accept / Corrected
// results (Corrected relabels; a correction that changes the label length is
// dropped to keep boxes and label aligned). Stops at the budget or after
// max_attempts(). Attempts are evaluated in parallel chunks and merged in
// attempt order.
PseudoResult generate_pseudo(const CorpusManifest& corpus, const Lexicon& check_lexicon,
                             const Lexicon& train_vocab, const AugmentConfig& cfg,
                             const DetectorConfig& detector, std::uint64_t seed);

}  // namespace pocr
