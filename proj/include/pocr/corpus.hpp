#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "pocr/detector.hpp"
#include "pocr/lexicon.hpp"
#include "pocr/sample.hpp"

namespace pocr {

inline constexpr std::uint8_t kBackgroundLevel = 230;
inline constexpr std::uint8_t kInkLevel = 25;

struct RenderStyle {
  int glyph_scale = 2;        // font pixels -> image pixels, >= 2
  int inter_char_gap = 5;     // pixels between adjacent ink extents, >= 0
  double noise_sigma = 0.0;   // Gaussian noise std-dev in gray levels, >= 0
  int blur_passes = 0;        // repeated 3x3 box blurs, >= 0
  double contrast = 1.0;      // ink/background separation factor in (0, 1]
  int baseline_jitter = 0;    // per-glyph vertical offset bound in pixels, >= 0

  // Throws InvalidStyle.
  void validate() const;
  friend bool operator==(const RenderStyle&, const RenderStyle&) = default;
};

// Renders `word` in the embedded font with exact per-character boxes
// (confidence 1, quality 1 until scored). Degradations are applied in the
// order paint -> baseline jitter -> contrast -> blur -> noise. The result is
// a pure function of (word, style, seed). id and split are left for the
// caller.
TextSample render_word(std::string_view word, const RenderStyle& style, std::uint64_t seed);

struct WeightedStyle {
  RenderStyle style;
  double weight = 1.0;
};

struct CorpusOptions {
  double holdout_fraction = 0.3;
  std::vector<WeightedStyle> styles{{RenderStyle{}, 1.0}};
  int per_word = 1;        // train samples per training word
  int test_per_word = 1;   // test_iv / test_oov samples per word
  std::uint64_t seed = 0;
};

struct CorpusManifest {
  std::vector<TextSample> samples;

  friend bool operator==(const CorpusManifest&, const CorpusManifest&) = default;
};

// Partitions the lexicon by a seeded shuffle into training words and
// round(holdout_fraction * n) held-out words, renders train / test_iv samples
// for training words and test_oov samples for held-out words, and scores every
// sample with the detector. Sample k draws its style and render stream from
// derive_seed(seed, k). Throws PartitionError when the lexicon has fewer than
// 10 words or either side of the partition would be empty.
CorpusManifest build_corpus(const Lexicon& lexicon, const CorpusOptions& options,
                            const DetectorConfig& detector);

// Training vocabulary implied by a manifest: labels of rendered train samples.
Lexicon train_vocabulary(const CorpusManifest& manifest);

}  // namespace pocr
