#pragma once

#include <span>
#include <vector>

#include "pocr/image.hpp"
#include "pocr/sample.hpp"

namespace pocr {

// Connected-component character segmentation with an engineered confidence:
//   confidence = w_fill * fill + w_contrast * contrast + w_aspect * aspect
// where, on the component's tight ink rectangle,
//   fill     = clamp(ink_fraction / fill_reference, 0, 1)
//   contrast = clamp((mean_background - mean_ink) / contrast_reference, 0, 1)
//   aspect   = clamp(1 - max(0, |log(h/w)| - log(aspect_free_ratio)) / log 4, 0, 1)
struct DetectorConfig {
  enum class Binarize { kOtsu, kFixed };
  Binarize binarize = Binarize::kOtsu;
  int fixed_threshold = 128;   // ink is <= threshold
  int min_box_area = 6;        // components with fewer ink pixels are dropped
  int merge_gap = 2;           // merge components whose column gap is <= this
  double w_fill = 0.4;
  double w_contrast = 0.4;
  double w_aspect = 0.2;
  double fill_reference = 0.35;
  double contrast_reference = 205.0;  // nominal background - ink of the renderer
  double aspect_free_ratio = 2.0;
  double split_ratio = 1.8;    // split components wider than this x median width
  double empty_quality = 0.5;  // quality when nothing is detected (tracks l_a)

  // Throws ConfigError.
  void validate() const;
};

// Otsu threshold over the 256-bin histogram; ink is <= threshold. Returns -1
// for images with a single intensity level.
int otsu_threshold(const GrayImage& image);

// Boxes sorted by x. Empty for blank images. Requires width, height >= 4.
std::vector<CharBox> detect_chars(const GrayImage& image, const DetectorConfig& cfg);

// Mean box confidence, or empty_quality for an empty sequence.
double word_quality(std::span<const CharBox> boxes, double empty_quality = 0.5);

// Replaces the confidences of the sample's boxes with those of the best
// overlapping detections (0 when nothing overlaps; empty_quality for every box
// when nothing at all is detected) and recomputes quality. Samples without
// boxes take the detected boxes.
TextSample score_sample(TextSample sample, const DetectorConfig& cfg);

double box_iou(const CharBox& a, const CharBox& b) noexcept;

}  // namespace pocr
