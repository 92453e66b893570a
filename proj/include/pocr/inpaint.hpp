#pragma once

#include <cstdint>
#include <vector>

#include "pocr/image.hpp"
#include "pocr/sample.hpp"

namespace pocr {

// Boolean fill mask; true marks pixels to be reconstructed.
struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}
  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v = true) { bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0; }
  std::size_t count() const;
};

struct InpaintConfig {
  int max_iters = 500;
  double tol = 0.5;   // stop when the largest per-pixel change drops below this
  int dilation = 1;   // mask dilation (Chebyshev radius) before solving

  // Throws ConfigError.
  void validate() const;
};

// True on the box grown by `dilation` pixels on every side, clipped to the
// image. Throws ShapeError when the box is not inside the image.
Mask mask_from_box(const CharBox& box, int width, int height, int dilation);

// Square (Chebyshev) dilation.
Mask dilate(const Mask& mask, int radius);

// Harmonic fill: masked pixels (after dilation) converge under Jacobi
// iteration to the mean of their in-bounds 4-neighbours, starting from the
// mean of the known pixels bordering the mask. Unmasked pixels are returned
// bit-identical. Throws ShapeError on a dimension mismatch and
// NoBoundaryError when no known pixel remains.
GrayImage inpaint(const GrayImage& image, const Mask& mask, const InpaintConfig& cfg);

struct InpaintTrace {
  int iterations = 0;
  double last_change = 0.0;
  // Unrounded solution over the full image (known pixels copied through).
  std::vector<double> field;
};

// As inpaint(), also reporting the iteration count and the unrounded field.
GrayImage inpaint_traced(const GrayImage& image, const Mask& mask, const InpaintConfig& cfg,
                         InpaintTrace& trace);

}  // namespace pocr
