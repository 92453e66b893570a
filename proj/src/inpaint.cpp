#include "pocr/inpaint.hpp"

#include <algorithm>
#include <cmath>

#include "pocr/error.hpp"
#include "pocr/simd/kernels.hpp"

namespace pocr {

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

void InpaintConfig::validate() const {
  if (max_iters < 1) throw ConfigError("inpaint.max_iters must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("inpaint.tol must be > 0");
  if (dilation < 0) throw ConfigError("inpaint.dilation must be >= 0");
}

Mask mask_from_box(const CharBox& box, int width, int height, int dilation) {
  if (!box.inside(width, height)) throw ShapeError("box lies outside the image");
  if (dilation < 0) throw ShapeError("negative dilation");
  Mask m(width, height);
  const int x0 = std::max(0, box.x - dilation);
  const int x1 = std::min(width, box.right() + dilation);
  const int y0 = std::max(0, box.y - dilation);
  const int y1 = std::min(height, box.bottom() + dilation);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) m.set(x, y);
  }
  return m;
}

Mask dilate(const Mask& mask, int radius) {
  if (radius <= 0) return mask;
  Mask out(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      for (int yy = std::max(0, y - radius); yy <= std::min(mask.height - 1, y + radius); ++yy) {
        for (int xx = std::max(0, x - radius); xx <= std::min(mask.width - 1, x + radius); ++xx) out.set(xx, yy);
      }
    }
  }
  return out;
}

GrayImage inpaint_traced(const GrayImage& image, const Mask& mask_in, const InpaintConfig& cfg,
                         InpaintTrace& trace) {
  cfg.validate();
  if (mask_in.width != image.width || mask_in.height != image.height) {
    throw ShapeError("mask dimensions do not match the image");
  }
  const Mask mask = dilate(mask_in, cfg.dilation);
  const int w = image.width;
  const int h = image.height;
  const std::size_t known = mask.bits.size() - mask.count();
  if (known == 0) throw NoBoundaryError("mask leaves no known pixel");

  trace = InpaintTrace{};
  GrayImage out = image;
  if (known == mask.bits.size()) {
    trace.field.assign(image.pixels.begin(), image.pixels.end());
    return out;
  }

  // Initial guess: mean of known pixels 4-adjacent to the mask.
  const int dx4[4] = {1, -1, 0, 0};
  const int dy4[4] = {0, 0, 1, -1};
  double border_sum = 0.0;
  long border_n = 0;
  int y_lo = h;
  int y_hi = -1;
  std::vector<double> inv_count(static_cast<std::size_t>(w) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int neighbours = 0;
      bool touches_mask = false;
      for (int k = 0; k < 4; ++k) {
        const int nx = x + dx4[k];
        const int ny = y + dy4[k];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        ++neighbours;
        touches_mask = touches_mask || mask.at(nx, ny);
      }
      inv_count[static_cast<std::size_t>(y) * w + x] = 1.0 / neighbours;
      if (mask.at(x, y)) {
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      } else if (touches_mask) {
        border_sum += image.at(x, y);
        ++border_n;
      }
    }
  }
  const double initial = border_sum / static_cast<double>(border_n);

  const int stride = w + 2;
  std::vector<double> cur(static_cast<std::size_t>(stride) * (h + 2), 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      cur[static_cast<std::size_t>(y + 1) * stride + x + 1] = mask.at(x, y) ? initial : image.at(x, y);
    }
  }
  std::vector<double> next = cur;
  const auto& k = simd::kernels();
  simd::JacobiSweep sweep{nullptr, nullptr, inv_count.data(), mask.bits.data(), w, h, y_lo, y_hi + 1};
  for (int it = 0; it < cfg.max_iters; ++it) {
    sweep.cur = cur.data();
    sweep.next = next.data();
    const double change = k.jacobi_sweep(sweep);
    cur.swap(next);
    trace.iterations = it + 1;
    trace.last_change = change;
    if (change < cfg.tol) break;
  }

  trace.field.resize(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = cur[static_cast<std::size_t>(y + 1) * stride + x + 1];
      trace.field[static_cast<std::size_t>(y) * w + x] = v;
      if (mask.at(x, y)) out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
  }
  return out;
}

GrayImage inpaint(const GrayImage& image, const Mask& mask, const InpaintConfig& cfg) {
  InpaintTrace trace;
  return inpaint_traced(image, mask, cfg, trace);
}

}  // namespace pocr
