#include <arm_neon.h>

#include <cmath>

#include "pocr/simd/kernels.hpp"

namespace pocr::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double s = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) y[r] = dot(a + r * cols, x, cols);
}

void gemv_t(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
  for (std::size_t r = 0; r < rows; ++r) axpy(x[r], a + r * cols, y, cols);
}

void ger(double* a, std::size_t rows, std::size_t cols, double alpha, const double* x,
         const double* y) {
  for (std::size_t r = 0; r < rows; ++r) axpy(alpha * x[r], y, a + r * cols, cols);
}

double jacobi_sweep(const JacobiSweep& s) {
  const int stride = s.width + 2;
  float64x2_t vmax = vdupq_n_f64(0.0);
  double max_change = 0.0;
  for (int y = s.y0; y < s.y1; ++y) {
    const double* up = s.cur + static_cast<std::ptrdiff_t>(y) * stride + 1;
    const double* mid = up + stride;
    const double* down = mid + stride;
    double* out = s.next + static_cast<std::ptrdiff_t>(y + 1) * stride + 1;
    const double* inv = s.inv_count + static_cast<std::ptrdiff_t>(y) * s.width;
    const std::uint8_t* m = s.masked + static_cast<std::ptrdiff_t>(y) * s.width;
    int x = 0;
    for (; x + 2 <= s.width; x += 2) {
      const float64x2_t c = vld1q_f64(mid + x);
      const float64x2_t vert = vaddq_f64(vld1q_f64(up + x), vld1q_f64(down + x));
      const float64x2_t horz = vaddq_f64(vld1q_f64(mid + x - 1), vld1q_f64(mid + x + 1));
      const float64x2_t v = vmulq_f64(vaddq_f64(vert, horz), vld1q_f64(inv + x));
      const uint64_t lanes[2] = {m[x] ? ~0ULL : 0ULL, m[x + 1] ? ~0ULL : 0ULL};
      const float64x2_t result = vbslq_f64(vld1q_u64(lanes), v, c);
      vmax = vmaxq_f64(vmax, vabsq_f64(vsubq_f64(result, c)));
      vst1q_f64(out + x, result);
    }
    for (; x < s.width; ++x) {
      if (!m[x]) {
        out[x] = mid[x];
        continue;
      }
      const double v = ((up[x] + down[x]) + (mid[x - 1] + mid[x + 1])) * inv[x];
      const double change = std::fabs(v - mid[x]);
      if (change > max_change) max_change = change;
      out[x] = v;
    }
  }
  const double lane_max = vmaxvq_f64(vmax);
  return lane_max > max_change ? lane_max : max_change;
}

}  // namespace

const KernelTable& neon_table() noexcept {
  static const KernelTable table{"neon", dot, axpy, gemv, gemv_t, ger, jacobi_sweep};
  return table;
}

}  // namespace pocr::simd
