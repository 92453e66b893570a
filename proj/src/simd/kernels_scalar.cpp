#include <cmath>

#include "pocr/simd/kernels.hpp"

namespace pocr::simd {
namespace {

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
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
  double max_change = 0.0;
  for (int y = s.y0; y < s.y1; ++y) {
    const double* up = s.cur + static_cast<std::ptrdiff_t>(y) * stride + 1;
    const double* mid = up + stride;
    const double* down = mid + stride;
    double* out = s.next + static_cast<std::ptrdiff_t>(y + 1) * stride + 1;
    const double* inv = s.inv_count + static_cast<std::ptrdiff_t>(y) * s.width;
    const std::uint8_t* m = s.masked + static_cast<std::ptrdiff_t>(y) * s.width;
    for (int x = 0; x < s.width; ++x) {
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
  return max_change;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
  static const KernelTable table{"scalar", dot, axpy, gemv, gemv_t, ger, jacobi_sweep};
  return table;
}

}  // namespace pocr::simd
