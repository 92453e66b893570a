#include <immintrin.h>

#include <cmath>

#include "pocr/simd/kernels.hpp"

namespace pocr::simd {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
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

// Same expression tree as the scalar sweep and no FMA, so results are
// bit-identical to the reference.
double jacobi_sweep(const JacobiSweep& s) {
  const int stride = s.width + 2;
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d vmax = _mm256_setzero_pd();
  double max_change = 0.0;
  for (int y = s.y0; y < s.y1; ++y) {
    const double* up = s.cur + static_cast<std::ptrdiff_t>(y) * stride + 1;
    const double* mid = up + stride;
    const double* down = mid + stride;
    double* out = s.next + static_cast<std::ptrdiff_t>(y + 1) * stride + 1;
    const double* inv = s.inv_count + static_cast<std::ptrdiff_t>(y) * s.width;
    const std::uint8_t* m = s.masked + static_cast<std::ptrdiff_t>(y) * s.width;
    int x = 0;
    for (; x + 4 <= s.width; x += 4) {
      const __m256d c = _mm256_loadu_pd(mid + x);
      const __m256d vert = _mm256_add_pd(_mm256_loadu_pd(up + x), _mm256_loadu_pd(down + x));
      const __m256d horz = _mm256_add_pd(_mm256_loadu_pd(mid + x - 1), _mm256_loadu_pd(mid + x + 1));
      const __m256d v = _mm256_mul_pd(_mm256_add_pd(vert, horz), _mm256_loadu_pd(inv + x));
      const __m256d sel = _mm256_castsi256_pd(_mm256_cmpgt_epi64(
          _mm256_setr_epi64x(m[x], m[x + 1], m[x + 2], m[x + 3]), _mm256_setzero_si256()));
      const __m256d result = _mm256_blendv_pd(c, v, sel);
      vmax = _mm256_max_pd(vmax, _mm256_andnot_pd(sign, _mm256_sub_pd(result, c)));
      _mm256_storeu_pd(out + x, result);
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
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, vmax);
  for (double l : lanes) max_change = l > max_change ? l : max_change;
  return max_change;
}

}  // namespace

const KernelTable& avx2_table() noexcept {
  static const KernelTable table{"avx2", dot, axpy, gemv, gemv_t, ger, jacobi_sweep};
  return table;
}

}  // namespace pocr::simd
