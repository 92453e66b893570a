#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Data-parallel inner loops used by the trainer, the loss and the inpainter.
// Every kernel has a scalar reference implementation; vector variants (AVX2+FMA
// on x86-64, NEON on AArch64) are selected once at runtime and are
// equivalence-tested against the reference.

namespace pocr::simd {

// One Jacobi relaxation step over a zero-padded grid of (width+2) x (height+2)
// doubles. For interior pixel (x, y) at padded index p = (y+1)*(width+2)+(x+1):
//   next[p] = masked ? ((up + down) + (left + right)) * inv_count : cur[p]
// inv_count is 1/(number of in-bounds 4-neighbours), so padding contributes
// zero. Only rows [y0, y1) are visited; next must already hold cur outside
// the visited band. Returns max |next - cur| over masked pixels.
struct JacobiSweep {
  const double* cur;
  double* next;
  const double* inv_count;     // width*height, unpadded
  const std::uint8_t* masked;  // width*height, unpadded, 0 or 1
  int width;
  int height;
  int y0;
  int y1;
};

struct KernelTable {
  std::string_view name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = A x, A row-major rows x cols
  void (*gemv)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // y = A^T x, x has rows entries, y has cols entries
  void (*gemv_t)(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
  // A += alpha * x y^T
  void (*ger)(double* a, std::size_t rows, std::size_t cols, double alpha, const double* x,
              const double* y);
  double (*jacobi_sweep)(const JacobiSweep& sweep);
};

enum class Isa { kScalar, kAvx2, kNeon };

const KernelTable& scalar_kernels() noexcept;
// nullptr when the variant was not compiled in or the CPU lacks the extension.
const KernelTable* avx2_kernels() noexcept;
const KernelTable* neon_kernels() noexcept;

// Active table. Chosen on first use: the widest supported variant, unless the
// environment variable POCR_SIMD is "scalar" (or names an unsupported ISA).
const KernelTable& kernels() noexcept;
Isa active_isa() noexcept;
// Forces a variant; returns false (and leaves the selection unchanged) when
// it is unavailable. Not thread-safe against concurrent kernel calls.
bool select_isa(Isa isa) noexcept;
std::string_view isa_name(Isa isa) noexcept;

}  // namespace pocr::simd
