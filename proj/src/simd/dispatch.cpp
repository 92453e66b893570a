#include <atomic>
#include <cstdlib>
#include <string_view>

#include "pocr/simd/kernels.hpp"

namespace pocr::simd {

#if defined(POCR_HAVE_AVX2)
const KernelTable& avx2_table() noexcept;
#endif
#if defined(POCR_HAVE_NEON)
const KernelTable& neon_table() noexcept;
#endif

const KernelTable* avx2_kernels() noexcept {
#if defined(POCR_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() noexcept {
#if defined(POCR_HAVE_NEON)
  return &neon_table();  // Advanced SIMD is mandatory on AArch64.
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* table_for(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return &scalar_kernels();
    case Isa::kAvx2:
      return avx2_kernels();
    case Isa::kNeon:
      return neon_kernels();
  }
  return nullptr;
}

Isa initial_isa() noexcept {
  const char* env = std::getenv("POCR_SIMD");
  const std::string_view want = env ? env : "auto";
  if (want == "scalar") return Isa::kScalar;
  if (want == "avx2") return avx2_kernels() ? Isa::kAvx2 : Isa::kScalar;
  if (want == "neon") return neon_kernels() ? Isa::kNeon : Isa::kScalar;
  if (avx2_kernels()) return Isa::kAvx2;
  if (neon_kernels()) return Isa::kNeon;
  return Isa::kScalar;
}

std::atomic<Isa>& current() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

}  // namespace

const KernelTable& kernels() noexcept { return *table_for(current().load(std::memory_order_relaxed)); }

Isa active_isa() noexcept { return current().load(std::memory_order_relaxed); }

bool select_isa(Isa isa) noexcept {
  if (!table_for(isa)) return false;
  current().store(isa, std::memory_order_relaxed);
  return true;
}

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

}  // namespace pocr::simd
