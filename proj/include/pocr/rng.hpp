#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace pocr {

// SplitMix64 finalizer (Stafford variant 13). Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Derives an independent stream seed from a parent seed and a stream key.
// derive_seed(s, k) = mix64(s ^ mix64(k + 0x9E3779B97F4A7C15)). Streams keyed
// by sample or attempt index make generation order-independent.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// Same, keyed by a section name hashed with 64-bit FNV-1a.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view section) noexcept;

// SplitMix64 generator: state += golden gamma, output = mix64(state).
// All distributions are implemented here rather than with <random> so the
// drawn values are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  // Uniform integer on [0, n); n must be > 0. Lemire's nearly-divisionless method.
  std::uint64_t uniform_int(std::uint64_t n) noexcept;
  // Uniform integer on [lo, hi] inclusive.
  std::int64_t uniform_range(std::int64_t lo, std::int64_t hi) noexcept;
  // Standard normal via Box-Muller; the second variate is cached.
  double normal() noexcept;
  // Index drawn with probability proportional to weights (all >= 0, sum > 0).
  std::size_t weighted(const std::vector<double>& weights) noexcept;

  template <typename T>
  void shuffle(std::vector<T>& v) noexcept {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pocr
