#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pocr/rng.hpp"
#include "pocr/simd/kernels.hpp"

namespace pocr::simd {
namespace {

std::vector<const KernelTable*> variants() {
  std::vector<const KernelTable*> v;
  if (const auto* t = avx2_kernels()) v.push_back(t);
  if (const auto* t = neon_kernels()) v.push_back(t);
  return v;
}

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

// Sizes straddle the vector widths so the tail loops are exercised.
constexpr std::size_t kSizes[] = {1, 3, 4, 5, 7, 8, 9, 16, 31, 64, 257};

TEST(Simd, ActiveTableIsOneOfTheCompiledVariants) {
  const Isa isa = active_isa();
  EXPECT_EQ(kernels().name, isa_name(isa));
  EXPECT_TRUE(select_isa(Isa::kScalar));
  EXPECT_EQ(kernels().name, "scalar");
  select_isa(isa);
}

TEST(Simd, DotMatchesScalar) {
  Rng rng(1);
  for (const auto* t : variants()) {
    for (std::size_t n : kSizes) {
      const auto a = random_vec(n, rng);
      const auto b = random_vec(n, rng);
      const double ref = scalar_kernels().dot(a.data(), b.data(), n);
      EXPECT_NEAR(t->dot(a.data(), b.data(), n), ref, 1e-12 * (1.0 + std::abs(ref) + n)) << t->name << " n=" << n;
    }
  }
}

TEST(Simd, AxpyMatchesScalar) {
  Rng rng(2);
  for (const auto* t : variants()) {
    for (std::size_t n : kSizes) {
      const auto x = random_vec(n, rng);
      auto y1 = random_vec(n, rng);
      auto y2 = y1;
      scalar_kernels().axpy(0.37, x.data(), y1.data(), n);
      t->axpy(0.37, x.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-14) << t->name;
    }
  }
}

TEST(Simd, GemvAndTransposeMatchScalar) {
  Rng rng(3);
  for (const auto* t : variants()) {
    for (std::size_t rows : {1u, 5u, 94u}) {
      for (std::size_t cols : kSizes) {
        const auto a = random_vec(rows * cols, rng);
        const auto x = random_vec(cols, rng);
        const auto xr = random_vec(rows, rng);
        std::vector<double> y1(rows), y2(rows), z1(cols), z2(cols);
        scalar_kernels().gemv(a.data(), rows, cols, x.data(), y1.data());
        t->gemv(a.data(), rows, cols, x.data(), y2.data());
        for (std::size_t i = 0; i < rows; ++i) EXPECT_NEAR(y1[i], y2[i], 1e-12 * (1.0 + cols));
        scalar_kernels().gemv_t(a.data(), rows, cols, xr.data(), z1.data());
        t->gemv_t(a.data(), rows, cols, xr.data(), z2.data());
        for (std::size_t j = 0; j < cols; ++j) EXPECT_NEAR(z1[j], z2[j], 1e-12 * (1.0 + rows));
      }
    }
  }
}

TEST(Simd, GerMatchesScalar) {
  Rng rng(4);
  for (const auto* t : variants()) {
    for (std::size_t cols : kSizes) {
      const std::size_t rows = 6;
      auto a1 = random_vec(rows * cols, rng);
      auto a2 = a1;
      const auto x = random_vec(rows, rng);
      const auto y = random_vec(cols, rng);
      scalar_kernels().ger(a1.data(), rows, cols, -0.5, x.data(), y.data());
      t->ger(a2.data(), rows, cols, -0.5, x.data(), y.data());
      for (std::size_t i = 0; i < a1.size(); ++i) EXPECT_NEAR(a1[i], a2[i], 1e-14);
    }
  }
}

TEST(Simd, JacobiSweepIsBitIdenticalToScalar) {
  Rng rng(5);
  for (const auto* t : variants()) {
    for (int width : {1, 3, 4, 5, 9, 17, 40}) {
      const int height = 7;
      const std::size_t padded = static_cast<std::size_t>(width + 2) * (height + 2);
      std::vector<double> cur(padded, 0.0);
      std::vector<double> inv(static_cast<std::size_t>(width) * height);
      std::vector<std::uint8_t> mask(inv.size());
      for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
          cur[static_cast<std::size_t>(y + 1) * (width + 2) + x + 1] = 255.0 * rng.uniform();
          const int nb = (x > 0) + (x < width - 1) + (y > 0) + (y < height - 1);
          inv[static_cast<std::size_t>(y) * width + x] = nb ? 1.0 / nb : 0.0;
          mask[static_cast<std::size_t>(y) * width + x] = rng.uniform() < 0.5;
        }
      }
      std::vector<double> n1 = cur, n2 = cur;
      const double c1 = scalar_kernels().jacobi_sweep({cur.data(), n1.data(), inv.data(), mask.data(), width, height, 1, height - 1});
      const double c2 = t->jacobi_sweep({cur.data(), n2.data(), inv.data(), mask.data(), width, height, 1, height - 1});
      EXPECT_EQ(n1, n2) << t->name << " width=" << width;
      EXPECT_EQ(c1, c2);
    }
  }
}

}  // namespace
}  // namespace pocr::simd
