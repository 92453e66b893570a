#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pocr/error.hpp"
#include "pocr/qloss.hpp"
#include "pocr/rng.hpp"

namespace pocr {
namespace {

// Softmax cross-entropy over s * cos(x_i, w_j), computed directly.
double oracle_softmax_loss(const FeatureBatch& b, const CosineClassifier& c, double s) {
  double total = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    std::vector<double> z(c.classes);
    double xn = 0.0;
    for (std::size_t k = 0; k < b.dim; ++k) xn += b.x(i)[k] * b.x(i)[k];
    for (std::size_t j = 0; j < c.classes; ++j) {
      double dot = 0.0, wn = 0.0;
      for (std::size_t k = 0; k < b.dim; ++k) {
        dot += b.x(i)[k] * c.row(j)[k];
        wn += c.row(j)[k] * c.row(j)[k];
      }
      z[j] = s * dot / std::sqrt(xn * wn);
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    total += mx + std::log(sum) - z[b.labels[i]];
  }
  return total / static_cast<double>(b.size());
}

FeatureBatch one_sample(std::vector<double> x, std::size_t label, double quality) {
  FeatureBatch b;
  b.dim = x.size();
  b.features = std::move(x);
  b.labels = {label};
  b.qualities = {quality};
  return b;
}

CosineClassifier identity2() {
  CosineClassifier c(2, 2);
  c.weights = {1, 0, 0, 1};
  return c;
}

TEST(Margin, EndpointsAndMidpoint) {
  const MarginConfig cfg;
  const double six_deg = 6.0 * std::numbers::pi / 180.0;
  EXPECT_NEAR(margin_of(0.5, cfg), 0.0, 1e-12);
  EXPECT_NEAR(margin_of(1.0, cfg), six_deg, 1e-12);
  EXPECT_NEAR(margin_of(1.0, cfg), 0.104719755, 1e-9);
  EXPECT_NEAR(margin_of(0.75, cfg), six_deg / 2, 1e-12);
  EXPECT_EQ(margin_of(0.1, cfg), margin_of(0.5, cfg));
  EXPECT_EQ(margin_of(1.7, cfg), margin_of(1.0, cfg));
}

TEST(Margin, Validation) {
  MarginConfig cfg;
  cfg.unit = MarginConfig::Unit::kRadians;
  EXPECT_THROW(cfg.validate(), ConfigError);  // 6 rad exceeds pi
  cfg.u_m = 0.5;
  EXPECT_NO_THROW(cfg.validate());
  cfg.l_a = 1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Loss, HandEvaluatedSingleSample) {
  MarginConfig cfg;
  cfg.s = 1.0;
  const auto b = one_sample({1.0, 0.0}, 0, 0.5);
  const auto plain = forward(b, identity2(), cfg);
  EXPECT_NEAR(plain.loss, std::log1p(std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(plain.loss, 0.313262, 1e-6);
  const auto penalized = forward(one_sample({1.0, 0.0}, 0, 1.0), identity2(), cfg);
  EXPECT_GT(penalized.loss, plain.loss);
  // Target logit cos(0 + 6 deg), other logit 0.
  EXPECT_NEAR(penalized.loss, std::log1p(std::exp(-std::cos(6.0 * std::numbers::pi / 180.0))), 1e-12);
}

TEST(Loss, ZeroMarginsReduceToSoftmax) {
  MarginConfig cfg;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto inst = make_gradcheck_instance(12, 8, 94, false, seed);
    std::fill(inst.batch.qualities.begin(), inst.batch.qualities.end(), cfg.l_a);
    const auto cache = forward(inst.batch, inst.classifier, cfg);
    EXPECT_NEAR(cache.loss, oracle_softmax_loss(inst.batch, inst.classifier, cfg.s), 1e-10);
    const auto direct = forward_with_margins(inst.batch, inst.classifier, cfg, std::vector<double>(8, 0.0));
    EXPECT_EQ(direct.loss, cache.loss);
  }
}

TEST(Loss, NonDecreasingInQuality) {
  const MarginConfig cfg;
  auto inst = make_gradcheck_instance(8, 1, 94, false, 4);
  double prev = -1.0;
  for (int k = 0; k <= 20; ++k) {
    inst.batch.qualities[0] = 0.4 + 0.65 * k / 20.0;
    const double loss = forward(inst.batch, inst.classifier, cfg).loss;
    EXPECT_GE(loss, prev) << k;
    prev = loss;
  }
}

TEST(Loss, ArgmaxInvariantInScale) {
  auto inst = make_gradcheck_instance(8, 6, 94, false, 5);
  MarginConfig lo, hi;
  lo.s = 2.0;
  hi.s = 64.0;
  const auto a = forward(inst.batch, inst.classifier, lo);
  const auto b = forward(inst.batch, inst.classifier, hi);
  for (std::size_t i = 0; i < inst.batch.size(); ++i) {
    auto row_a = a.probs.begin() + static_cast<std::ptrdiff_t>(i * 94);
    auto row_b = b.probs.begin() + static_cast<std::ptrdiff_t>(i * 94);
    EXPECT_EQ(std::max_element(row_a, row_a + 94) - row_a, std::max_element(row_b, row_b + 94) - row_b);
  }
}

TEST(Loss, InputErrors) {
  const MarginConfig cfg;
  auto b = one_sample({1.0, 0.0}, 2, 0.5);
  EXPECT_THROW(forward(b, identity2(), cfg), ShapeError);
  b.labels = {0};
  b.features[1] = std::nan("");
  EXPECT_THROW(forward(b, identity2(), cfg), NumericsError);
}

TEST(Gradient, VanishesAsTargetCosineApproachesOne) {
  MarginConfig cfg;
  cfg.s = 8.0;
  CosineClassifier opposed(2, 2);
  opposed.weights = {1, 0, -1, 0};
  double prev = 1e300;
  for (double t : {1.0, 0.3, 0.1, 0.01, 0.001}) {
    const auto b = one_sample({1.0, t}, 0, 0.5);
    const auto cache = forward(b, opposed, cfg);
    const auto g = backward(cache, b, opposed, cfg);
    double norm = 0.0;
    for (double v : g.d_features) norm += v * v;
    for (double v : g.d_weights) norm += v * v;
    norm = std::sqrt(norm);
    EXPECT_LT(norm, prev);
    prev = norm;
  }
  EXPECT_LT(prev, 1e-5);
}

TEST(Gradient, MatchesFiniteDifferences) {
  const MarginConfig cfg;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = make_gradcheck_instance(8, 5, 94, false, seed);
    worst = std::max(worst, finite_diff_check(inst.batch, inst.classifier, cfg, 1e-5));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Gradient, FallbackBranchIsCoveredAndCorrect) {
  const MarginConfig cfg;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = make_gradcheck_instance(16, 8, 94, true, seed);
    const auto cache = forward(inst.batch, inst.classifier, cfg);
    EXPECT_GT(std::count(cache.fallback.begin(), cache.fallback.end(), 1), 0);
    EXPECT_LT(std::count(cache.fallback.begin(), cache.fallback.end(), 1), 8);
    EXPECT_LT(finite_diff_check(inst.batch, inst.classifier, cfg, 1e-5), 1e-4);
  }
}

TEST(Gradient, ClampThetaRuleAlsoChecks) {
  MarginConfig cfg;
  cfg.stability = MarginConfig::Stability::kClampTheta;
  const auto inst = make_gradcheck_instance(8, 6, 94, false, 17);
  EXPECT_LT(finite_diff_check(inst.batch, inst.classifier, cfg, 1e-5), 1e-4);
}

TEST(Gradient, ZeroMarginSmoothAndCoarseStep) {
  const MarginConfig cfg;
  auto inst = make_gradcheck_instance(8, 5, 94, false, 21);
  EXPECT_LT(finite_diff_check(inst.batch, inst.classifier, cfg, 1e-3), 1e-2);
  std::fill(inst.batch.qualities.begin(), inst.batch.qualities.end(), 0.0);
  EXPECT_LT(finite_diff_check(inst.batch, inst.classifier, cfg, 1e-5), 1e-6);
  EXPECT_THROW(finite_diff_check(inst.batch, inst.classifier, cfg, 1e-2), ConfigError);
}

TEST(Gradient, StaleCacheIsRejected) {
  const MarginConfig cfg;
  auto inst = make_gradcheck_instance(8, 5, 94, false, 2);
  const auto cache = forward(inst.batch, inst.classifier, cfg);
  inst.batch.features[3] += 0.5;
  EXPECT_THROW(backward(cache, inst.batch, inst.classifier, cfg), ContractError);
}

TEST(Classifier, RandomRowsAreUnitAndZeroRowsBecomeE1) {
  auto c = CosineClassifier::random(94, 16, 3);
  for (std::size_t k = 0; k < c.classes; ++k) {
    double n = 0.0;
    for (std::size_t j = 0; j < c.dim; ++j) n += c.row(k)[j] * c.row(k)[j];
    EXPECT_NEAR(n, 1.0, 1e-12);
  }
  std::fill(c.row(5), c.row(5) + c.dim, 0.0);
  c.renormalize();
  EXPECT_EQ(c.row(5)[0], 1.0);
}

}  // namespace
}  // namespace pocr
