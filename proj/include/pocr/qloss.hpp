#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace pocr {

struct MarginConfig {
  enum class Unit { kDegrees, kRadians };
  enum class Stability { kArcfaceFallback, kClampTheta };

  double s = 64.0;
  double l_a = 0.5;
  double u_a = 1.0;
  double l_m = 0.0;
  double u_m = 6.0;
  Unit unit = Unit::kDegrees;
  Stability stability = Stability::kArcfaceFallback;

  // Throws ConfigError: s <= 0, l_a >= u_a, l_m > u_m, negative l_m, or a
  // converted u_m >= pi.
  void validate() const;
  double to_radians(double m) const noexcept;
};

std::string_view to_string(MarginConfig::Stability s) noexcept;

// Linear quality-to-margin map in radians, with a clamped into [l_a, u_a].
double margin_of(double a, const MarginConfig& cfg);

// M x d prototype matrix, row-major, rows kept at unit norm.
struct CosineClassifier {
  std::size_t classes = 0;
  std::size_t dim = 0;
  std::vector<double> weights;

  CosineClassifier() = default;
  CosineClassifier(std::size_t m, std::size_t d) : classes(m), dim(d), weights(m * d, 0.0) {}

  // Gaussian rows, normalized.
  static CosineClassifier random(std::size_t m, std::size_t d, std::uint64_t seed);
  double* row(std::size_t k) noexcept { return weights.data() + k * dim; }
  const double* row(std::size_t k) const noexcept { return weights.data() + k * dim; }
  // Zero rows become e_1.
  void renormalize();
};

// N embeddings, stored sample-major: features[i*dim + k] is coordinate k of
// x_i (column i of X).
struct FeatureBatch {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<std::size_t> labels;
  std::vector<double> qualities;

  std::size_t size() const noexcept { return labels.size(); }
  const double* x(std::size_t i) const noexcept { return features.data() + i * dim; }
  double* x(std::size_t i) noexcept { return features.data() + i * dim; }
};

struct LossCache {
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t d = 0;
  std::vector<double> xhat;        // n x d
  std::vector<double> xnorm;       // n
  std::vector<double> what;        // m x d
  std::vector<double> wnorm;       // m
  std::vector<double> cosines;     // n x m
  std::vector<double> margins;     // n, radians
  std::vector<double> dpsi;        // n, d psi / d cos at the target
  std::vector<std::uint8_t> fallback;  // n, 1 when the stability rule fired
  std::vector<double> probs;       // n x m
  double loss = 0.0;
  std::uint64_t fingerprint = 0;
};

struct LossGradients {
  std::vector<double> d_features;  // n x d, same layout as FeatureBatch
  std::vector<double> d_weights;   // m x d
};

// Per-sample margins from the stored qualities.
std::vector<double> quality_margins(const FeatureBatch& batch, const MarginConfig& cfg);

// Target logit s*psi(theta_y, m_i), others s*cos(theta_j), mean negative log
// softmax. Features and prototypes are normalized inside. Throws
// NumericsError on non-finite input and ShapeError on inconsistent shapes or
// labels out of range.
LossCache forward_with_margins(const FeatureBatch& batch, const CosineClassifier& clf,
                               const MarginConfig& cfg, const std::vector<double>& margins);
LossCache forward(const FeatureBatch& batch, const CosineClassifier& clf, const MarginConfig& cfg);

// Exact gradient of the forward pass that produced `cache`, with respect to
// the raw (unnormalized) features and prototypes. Margins are constants.
// Throws ContractError if the inputs differ from those seen by forward.
LossGradients backward(const LossCache& cache, const FeatureBatch& batch, const CosineClassifier& clf,
                       const MarginConfig& cfg);

// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over every
// feature and prototype coordinate, using central differences of step eps.
// eps must lie in [1e-7, 1e-3] (ConfigError otherwise).
inline constexpr double kGradCheckFloor = 1e-3;
double finite_diff_check(const FeatureBatch& batch, const CosineClassifier& clf, const MarginConfig& cfg,
                         double eps, double floor = kGradCheckFloor);

struct GradCheckInstance {
  FeatureBatch batch;
  CosineClassifier classifier;
};

// Random instance: Gaussian features and prototypes, uniform labels and
// qualities in [0, 1]. With `fallback`, the first half of the samples are
// placed near the negated target prototype (cosine about -0.999) so that a
// margin of more than ~2.6 degrees takes the stability branch.
GradCheckInstance make_gradcheck_instance(std::size_t dim, std::size_t n, std::size_t classes, bool fallback,
                                          std::uint64_t seed);

}  // namespace pocr
