#include "pocr/qloss.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

#include "pocr/error.hpp"
#include "pocr/rng.hpp"
#include "pocr/simd/kernels.hpp"

namespace pocr {

namespace {

constexpr double kSinFloor = 1e-12;

class Fnv {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001B3ULL;
    }
  }
  template <typename T>
  void vec(const std::vector<T>& v) {
    const std::uint64_t n = v.size();
    bytes(&n, sizeof n);
    bytes(v.data(), v.size() * sizeof(T));
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

std::uint64_t fingerprint(const FeatureBatch& batch, const CosineClassifier& clf, const MarginConfig& cfg,
                          const std::vector<double>& margins) {
  Fnv h;
  h.vec(batch.features);
  h.vec(batch.labels);
  h.vec(margins);
  h.vec(clf.weights);
  h.bytes(&cfg.s, sizeof cfg.s);
  const int stab = static_cast<int>(cfg.stability);
  h.bytes(&stab, sizeof stab);
  return h.value();
}

// Writes v / |v| into out and returns |v|; a zero vector maps to e_1.
double normalize_into(const double* v, double* out, std::size_t d) {
  const double norm = std::sqrt(simd::kernels().dot(v, v, d));
  if (norm > 0.0) {
    for (std::size_t k = 0; k < d; ++k) out[k] = v[k] / norm;
  } else {
    std::fill(out, out + d, 0.0);
    if (d > 0) out[0] = 1.0;
  }
  return norm;
}

// Gradient through v -> v/|v|: (g - (u.g) u) / |v|; zero for a zero vector.
void normalize_backward(const double* u, double norm, const double* g, double* out, std::size_t d) {
  if (!(norm > 0.0)) {
    std::fill(out, out + d, 0.0);
    return;
  }
  const double ug = simd::kernels().dot(u, g, d);
  for (std::size_t k = 0; k < d; ++k) out[k] = (g[k] - ug * u[k]) / norm;
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericsError(std::string("non-finite value in ") + what);
  }
}

}  // namespace

void MarginConfig::validate() const {
  if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("loss.s must be positive");
  if (!(l_a < u_a)) throw ConfigError("loss.l_a must be below loss.u_a");
  if (!(l_m <= u_m)) throw ConfigError("loss.l_m must not exceed loss.u_m");
  if (l_m < 0.0) throw ConfigError("loss.l_m must be non-negative");
  if (!(to_radians(u_m) < std::numbers::pi)) throw ConfigError("loss.u_m must be below pi radians");
}

double MarginConfig::to_radians(double m) const noexcept {
  return unit == Unit::kDegrees ? m * std::numbers::pi / 180.0 : m;
}

std::string_view to_string(MarginConfig::Stability s) noexcept {
  return s == MarginConfig::Stability::kClampTheta ? "clamp_theta" : "arcface_fallback";
}

double margin_of(double a, const MarginConfig& cfg) {
  cfg.validate();
  const double q = std::clamp(a, cfg.l_a, cfg.u_a);
  const double m = (cfg.u_m - cfg.l_m) / (cfg.u_a - cfg.l_a) * (q - cfg.l_a) + cfg.l_m;
  return cfg.to_radians(m);
}

CosineClassifier CosineClassifier::random(std::size_t m, std::size_t d, std::uint64_t seed) {
  CosineClassifier clf(m, d);
  Rng rng(seed);
  for (double& w : clf.weights) w = rng.normal();
  clf.renormalize();
  return clf;
}

void CosineClassifier::renormalize() {
  for (std::size_t k = 0; k < classes; ++k) normalize_into(row(k), row(k), dim);
}

std::vector<double> quality_margins(const FeatureBatch& batch, const MarginConfig& cfg) {
  cfg.validate();
  std::vector<double> margins(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) margins[i] = margin_of(batch.qualities[i], cfg);
  return margins;
}

LossCache forward_with_margins(const FeatureBatch& batch, const CosineClassifier& clf,
                               const MarginConfig& cfg, const std::vector<double>& margins) {
  cfg.validate();
  const std::size_t n = batch.size();
  const std::size_t m = clf.classes;
  const std::size_t d = clf.dim;
  if (n == 0) throw ShapeError("empty feature batch");
  if (batch.dim != d || batch.features.size() != n * d) throw ShapeError("feature batch shape mismatch");
  if (clf.weights.size() != m * d || m == 0 || d == 0) throw ShapeError("classifier shape mismatch");
  if (margins.size() != n) throw ShapeError("margin count mismatch");
  for (std::size_t y : batch.labels) {
    if (y >= m) throw ShapeError("label out of range");
  }
  check_finite(batch.features, "features");
  check_finite(clf.weights, "prototypes");
  check_finite(margins, "margins");

  const auto& kern = simd::kernels();
  LossCache c;
  c.n = n;
  c.m = m;
  c.d = d;
  c.xhat.resize(n * d);
  c.xnorm.resize(n);
  c.what.resize(m * d);
  c.wnorm.resize(m);
  c.cosines.resize(n * m);
  c.margins = margins;
  c.dpsi.resize(n);
  c.fallback.assign(n, 0);
  c.probs.resize(n * m);

  for (std::size_t i = 0; i < n; ++i) c.xnorm[i] = normalize_into(batch.x(i), &c.xhat[i * d], d);
  for (std::size_t j = 0; j < m; ++j) c.wnorm[j] = normalize_into(clf.row(j), &c.what[j * d], d);

  double total = 0.0;
  std::vector<double> z(m);
  for (std::size_t i = 0; i < n; ++i) {
    double* cos_i = &c.cosines[i * m];
    kern.gemv(c.what.data(), m, d, &c.xhat[i * d], cos_i);
    const std::size_t y = batch.labels[i];
    const double mi = margins[i];
    const double ct = cos_i[y];
    double psi = ct;
    double dpsi = 1.0;
    if (cfg.stability == MarginConfig::Stability::kArcfaceFallback) {
      if (ct <= std::cos(std::numbers::pi - mi)) {
        psi = ct - mi * std::sin(mi);
        c.fallback[i] = 1;
      } else {
        const double sin_t = std::max(std::sqrt(std::max(0.0, 1.0 - ct * ct)), kSinFloor);
        psi = ct * std::cos(mi) - sin_t * std::sin(mi);
        dpsi = std::cos(mi) + std::sin(mi) * ct / sin_t;
      }
    } else {
      const double theta = std::acos(std::clamp(ct, -1.0, 1.0));
      if (theta + mi >= std::numbers::pi) {
        psi = -1.0;
        dpsi = 0.0;
        c.fallback[i] = 1;
      } else {
        const double sin_t = std::max(std::sin(theta), kSinFloor);
        psi = std::cos(theta + mi);
        dpsi = std::sin(theta + mi) / sin_t;
      }
    }
    c.dpsi[i] = dpsi;

    for (std::size_t j = 0; j < m; ++j) z[j] = cfg.s * cos_i[j];
    z[y] = cfg.s * psi;
    const double zmax = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) sum += std::exp(z[j] - zmax);
    const double lse = zmax + std::log(sum);
    double* p = &c.probs[i * m];
    for (std::size_t j = 0; j < m; ++j) p[j] = std::exp(z[j] - lse);
    total += lse - z[y];
  }
  c.loss = total / static_cast<double>(n);
  if (!std::isfinite(c.loss)) throw NumericsError("non-finite loss");
  c.fingerprint = fingerprint(batch, clf, cfg, margins);
  return c;
}

LossCache forward(const FeatureBatch& batch, const CosineClassifier& clf, const MarginConfig& cfg) {
  return forward_with_margins(batch, clf, cfg, quality_margins(batch, cfg));
}

LossGradients backward(const LossCache& c, const FeatureBatch& batch, const CosineClassifier& clf,
                       const MarginConfig& cfg) {
  if (c.n != batch.size() || c.m != clf.classes || c.d != clf.dim ||
      c.fingerprint != fingerprint(batch, clf, cfg, c.margins)) {
    throw ContractError("loss cache does not match the inputs");
  }
  const auto& kern = simd::kernels();
  const std::size_t n = c.n;
  const std::size_t m = c.m;
  const std::size_t d = c.d;
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> g_what(m * d, 0.0);
  LossGradients out;
  out.d_features.resize(n * d);
  std::vector<double> g_cos(m);
  std::vector<double> g_xhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = batch.labels[i];
    const double* p = &c.probs[i * m];
    for (std::size_t j = 0; j < m; ++j) g_cos[j] = cfg.s * p[j] * inv_n;
    g_cos[y] = cfg.s * (p[y] - 1.0) * inv_n * c.dpsi[i];
    kern.gemv_t(c.what.data(), m, d, g_cos.data(), g_xhat.data());
    normalize_backward(&c.xhat[i * d], c.xnorm[i], g_xhat.data(), &out.d_features[i * d], d);
    kern.ger(g_what.data(), m, d, 1.0, g_cos.data(), &c.xhat[i * d]);
  }
  out.d_weights.resize(m * d);
  for (std::size_t j = 0; j < m; ++j) {
    normalize_backward(&c.what[j * d], c.wnorm[j], &g_what[j * d], &out.d_weights[j * d], d);
  }
  return out;
}

double finite_diff_check(const FeatureBatch& batch, const CosineClassifier& clf, const MarginConfig& cfg,
                         double eps, double floor) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) throw ConfigError("finite-difference eps must be in [1e-7, 1e-3]");
  const LossCache cache = forward(batch, clf, cfg);
  const LossGradients g = backward(cache, batch, clf, cfg);

  double worst = 0.0;
  auto compare = [&](double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  FeatureBatch xb = batch;
  for (std::size_t k = 0; k < xb.features.size(); ++k) {
    const double orig = xb.features[k];
    xb.features[k] = orig + eps;
    const double up = forward(xb, clf, cfg).loss;
    xb.features[k] = orig - eps;
    const double down = forward(xb, clf, cfg).loss;
    xb.features[k] = orig;
    compare(g.d_features[k], (up - down) / (2.0 * eps));
  }
  CosineClassifier wc = clf;
  for (std::size_t k = 0; k < wc.weights.size(); ++k) {
    const double orig = wc.weights[k];
    wc.weights[k] = orig + eps;
    const double up = forward(batch, wc, cfg).loss;
    wc.weights[k] = orig - eps;
    const double down = forward(batch, wc, cfg).loss;
    wc.weights[k] = orig;
    compare(g.d_weights[k], (up - down) / (2.0 * eps));
  }
  return worst;
}

GradCheckInstance make_gradcheck_instance(std::size_t dim, std::size_t n, std::size_t classes, bool fallback,
                                          std::uint64_t seed) {
  Rng rng(seed);
  GradCheckInstance inst;
  inst.classifier = CosineClassifier::random(classes, dim, rng.next_u64());
  FeatureBatch& b = inst.batch;
  b.dim = dim;
  b.features.resize(n * dim);
  b.labels.resize(n);
  b.qualities.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    b.labels[i] = rng.uniform_int(classes);
    b.qualities[i] = rng.uniform();
    const double scale = 0.5 + 2.0 * rng.uniform();
    if (fallback && i < (n + 1) / 2) {
      // High quality so the margin is near its maximum.
      b.qualities[i] = 0.95 + 0.05 * rng.uniform();
      const double* w = inst.classifier.row(b.labels[i]);
      for (std::size_t k = 0; k < dim; ++k) b.x(i)[k] = scale * (-w[k] + 0.01 * rng.normal());
    } else {
      for (std::size_t k = 0; k < dim; ++k) b.x(i)[k] = scale * rng.normal();
    }
  }
  return inst;
}

}  // namespace pocr
