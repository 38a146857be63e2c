#pragma once

// Axial data and the bipolar Watson distribution: scatter matrix, mean axis,
// dispersion, concentration estimate, normalizing constant, density and
// sampling.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "axisfdr/errors.hpp"
#include "axisfdr/linalg3.hpp"
#include "axisfdr/quadrature.hpp"
#include "axisfdr/rng.hpp"
#include "axisfdr/roots.hpp"

namespace axisfdr {

using linalg3::Mat3;
using linalg3::Vec3;

/// Components below this magnitude are treated as zero when choosing the
/// canonical sign.
inline constexpr double kCanonicalTolerance = 1e-12;

/// Top-eigenvalue gap below which the mean axis is not identifiable.
inline constexpr double kEigenTieTolerance = 1e-9;

/// Unit vector modulo sign. Stored with the first non-negligible component
/// positive, so x and -x compare (and hash) equal.
class UnitAxis {
 public:
  /// Normalizes and canonicalizes; throws DomainError on a zero or
  /// non-finite vector.
  static UnitAxis from_vector(const Vec3& v) {
    const double n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    if (!std::isfinite(n2) || n2 == 0.0)
      throw DomainError("axis must be a finite nonzero vector");
    const double inv = 1.0 / std::sqrt(n2);
    return UnitAxis(Vec3{v[0] * inv, v[1] * inv, v[2] * inv});
  }

  static UnitAxis from_components(double x, double y, double z) {
    return from_vector({x, y, z});
  }

  static UnitAxis e1() { return UnitAxis(Vec3{1.0, 0.0, 0.0}); }
  static UnitAxis e2() { return UnitAxis(Vec3{0.0, 1.0, 0.0}); }
  static UnitAxis e3() { return UnitAxis(Vec3{0.0, 0.0, 1.0}); }

  [[nodiscard]] const Vec3& components() const noexcept { return v_; }
  [[nodiscard]] double operator[](std::size_t i) const noexcept { return v_[i]; }

  /// |cos| of the angle between the two axes.
  [[nodiscard]] double abs_cos(const UnitAxis& other) const noexcept {
    return std::fabs(linalg3::dot(v_, other.v_));
  }

  /// Acute angle between the axes in radians, in [0, pi/2].
  [[nodiscard]] double angle_to(const UnitAxis& other) const noexcept {
    // atan2 form is accurate for nearly parallel axes
    const double c = abs_cos(other);
    const double s = linalg3::norm(linalg3::cross(v_, other.v_));
    return std::atan2(s, c);
  }

  friend bool operator==(const UnitAxis&, const UnitAxis&) = default;

 private:
  explicit UnitAxis(const Vec3& unit) : v_(unit) {
    for (double c : v_) {
      if (std::fabs(c) > kCanonicalTolerance) {
        if (c < 0.0)
          for (double& x : v_) x = -x;
        break;
      }
    }
  }

  Vec3 v_;
};

/// Non-empty ordered collection of axes.
class AxisSample {
 public:
  explicit AxisSample(std::vector<UnitAxis> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw DomainError("axis sample must be nonempty");
  }

  [[nodiscard]] std::size_t size() const noexcept { return axes_.size(); }
  [[nodiscard]] std::span<const UnitAxis> axes() const noexcept { return axes_; }
  [[nodiscard]] const UnitAxis& operator[](std::size_t i) const { return axes_[i]; }
  [[nodiscard]] auto begin() const noexcept { return axes_.begin(); }
  [[nodiscard]] auto end() const noexcept { return axes_.end(); }

 private:
  std::vector<UnitAxis> axes_;
};

/// (1/n) sum x x^T over a sample of axes: symmetric, PSD, unit trace.
class ScatterMatrix {
 public:
  /// Validates symmetry, trace and the diagonal signs.
  static ScatterMatrix from_matrix(const Mat3& m) {
    for (int i = 0; i < 3; ++i) {
      if (m[i][i] < -1e-12) throw DomainError("scatter matrix diagonal must be >= 0");
      for (int j = 0; j < 3; ++j)
        if (!std::isfinite(m[i][j]) || std::fabs(m[i][j] - m[j][i]) > 1e-12)
          throw DomainError("scatter matrix must be finite and symmetric");
    }
    if (std::fabs(linalg3::trace(m) - 1.0) > 1e-10)
      throw DomainError("scatter matrix must have unit trace");
    return ScatterMatrix(m);
  }

  [[nodiscard]] const Mat3& entries() const noexcept { return m_; }
  [[nodiscard]] double operator()(int i, int j) const noexcept { return m_[i][j]; }

 private:
  explicit ScatterMatrix(const Mat3& m) : m_(m) {}
  friend ScatterMatrix scatter_matrix(std::span<const UnitAxis>);
  Mat3 m_;
};

/// Sum of x x^T over a sample; ScatterMatrix without the 1/n. Pooling
/// groups adds these exactly, which keeps the Watson statistic of two
/// identical groups at exactly zero.
[[nodiscard]] inline Mat3 outer_product_sum(std::span<const UnitAxis> axes) noexcept {
  Mat3 sum{};
  for (const auto& a : axes) linalg3::add_outer(sum, a.components());
  return sum;
}

[[nodiscard]] inline ScatterMatrix scatter_matrix(std::span<const UnitAxis> axes) {
  if (axes.empty()) throw DomainError("scatter matrix of an empty sample");
  Mat3 m = outer_product_sum(axes);
  const double inv = 1.0 / static_cast<double>(axes.size());
  for (auto& row : m)
    for (double& x : row) x *= inv;
  return ScatterMatrix(m);
}

[[nodiscard]] inline ScatterMatrix scatter_matrix(const AxisSample& sample) {
  return scatter_matrix(sample.axes());
}

/// Largest eigenvalue and its eigenvector.
struct PrincipalAxis {
  double gamma;
  UnitAxis axis;
  Vec3 eigenvalues;  // descending
};

[[nodiscard]] inline PrincipalAxis principal_axis(const ScatterMatrix& s) {
  const auto eig = linalg3::eigen_symmetric(s.entries());
  if (eig.values[0] - eig.values[1] < kEigenTieTolerance)
    throw DegenerateMeanError(eig.values[0], eig.values[1]);
  return {eig.values[0], UnitAxis::from_vector(eig.vectors[0]), eig.values};
}

// ---------------------------------------------------------------------------
// Normalizing constant and the concentration function A

namespace watson_detail {

inline constexpr double kAsymptoticKappa = 500.0;
inline constexpr quadrature::Tolerance kQuadTol{1e-12, 1e-300, 4000};

// 2 kappa D(kappa), D(kappa) = int_0^1 exp(kappa (t^2 - 1)) dt, from the
// asymptotic series sum_k (2k-1)!! / (2 kappa)^k. Only used for kappa >= 500,
// where the terms shrink by a factor of at least 500 / (2k + 1).
inline double scaled_tail_series(double kappa) noexcept {
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 60; ++k) {
    term *= (2.0 * k - 1.0) / (2.0 * kappa);
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return sum;
}

// D(kappa) by quadrature; the exp(-kappa) scaling keeps the integrand in [0, 1].
inline double scaled_integral(double kappa) {
  return quadrature::integrate(
             [kappa](double t) { return std::exp(kappa * (t * t - 1.0)); }, 0.0, 1.0,
             kQuadTol)
      .value;
}

inline double scaled_second_moment(double kappa) {
  return quadrature::integrate(
             [kappa](double t) { return t * t * std::exp(kappa * (t * t - 1.0)); }, 0.0,
             1.0, kQuadTol)
      .value;
}

inline void check_kappa(double kappa) {
  if (!(kappa >= 0.0) || std::isnan(kappa))
    throw DomainError("concentration must be >= 0");
}

}  // namespace watson_detail

/// log C(kappa), C(kappa) = [2 pi int_0^1 exp(kappa u^2) du]^-1.
[[nodiscard]] inline double log_normalizing_constant(double kappa) {
  watson_detail::check_kappa(kappa);
  if (std::isinf(kappa)) return std::numeric_limits<double>::infinity();
  double log_d;
  if (kappa >= watson_detail::kAsymptoticKappa) {
    log_d = std::log(watson_detail::scaled_tail_series(kappa)) - std::log(2.0 * kappa);
  } else {
    log_d = std::log(watson_detail::scaled_integral(kappa));
  }
  return -std::log(2.0 * std::numbers::pi) - kappa - log_d;
}

/// C(kappa); underflows to 0 for very large kappa, use the log form there.
[[nodiscard]] inline double normalizing_constant(double kappa) {
  return std::exp(log_normalizing_constant(kappa));
}

/// A(kappa) = E[t^2] under density proportional to exp(kappa t^2) on [0, 1];
/// strictly increasing from 1/3 towards 1.
[[nodiscard]] inline double concentration_A(double kappa) {
  watson_detail::check_kappa(kappa);
  if (kappa == 0.0) return 1.0 / 3.0;
  if (std::isinf(kappa)) return 1.0;
  if (kappa >= watson_detail::kAsymptoticKappa) {
    // integration by parts: A = 1 / (2 kappa D) - 1 / (2 kappa)
    return 1.0 / watson_detail::scaled_tail_series(kappa) - 0.5 / kappa;
  }
  return watson_detail::scaled_second_moment(kappa) / watson_detail::scaled_integral(kappa);
}

/// Maximum-likelihood concentration: the kappa with A(kappa) = gamma.
[[nodiscard]] inline double solve_concentration(double gamma) {
  if (std::isnan(gamma) || gamma >= 1.0)
    throw DomainError("top eigenvalue must be < 1 to solve for the concentration");
  if (gamma <= 1.0 / 3.0)
    throw NonConcentratedError("top eigenvalue " + std::to_string(gamma) +
                               " <= 1/3: sample is not concentrated");
  auto g = [gamma](double kappa) { return concentration_A(kappa) - gamma; };
  const double guess = std::max(1.0, 1.0 / (1.0 - gamma));
  const auto root = roots::solve_increasing_positive(g, guess);
  if (!root) return 0.0;  // gamma within rounding of 1/3
  return *root;
}

// ---------------------------------------------------------------------------
// Dispersion summary

/// Why kappa_hat is missing or infinite.
enum class ConcentrationStatus {
  estimated,         // kappa_hat solves A(kappa) = gamma
  perfect,           // s == 0, kappa_hat = +inf
  non_concentrated,  // gamma <= 1/3
  degenerate_mean,   // top eigenvalue not simple
};

struct DispersionSummary {
  double gamma;
  double s;
  double angle_dispersion_deg;
  std::optional<double> kappa_hat;
  ConcentrationStatus status;
  std::optional<UnitAxis> mean_axis;
  std::size_t n;
};

[[nodiscard]] inline double angle_dispersion_deg(double s) {
  return std::asin(std::sqrt(std::clamp(s, 0.0, 1.0))) * 180.0 / std::numbers::pi;
}

[[nodiscard]] inline DispersionSummary dispersion(const AxisSample& sample) {
  const auto s_mat = scatter_matrix(sample);
  const auto eig = linalg3::eigen_symmetric(s_mat.entries());
  DispersionSummary out{};
  out.n = sample.size();
  out.gamma = std::min(eig.values[0], 1.0);
  out.s = 1.0 - out.gamma;
  out.angle_dispersion_deg = angle_dispersion_deg(out.s);
  if (eig.values[0] - eig.values[1] < kEigenTieTolerance) {
    out.status = ConcentrationStatus::degenerate_mean;
    return out;
  }
  out.mean_axis = UnitAxis::from_vector(eig.vectors[0]);
  if (out.s < 1e-14) {
    // identical axes up to rounding
    out.gamma = 1.0;
    out.s = 0.0;
    out.angle_dispersion_deg = 0.0;
    out.kappa_hat = std::numeric_limits<double>::infinity();
    out.status = ConcentrationStatus::perfect;
  } else if (out.gamma <= 1.0 / 3.0) {
    out.status = ConcentrationStatus::non_concentrated;
  } else {
    out.kappa_hat = solve_concentration(out.gamma);
    out.status = ConcentrationStatus::estimated;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Watson density and sampling

struct WatsonParams {
  UnitAxis mean_axis;
  double kappa;

  WatsonParams(UnitAxis mean, double concentration)
      : mean_axis(mean), kappa(concentration) {
    if (!(kappa >= 0.0) || !std::isfinite(kappa))
      throw DomainError("Watson concentration must be finite and >= 0");
  }
};

/// log f(x) = log C(kappa) + kappa (mu^T x)^2 with respect to surface
/// measure on the hemisphere.
[[nodiscard]] inline double watson_log_density(const UnitAxis& x, const WatsonParams& p) {
  const double c = linalg3::dot(x.components(), p.mean_axis.components());
  return log_normalizing_constant(p.kappa) + p.kappa * c * c;
}

/// Draws axes from a fixed Watson law. The cosine u = |mu^T x| has density
/// proportional to exp(kappa u^2) on [0, 1]; it is drawn by rejection from
/// the truncated exponential envelope exp(kappa u) >= exp(kappa u^2), whose
/// acceptance rate stays above 1/2 for every kappa. Longitude is uniform.
class WatsonSampler {
 public:
  explicit WatsonSampler(const WatsonParams& params)
      : kappa_(params.kappa), mu_(params.mean_axis.components()) {
    // orthonormal frame (e1, e2, mu)
    int k = 0;
    for (int i = 1; i < 3; ++i)
      if (std::fabs(mu_[i]) < std::fabs(mu_[k])) k = i;
    Vec3 a{};
    a[k] = 1.0;
    e1_ = linalg3::sub(a, linalg3::scale(mu_, linalg3::dot(a, mu_)));
    e1_ = linalg3::scale(e1_, 1.0 / linalg3::norm(e1_));
    e2_ = linalg3::cross(mu_, e1_);
    envelope_mass_ = -std::expm1(-kappa_);
  }

  /// Cosine of the colatitude, in [0, 1].
  [[nodiscard]] double draw_cosine(Rng& rng) const {
    if (kappa_ == 0.0) return uniform01(rng);
    for (;;) {
      const double v = uniform01(rng);
      // inverse CDF of exp(kappa u) on [0, 1]
      const double u = 1.0 + std::log1p(-envelope_mass_ * v) / kappa_;
      const double w = uniform01_open_low(rng);
      if (std::log(w) <= -kappa_ * u * (1.0 - u)) return std::clamp(u, 0.0, 1.0);
    }
  }

  [[nodiscard]] UnitAxis operator()(Rng& rng) const {
    const double u = draw_cosine(rng);
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    const double st = std::sqrt((1.0 - u) * (1.0 + u));
    const double a = st * std::cos(phi);
    const double b = st * std::sin(phi);
    return UnitAxis::from_vector({a * e1_[0] + b * e2_[0] + u * mu_[0],
                                  a * e1_[1] + b * e2_[1] + u * mu_[1],
                                  a * e1_[2] + b * e2_[2] + u * mu_[2]});
  }

 private:
  double kappa_;
  Vec3 mu_;
  Vec3 e1_{};
  Vec3 e2_{};
  double envelope_mass_ = 0.0;
};

[[nodiscard]] inline AxisSample sample_watson(const WatsonParams& params, std::size_t n,
                                              Rng& rng) {
  if (n == 0) throw DomainError("sample size must be >= 1");
  const WatsonSampler draw(params);
  std::vector<UnitAxis> axes;
  axes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) axes.push_back(draw(rng));
  return AxisSample(std::move(axes));
}

/// n i.i.d. Watson axes; identical output for identical seeds.
[[nodiscard]] inline AxisSample sample_watson(const WatsonParams& params, std::size_t n,
                                              std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0));
  return sample_watson(params, n, rng);
}

}  // namespace axisfdr
