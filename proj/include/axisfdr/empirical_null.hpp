#pragma once

// Scaled chi-squared empirical null fitted to the bulk of a histogram of
// test statistics, tail-ratio FDR estimates and threshold selection.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "axisfdr/errors.hpp"
#include "axisfdr/linalg3.hpp"
#include "axisfdr/special_functions.hpp"
#include "axisfdr/volume.hpp"

namespace axisfdr {

inline constexpr double kDefaultBinWidth = 0.2;
inline constexpr double kDefaultFitUpper = 0.9;

/// Counts over [lower_edge, lower_edge + bins * bin_width); bin k is the
/// half-open interval [lower_edge + k w, lower_edge + (k + 1) w).
struct Histogram {
  double bin_width = kDefaultBinWidth;
  double lower_edge = 0.0;
  std::vector<std::uint64_t> counts;
  std::uint64_t total = 0;

  [[nodiscard]] double edge(std::size_t k) const noexcept {
    return lower_edge + static_cast<double>(k) * bin_width;
  }
  [[nodiscard]] double midpoint(std::size_t k) const noexcept {
    return lower_edge + (static_cast<double>(k) + 0.5) * bin_width;
  }
};

[[nodiscard]] inline Histogram build_histogram(std::span<const double> values,
                                               double bin_width = kDefaultBinWidth) {
  if (values.empty()) throw DomainError("histogram of an empty sample");
  if (!(bin_width > 0.0) || !std::isfinite(bin_width)) throw DomainError("bin width must be positive");
  double max_value = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw DomainError("histogram values must be finite and >= 0");
    max_value = std::max(max_value, v);
  }
  Histogram h;
  h.bin_width = bin_width;
  h.counts.assign(static_cast<std::size_t>(std::floor(max_value / bin_width)) + 1, 0);
  for (double v : values) {
    auto k = static_cast<std::size_t>(std::floor(v / bin_width));
    h.counts[std::min(k, h.counts.size() - 1)] += 1;
  }
  h.total = values.size();
  return h;
}

/// Sample quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7).
[[nodiscard]] inline double empirical_quantile(std::span<const double> values, double p) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double x_lo = v[lo];
  if (lo + 1 >= v.size()) return x_lo;
  const double x_hi = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return x_lo + (h - static_cast<double>(lo)) * (x_hi - x_lo);
}

// ---------------------------------------------------------------------------
// null models

/// a * chi2(nu): the theoretical null is a = 1, nu = nu0.
struct NullModel {
  enum class Kind { theoretical, empirical };
  Kind kind = Kind::theoretical;
  double scale = 1.0;
  double df = 2.0;

  static NullModel theoretical(double df, double scale = 1.0) {
    return {Kind::theoretical, scale, df};
  }
  static NullModel empirical(double scale, double df) { return {Kind::empirical, scale, df}; }

  /// P(T >= u) under the null.
  [[nodiscard]] double survival(double u) const {
    if (u <= 0.0) return 1.0;
    return chisq_sf(df, u / scale);
  }
};

[[nodiscard]] inline const char* to_string(NullModel::Kind k) noexcept {
  return k == NullModel::Kind::theoretical ? "theoretical" : "empirical";
}

/// Density of a * chi2(nu) at t.
[[nodiscard]] inline double scaled_chisq_density(double t, double a, double nu) {
  if (!(a > 0.0) || !(nu > 0.0)) throw DomainError("scale and df must be positive");
  if (std::isnan(t) || t < 0.0) throw DomainError("density argument must be >= 0");
  if (t == 0.0 && nu < 2.0) throw DomainError("density is singular at 0 when df < 2");
  const double half = 0.5 * nu;
  if (t == 0.0) return nu == 2.0 ? 0.5 / a : 0.0;
  return std::exp(-t / (2.0 * a) + (half - 1.0) * std::log(t) - half * std::log(2.0 * a) -
                  log_gamma(half));
}

struct EmpiricalNullFit {
  double a = 1.0;        // scale
  double nu = 2.0;       // degrees of freedom
  double p0 = 1.0;       // null fraction, clamped to (0, 1]
  double p0_raw = 1.0;   // before clamping
  double fit_limit = 0.0;  // upper end of the fitting interval (T90)
  double intercept = 0.0;
  double coef_t = 0.0;
  double coef_log_t = 0.0;
  double deviance = 0.0;
  double se_a = 0.0;
  double se_nu = 0.0;
  int iterations = 0;
  bool converged = false;
  std::size_t bins_used = 0;
  double bin_width = kDefaultBinWidth;
  std::uint64_t total = 0;

  [[nodiscard]] NullModel model() const { return NullModel::empirical(a, nu); }
};

[[nodiscard]] inline double empirical_null_density(double t, const EmpiricalNullFit& fit) {
  return scaled_chisq_density(t, fit.a, fit.nu);
}

namespace null_detail {

// Solves A x = b for symmetric positive definite A; returns false when A is
// not numerically positive definite.
inline bool cholesky_solve(const linalg3::Mat3& a, const linalg3::Vec3& b, linalg3::Vec3& x,
                           linalg3::Mat3* inverse = nullptr) {
  linalg3::Mat3 l{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i][j];
      for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
      if (i == j) {
        if (!(s > 0.0)) return false;
        l[i][i] = std::sqrt(s);
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  auto solve = [&](const linalg3::Vec3& rhs) {
    linalg3::Vec3 y{}, out{};
    for (int i = 0; i < 3; ++i) {
      double s = rhs[i];
      for (int k = 0; k < i; ++k) s -= l[i][k] * y[k];
      y[i] = s / l[i][i];
    }
    for (int i = 2; i >= 0; --i) {
      double s = y[i];
      for (int k = i + 1; k < 3; ++k) s -= l[k][i] * out[k];
      out[i] = s / l[i][i];
    }
    return out;
  };
  x = solve(b);
  if (inverse) {
    for (int c = 0; c < 3; ++c) {
      linalg3::Vec3 e{};
      e[c] = 1.0;
      const auto col = solve(e);
      for (int r = 0; r < 3; ++r) (*inverse)[r][c] = col[r];
    }
  }
  return true;
}

inline double poisson_deviance(std::span<const double> y, std::span<const double> mu) {
  double d = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    d += (y[i] > 0.0 ? y[i] * std::log(y[i] / mu[i]) : 0.0) - (y[i] - mu[i]);
  return 2.0 * d;
}

}  // namespace null_detail

inline constexpr int kIrlsMaxIterations = 100;
inline constexpr double kIrlsTolerance = 1e-10;
inline constexpr std::size_t kMinFitBins = 5;

/// Poisson regression of bin counts on (1, t, log t) at bin midpoints in
/// (0, fit_limit]; log expected count = log(N w p0 f0(t)) for
/// f0 = a chi2(nu). Zero-count bins inside the interval are kept.
[[nodiscard]] inline EmpiricalNullFit fit_empirical_null(const Histogram& hist, double fit_limit) {
  if (!(hist.bin_width > 0.0) || hist.total == 0) throw DomainError("invalid histogram");
  std::vector<linalg3::Vec3> x;
  std::vector<double> y;
  std::size_t positive = 0;
  for (std::size_t k = 0; k < hist.counts.size(); ++k) {
    const double t = hist.midpoint(k);
    if (t <= 0.0 || t > fit_limit) continue;
    x.push_back({1.0, t, std::log(t)});
    y.push_back(static_cast<double>(hist.counts[k]));
    if (hist.counts[k] > 0) ++positive;
  }
  if (positive < kMinFitBins)
    throw FitFailure("empirical null fit needs at least " + std::to_string(kMinFitBins) +
                     " nonempty bins below the fit limit, found " + std::to_string(positive));

  const std::size_t m = y.size();
  std::vector<double> mu(m), eta(m);
  for (std::size_t i = 0; i < m; ++i) {
    mu[i] = y[i] + 0.5;
    eta[i] = std::log(mu[i]);
  }

  auto weighted_system = [&](const std::vector<double>& w, const std::vector<double>* z,
                             linalg3::Mat3& a, linalg3::Vec3& b) {
    a = {};
    b = {};
    for (std::size_t i = 0; i < m; ++i) {
      for (int r = 0; r < 3; ++r) {
        if (z) b[r] += w[i] * (*z)[i] * x[i][r];
        for (int c = 0; c < 3; ++c) a[r][c] += w[i] * x[i][r] * x[i][c];
      }
    }
  };

  linalg3::Vec3 beta{};
  bool have_beta = false;
  double deviance = std::numeric_limits<double>::infinity();
  EmpiricalNullFit fit;
  std::vector<double> z(m);
  for (int iter = 1; iter <= kIrlsMaxIterations; ++iter) {
    for (std::size_t i = 0; i < m; ++i) z[i] = eta[i] + (y[i] - mu[i]) / mu[i];
    linalg3::Mat3 a;
    linalg3::Vec3 b;
    weighted_system(mu, &z, a, b);
    linalg3::Vec3 next;
    if (!null_detail::cholesky_solve(a, b, next))
      throw FitFailure("empirical null fit: singular weighted design at iteration " +
                       std::to_string(iter));

    // step halving keeps the deviance from increasing
    std::vector<double> eta_next(m), mu_next(m);
    double dev_next = std::numeric_limits<double>::infinity();
    for (int halving = 0; halving < 30; ++halving) {
      bool finite = true;
      for (std::size_t i = 0; i < m; ++i) {
        eta_next[i] = linalg3::dot(x[i], next);
        mu_next[i] = std::exp(eta_next[i]);
        if (!std::isfinite(mu_next[i]) || mu_next[i] <= 0.0) finite = false;
      }
      if (finite) dev_next = null_detail::poisson_deviance(y, mu_next);
      if (finite && (!have_beta || dev_next <= deviance * (1.0 + 1e-12) + 1e-12)) break;
      if (!have_beta) break;
      for (int r = 0; r < 3; ++r) next[r] = 0.5 * (next[r] + beta[r]);
    }
    if (!std::isfinite(dev_next))
      throw FitFailure("empirical null fit: IRLS diverged at iteration " + std::to_string(iter));

    double change = 0.0;
    for (int r = 0; r < 3; ++r) change = std::max(change, std::fabs(next[r] - beta[r]));
    beta = next;
    have_beta = true;
    eta = eta_next;
    mu = mu_next;
    deviance = dev_next;
    fit.iterations = iter;
    if (change < kIrlsTolerance) {
      fit.converged = true;
      break;
    }
  }

  fit.intercept = beta[0];
  fit.coef_t = beta[1];
  fit.coef_log_t = beta[2];
  fit.deviance = deviance;
  fit.bins_used = m;
  fit.fit_limit = fit_limit;
  fit.bin_width = hist.bin_width;
  fit.total = hist.total;
  if (!(beta[1] < 0.0))
    throw FitFailure("empirical null fit does not decay (coefficient of t = " +
                     std::to_string(beta[1]) + ")");
  fit.a = -1.0 / (2.0 * beta[1]);
  fit.nu = 2.0 * (beta[2] + 1.0);
  if (!(fit.nu > 0.0))
    throw FitFailure("empirical null fit gives non-positive degrees of freedom " +
                     std::to_string(fit.nu));
  const double n_w = static_cast<double>(hist.total) * hist.bin_width;
  const double log_p0 = beta[0] - std::log(n_w) + 0.5 * fit.nu * std::log(2.0 * fit.a) +
                        log_gamma(0.5 * fit.nu);
  fit.p0_raw = std::exp(log_p0);
  fit.p0 = std::min(fit.p0_raw, 1.0);

  linalg3::Mat3 info, cov{};
  linalg3::Vec3 unused;
  weighted_system(mu, nullptr, info, unused);
  if (null_detail::cholesky_solve(info, {0.0, 0.0, 0.0}, unused, &cov)) {
    fit.se_a = std::sqrt(cov[1][1]) / (2.0 * beta[1] * beta[1]);
    fit.se_nu = 2.0 * std::sqrt(cov[2][2]);
  }
  return fit;
}

struct NullFitOptions {
  double bin_width = kDefaultBinWidth;
  double fit_upper = kDefaultFitUpper;  // quantile level of the fit limit
};

/// Histogram the values and fit up to their fit_upper sample quantile.
[[nodiscard]] inline EmpiricalNullFit fit_empirical_null(std::span<const double> values,
                                                         NullFitOptions options = {}) {
  if (!(options.fit_upper > 0.0 && options.fit_upper <= 1.0))
    throw DomainError("fit_upper must lie in (0, 1]");
  const auto hist = build_histogram(values, options.bin_width);
  return fit_empirical_null(hist, empirical_quantile(values, options.fit_upper));
}

// ---------------------------------------------------------------------------
// FDR curves

struct FdrCurve {
  std::vector<double> thresholds;         // increasing
  std::vector<double> fdr_raw;            // p0 S0(u) / max(S(u), 1/N)
  std::vector<double> fdr;                // clamped to [0, 1]
  std::vector<std::uint64_t> rejections;  // R(u)
  NullModel null;
  double p0_used = 1.0;
  std::uint64_t total = 0;
};

/// Sorted distinct values: the infimum defining u_alpha is attained at one.
[[nodiscard]] inline std::vector<double> observed_grid(std::span<const double> values) {
  std::vector<double> g(values.begin(), values.end());
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

[[nodiscard]] inline std::vector<double> uniform_grid(double lo, double hi, double step) {
  if (!(step > 0.0) || !(hi >= lo)) throw DomainError("invalid grid bounds");
  std::vector<double> g;
  const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  g.reserve(n);
  for (std::size_t i = 0; i < n; ++i) g.push_back(lo + static_cast<double>(i) * step);
  return g;
}

[[nodiscard]] inline FdrCurve fdr_curve(std::span<const double> values, const NullModel& null,
                                        double p0, std::span<const double> grid) {
  if (values.empty()) throw DomainError("FDR curve of an empty sample");
  if (grid.empty()) throw DomainError("FDR curve needs a nonempty threshold grid");
  if (!(p0 > 0.0 && p0 <= 1.0)) throw DomainError("p0 must lie in (0, 1]");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw DomainError("threshold grid must be increasing");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  FdrCurve c;
  c.thresholds.assign(grid.begin(), grid.end());
  c.null = null;
  c.p0_used = p0;
  c.total = sorted.size();
  c.fdr_raw.reserve(grid.size());
  c.fdr.reserve(grid.size());
  c.rejections.reserve(grid.size());
  for (double u : grid) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), u);
    const auto r = static_cast<std::uint64_t>(sorted.end() - first);
    const double s_emp = std::max(static_cast<double>(r) / n, 1.0 / n);
    const double raw = p0 * null.survival(u) / s_emp;
    c.rejections.push_back(r);
    c.fdr_raw.push_back(raw);
    c.fdr.push_back(std::clamp(raw, 0.0, 1.0));
  }
  return c;
}

/// FDR curve on the observed-value grid.
[[nodiscard]] inline FdrCurve fdr_curve(std::span<const double> values, const NullModel& null,
                                        double p0) {
  const auto grid = observed_grid(values);
  return fdr_curve(values, null, p0, grid);
}

/// Smallest grid threshold whose estimated FDR is at most alpha.
[[nodiscard]] inline std::optional<double> select_threshold(const FdrCurve& curve, double alpha) {
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
    if (curve.fdr[i] <= alpha) return curve.thresholds[i];
  return std::nullopt;
}

struct Discoveries {
  std::size_t count = 0;
  std::vector<std::size_t> voxels;  // ascending
};

/// In-mask voxels with value >= u.
[[nodiscard]] inline Discoveries count_discoveries(const StatisticVolume& values, const Mask& mask,
                                                   double u) {
  require_same_geometry(values.geometry(), mask.geometry(), "statistic vs mask");
  Discoveries d;
  for (std::size_t v = 0; v < values.size(); ++v)
    if (mask.contains(v) && values[v] >= u) d.voxels.push_back(v);
  d.count = d.voxels.size();
  return d;
}

/// Finite in-mask values in voxel order.
[[nodiscard]] inline std::vector<double> masked_values(const StatisticVolume& values,
                                                       const Mask& mask) {
  require_same_geometry(values.geometry(), mask.geometry(), "statistic vs mask");
  std::vector<double> out;
  out.reserve(mask.count());
  for (std::size_t v = 0; v < values.size(); ++v)
    if (mask.contains(v) && std::isfinite(values[v])) out.push_back(values[v]);
  return out;
}

}  // namespace axisfdr
