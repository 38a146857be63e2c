#pragma once

// Log-gamma, regularized incomplete gamma and beta functions, and the
// chi-squared and F distributions built on them. Every probability is also
// available in log form so that extreme tails do not saturate.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "axisfdr/errors.hpp"
#include "axisfdr/roots.hpp"

namespace axisfdr {

namespace special_detail {

inline constexpr double kEps = 1e-16;
inline constexpr double kTiny = 1e-300;
inline constexpr int kMaxIter = 100000;

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + " must be finite");
}

inline void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw DomainError(std::string(what) + " must be positive and finite");
}

inline void require_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("probability must lie in [0, 1]");
}

// log(1 - exp(x)) for x <= 0
inline double log1m_exp(double x) noexcept {
  return x > -std::numbers::ln2 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

}  // namespace special_detail

/// ln Gamma(x) for x > 0 (Lanczos, g = 7, nine terms).
[[nodiscard]] inline double log_gamma(double x) {
  special_detail::require_positive(x, "log_gamma argument");
  if (x < 0.5) {
    // reflection
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  }
  static constexpr double kCoef[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  const double z = x - 1.0;
  double sum = kCoef[0];
  for (int i = 1; i < 9; ++i) sum += kCoef[i] / (z + i);
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(sum);
}

namespace special_detail {

struct LogPair {
  double log_lower;  // log P
  double log_upper;  // log Q
};

// Regularized incomplete gamma in log form: series below a + 1, Lentz
// continued fraction above.
inline LogPair log_gamma_pq(double a, double x) {
  if (x == 0.0) return {-std::numeric_limits<double>::infinity(), 0.0};
  if (std::isinf(x)) return {0.0, -std::numeric_limits<double>::infinity()};
  const double prefix = -x + a * std::log(x) - log_gamma(a);
  if (x < a + 1.0) {
    double ap = a;
    double del = 1.0 / a;
    double sum = del;
    for (int n = 0; n < kMaxIter; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * kEps) break;
    }
    const double log_p = prefix + std::log(sum);
    return {log_p, log1m_exp(log_p)};
  }
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  const double log_q = prefix + std::log(h);
  return {log1m_exp(log_q), log_q};
}

inline double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

// log I_x(a, b) with y = 1 - x supplied separately to avoid cancellation.
inline double log_beta_inc(double a, double b, double x, double y) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  if (y <= 0.0) return 0.0;
  const double log_beta = log_gamma(a) + log_gamma(b) - log_gamma(a + b);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return a * std::log(x) + b * std::log(y) - log_beta +
           std::log(beta_continued_fraction(a, b, x)) - std::log(a);
  }
  const double log_upper = b * std::log(y) + a * std::log(x) - log_beta +
                           std::log(beta_continued_fraction(b, a, y)) - std::log(b);
  return log1m_exp(log_upper);
}

}  // namespace special_detail

/// Regularized lower incomplete gamma P(a, x).
[[nodiscard]] inline double gamma_p(double a, double x) {
  special_detail::require_positive(a, "shape");
  if (!(x >= 0.0)) throw DomainError("incomplete gamma argument must be >= 0");
  return std::exp(special_detail::log_gamma_pq(a, x).log_lower);
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
[[nodiscard]] inline double gamma_q(double a, double x) {
  special_detail::require_positive(a, "shape");
  if (!(x >= 0.0)) throw DomainError("incomplete gamma argument must be >= 0");
  return std::exp(special_detail::log_gamma_pq(a, x).log_upper);
}

/// Regularized incomplete beta I_x(a, b).
[[nodiscard]] inline double beta_inc(double a, double b, double x) {
  special_detail::require_positive(a, "beta parameter a");
  special_detail::require_positive(b, "beta parameter b");
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("incomplete beta argument must lie in [0, 1]");
  return std::exp(special_detail::log_beta_inc(a, b, x, 1.0 - x));
}

// ---------------------------------------------------------------------------
// chi-squared

[[nodiscard]] inline double chisq_log_pdf(double df, double x) {
  special_detail::require_positive(df, "degrees of freedom");
  if (!(x >= 0.0)) throw DomainError("chi-squared argument must be >= 0");
  const double k = 0.5 * df;
  if (x == 0.0) {
    if (df < 2.0) return std::numeric_limits<double>::infinity();
    if (df > 2.0) return -std::numeric_limits<double>::infinity();
    return -std::numbers::ln2;
  }
  return (k - 1.0) * std::log(x) - 0.5 * x - k * std::numbers::ln2 - log_gamma(k);
}

[[nodiscard]] inline double chisq_pdf(double df, double x) {
  return std::exp(chisq_log_pdf(df, x));
}

[[nodiscard]] inline double chisq_log_cdf(double df, double x) {
  special_detail::require_positive(df, "degrees of freedom");
  if (!(x >= 0.0)) throw DomainError("chi-squared argument must be >= 0");
  if (df == 2.0) return special_detail::log1m_exp(-0.5 * x);
  return special_detail::log_gamma_pq(0.5 * df, 0.5 * x).log_lower;
}

[[nodiscard]] inline double chisq_log_sf(double df, double x) {
  special_detail::require_positive(df, "degrees of freedom");
  if (!(x >= 0.0)) throw DomainError("chi-squared argument must be >= 0");
  if (df == 2.0) return -0.5 * x;
  return special_detail::log_gamma_pq(0.5 * df, 0.5 * x).log_upper;
}

/// P(X <= x) for X ~ chi2(df); df may be non-integer.
[[nodiscard]] inline double chisq_cdf(double df, double x) {
  if (df == 2.0 && x >= 0.0) return -std::expm1(-0.5 * x);
  return std::exp(chisq_log_cdf(df, x));
}

/// P(X > x) for X ~ chi2(df).
[[nodiscard]] inline double chisq_sf(double df, double x) {
  return std::exp(chisq_log_sf(df, x));
}

/// Quantile from a log lower-tail probability.
[[nodiscard]] inline double chisq_quantile_log(double df, double log_p) {
  special_detail::require_positive(df, "degrees of freedom");
  if (std::isnan(log_p) || log_p > 0.0) throw DomainError("log probability must be <= 0");
  if (std::isinf(log_p)) return 0.0;
  if (log_p == 0.0) throw DomainError("chi-squared quantile at p = 1 is +infinity");
  if (df == 2.0) return -2.0 * special_detail::log1m_exp(log_p);
  auto g = [&](double x) { return chisq_log_cdf(df, x) - log_p; };
  const auto root = roots::solve_increasing_positive(g, df);
  if (!root) return 0.0;
  return *root;
}

/// Quantile from a log upper-tail probability; accurate deep in the tail.
[[nodiscard]] inline double chisq_isf_log(double df, double log_q) {
  special_detail::require_positive(df, "degrees of freedom");
  if (std::isnan(log_q) || log_q > 0.0) throw DomainError("log probability must be <= 0");
  if (log_q == 0.0) return 0.0;
  if (std::isinf(log_q)) throw DomainError("chi-squared quantile at q = 0 is +infinity");
  if (df == 2.0) return -2.0 * log_q;
  auto g = [&](double x) { return log_q - chisq_log_sf(df, x); };
  const auto root = roots::solve_increasing_positive(g, df);
  if (!root) throw NumericalError("chi-squared upper quantile out of range");
  return *root;
}

/// x with chisq_cdf(df, x) = p, for 0 <= p < 1.
[[nodiscard]] inline double chisq_quantile(double df, double p) {
  special_detail::require_probability(p);
  if (p == 1.0) throw DomainError("chi-squared quantile at p = 1 is +infinity");
  if (p == 0.0) return 0.0;
  if (p <= 0.5) return chisq_quantile_log(df, std::log(p));
  return chisq_isf_log(df, std::log1p(-p));
}

/// x with chisq_sf(df, x) = q, for 0 < q <= 1.
[[nodiscard]] inline double chisq_isf(double df, double q) {
  special_detail::require_probability(q);
  if (q == 0.0) throw DomainError("chi-squared quantile at q = 0 is +infinity");
  return chisq_isf_log(df, std::log(q));
}

// ---------------------------------------------------------------------------
// F

namespace special_detail {

inline void check_f_args(double df1, double df2, double x) {
  require_positive(df1, "numerator degrees of freedom");
  require_positive(df2, "denominator degrees of freedom");
  if (!(x >= 0.0)) throw DomainError("F argument must be >= 0");
}

}  // namespace special_detail

[[nodiscard]] inline double f_log_cdf(double df1, double df2, double x) {
  special_detail::check_f_args(df1, df2, x);
  if (x == 0.0) return -std::numeric_limits<double>::infinity();
  if (std::isinf(x)) return 0.0;
  const double u = df1 * x;
  const double w = u + df2;
  return special_detail::log_beta_inc(0.5 * df1, 0.5 * df2, u / w, df2 / w);
}

[[nodiscard]] inline double f_log_sf(double df1, double df2, double x) {
  special_detail::check_f_args(df1, df2, x);
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
  const double u = df1 * x;
  const double w = u + df2;
  return special_detail::log_beta_inc(0.5 * df2, 0.5 * df1, df2 / w, u / w);
}

/// P(X <= x) for X ~ F(df1, df2).
[[nodiscard]] inline double f_cdf(double df1, double df2, double x) {
  return std::exp(f_log_cdf(df1, df2, x));
}

/// P(X > x) for X ~ F(df1, df2).
[[nodiscard]] inline double f_sf(double df1, double df2, double x) {
  return std::exp(f_log_sf(df1, df2, x));
}

[[nodiscard]] inline double f_log_pdf(double df1, double df2, double x) {
  special_detail::check_f_args(df1, df2, x);
  const double a = 0.5 * df1, b = 0.5 * df2;
  const double log_beta = log_gamma(a) + log_gamma(b) - log_gamma(a + b);
  return a * std::log(df1 / df2) + (a - 1.0) * std::log(x) -
         (a + b) * std::log1p(df1 * x / df2) - log_beta;
}

[[nodiscard]] inline double f_quantile_log(double df1, double df2, double log_p) {
  if (std::isnan(log_p) || log_p > 0.0) throw DomainError("log probability must be <= 0");
  if (std::isinf(log_p)) return 0.0;
  if (log_p == 0.0) throw DomainError("F quantile at p = 1 is +infinity");
  special_detail::check_f_args(df1, df2, 1.0);
  auto g = [&](double x) { return f_log_cdf(df1, df2, x) - log_p; };
  const auto root = roots::solve_increasing_positive(g, 1.0);
  return root ? *root : 0.0;
}

[[nodiscard]] inline double f_isf_log(double df1, double df2, double log_q) {
  if (std::isnan(log_q) || log_q > 0.0) throw DomainError("log probability must be <= 0");
  if (log_q == 0.0) return 0.0;
  if (std::isinf(log_q)) throw DomainError("F quantile at q = 0 is +infinity");
  special_detail::check_f_args(df1, df2, 1.0);
  auto g = [&](double x) { return log_q - f_log_sf(df1, df2, x); };
  const auto root = roots::solve_increasing_positive(g, 1.0);
  if (!root) throw NumericalError("F upper quantile out of range");
  return *root;
}

/// x with f_cdf(df1, df2, x) = p, for 0 <= p < 1.
[[nodiscard]] inline double f_quantile(double df1, double df2, double p) {
  special_detail::require_probability(p);
  if (p == 1.0) throw DomainError("F quantile at p = 1 is +infinity");
  if (p == 0.0) return 0.0;
  if (p <= 0.5) return f_quantile_log(df1, df2, std::log(p));
  return f_isf_log(df1, df2, std::log1p(-p));
}

/// x with f_sf(df1, df2, x) = q, for 0 < q <= 1.
[[nodiscard]] inline double f_isf(double df1, double df2, double q) {
  special_detail::require_probability(q);
  if (q == 0.0) throw DomainError("F quantile at q = 0 is +infinity");
  return f_isf_log(df1, df2, std::log(q));
}

}  // namespace axisfdr
