#pragma once

#include <cmath>
#include <limits>
#include <optional>

namespace axisfdr::roots {

/// Brent's method on a sign-changing bracket [lo, hi]. `tol` is an absolute
/// tolerance added to the relative machine-precision floor.
template <class F>
double brent(F&& f, double lo, double hi, double flo, double fhi,
             double tol = 0.0, int max_iter = 300) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  double a = lo, b = hi, c = hi;
  double fa = flo, fb = fhi, fc = fhi;
  double d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0)) {
      c = a;
      fc = fa;
      e = d = b - a;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol1 = 2.0 * eps * std::fabs(b) + 0.5 * tol;
    const double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      const double s = fb / fa;
      double p, q;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        const double qq = fa / fc;
        const double r = fb / fc;
        p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
        q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::fabs(p);
      const double min1 = 3.0 * xm * q - std::fabs(tol1 * q);
      const double min2 = std::fabs(e * q);
      if (2.0 * p < std::fmin(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += std::fabs(d) > tol1 ? d : std::copysign(tol1, xm);
    fb = f(b);
  }
  return b;
}

/// Root of an increasing function g on (0, inf), starting from a positive
/// guess and expanding geometrically to a bracket. Returns nullopt when no
/// sign change is found within the representable range.
template <class G>
std::optional<double> solve_increasing_positive(G&& g, double guess,
                                                double tol = 0.0) {
  double lo = guess, hi = guess;
  double glo = g(lo), ghi = glo;
  if (glo == 0.0) return lo;
  if (glo > 0.0) {
    hi = lo;
    ghi = glo;
    do {
      lo *= 0.25;
      if (lo < 1e-300) return std::nullopt;
      glo = g(lo);
    } while (glo > 0.0);
  } else {
    do {
      hi *= 2.0;
      if (hi > 1e300) return std::nullopt;
      ghi = g(hi);
    } while (ghi < 0.0);
  }
  if (glo == 0.0) return lo;
  if (ghi == 0.0) return hi;
  return brent(g, lo, hi, glo, ghi, tol);
}

}  // namespace axisfdr::roots
