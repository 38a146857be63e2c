#pragma once

// Small fixed-size linear algebra for 3-vectors and symmetric 3x3 matrices.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <utility>

namespace axisfdr::linalg3 {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<Vec3, 3>;

[[nodiscard]] constexpr double dot(const Vec3& a, const Vec3& b) noexcept {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

[[nodiscard]] constexpr Vec3 cross(const Vec3& a, const Vec3& b) noexcept {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}

[[nodiscard]] inline double norm(const Vec3& a) noexcept {
  return std::hypot(a[0], a[1], a[2]);
}

[[nodiscard]] constexpr Vec3 scale(const Vec3& a, double s) noexcept {
  return {a[0] * s, a[1] * s, a[2] * s};
}

[[nodiscard]] constexpr Vec3 add(const Vec3& a, const Vec3& b) noexcept {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

[[nodiscard]] constexpr Vec3 sub(const Vec3& a, const Vec3& b) noexcept {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

[[nodiscard]] constexpr Mat3 zero_matrix() noexcept { return {}; }

[[nodiscard]] constexpr Mat3 identity() noexcept {
  return {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
}

[[nodiscard]] constexpr Vec3 multiply(const Mat3& m, const Vec3& v) noexcept {
  return {dot(m[0], v), dot(m[1], v), dot(m[2], v)};
}

[[nodiscard]] constexpr Mat3 multiply(const Mat3& a, const Mat3& b) noexcept {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
  return out;
}

[[nodiscard]] constexpr Mat3 transpose(const Mat3& m) noexcept {
  Mat3 out{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) out[i][j] = m[j][i];
  return out;
}

/// m += w * x x^T
constexpr void add_outer(Mat3& m, const Vec3& x, double w = 1.0) noexcept {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m[i][j] += w * x[i] * x[j];
}

[[nodiscard]] constexpr double trace(const Mat3& m) noexcept {
  return m[0][0] + m[1][1] + m[2][2];
}

[[nodiscard]] constexpr double determinant(const Mat3& m) noexcept {
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

/// Rotation by `angle` radians about the unit vector `axis` (Rodrigues).
[[nodiscard]] inline Mat3 rotation(const Vec3& axis, double angle) noexcept {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double t = 1.0 - c;
  const double x = axis[0], y = axis[1], z = axis[2];
  return {{{t * x * x + c, t * x * y - s * z, t * x * z + s * y},
           {t * x * y + s * z, t * y * y + c, t * y * z - s * x},
           {t * x * z - s * y, t * y * z + s * x, t * z * z + c}}};
}

/// Eigen-decomposition of a symmetric matrix; values sorted descending and
/// vectors[k] is the unit eigenvector belonging to values[k].
struct SymmetricEigen {
  Vec3 values{};
  std::array<Vec3, 3> vectors{};
};

namespace detail {

inline void sort_descending(SymmetricEigen& e) noexcept {
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2 - i; ++j)
      if (e.values[j] < e.values[j + 1]) {
        std::swap(e.values[j], e.values[j + 1]);
        std::swap(e.vectors[j], e.vectors[j + 1]);
      }
}

// Unit vector spanning the null space of a (numerically) rank-2 symmetric
// matrix, as the largest cross product of its rows. Returns the squared norm
// of that cross product so callers can judge conditioning.
inline double null_vector(const Mat3& m, Vec3& out) noexcept {
  const std::array<Vec3, 3> c{cross(m[0], m[1]), cross(m[0], m[2]),
                              cross(m[1], m[2])};
  std::array<double, 3> n2{dot(c[0], c[0]), dot(c[1], c[1]), dot(c[2], c[2])};
  const auto best = static_cast<std::size_t>(
      std::max_element(n2.begin(), n2.end()) - n2.begin());
  if (n2[best] > 0.0) out = scale(c[best], 1.0 / std::sqrt(n2[best]));
  return n2[best];
}

}  // namespace detail

/// Cyclic Jacobi rotations; slow but unconditionally robust.
[[nodiscard]] inline SymmetricEigen eigen_symmetric_jacobi(Mat3 a) noexcept {
  Mat3 v = identity();
  for (int sweep = 0; sweep < 64; ++sweep) {
    const double off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    const double diag = a[0][0] * a[0][0] + a[1][1] * a[1][1] + a[2][2] * a[2][2];
    if (off <= 1e-36 * diag || off == 0.0) break;
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        if (a[p][q] == 0.0) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = std::copysign(1.0, theta) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < 3; ++k) {
          const double akp = a[k][p];
          const double akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (int k = 0; k < 3; ++k) {
          const double apk = a[p][k];
          const double aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (int k = 0; k < 3; ++k) {
          const double vkp = v[k][p];
          const double vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  SymmetricEigen e;
  for (int k = 0; k < 3; ++k) {
    e.values[k] = a[k][k];
    e.vectors[k] = {v[0][k], v[1][k], v[2][k]};
  }
  detail::sort_descending(e);
  return e;
}

/// Closed-form trigonometric solution of the characteristic polynomial.
/// Falls back to Jacobi when two eigenvalues nearly coincide, where the
/// arccos step and the cross-product eigenvectors lose accuracy.
[[nodiscard]] inline SymmetricEigen eigen_symmetric(const Mat3& a) noexcept {
  const double p1 = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
  const double q = trace(a) / 3.0;
  const double d0 = a[0][0] - q, d1 = a[1][1] - q, d2 = a[2][2] - q;
  const double p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * p1;
  if (p1 == 0.0 || p2 == 0.0) return eigen_symmetric_jacobi(a);

  const double p = std::sqrt(p2 / 6.0);
  Mat3 b = a;
  for (int i = 0; i < 3; ++i) {
    b[i][i] -= q;
    for (int j = 0; j < 3; ++j) b[i][j] /= p;
  }
  const double r = std::clamp(determinant(b) / 2.0, -1.0, 1.0);
  if (1.0 - std::fabs(r) < 1e-8) return eigen_symmetric_jacobi(a);

  const double phi = std::acos(r) / 3.0;
  SymmetricEigen e;
  e.values[0] = q + 2.0 * p * std::cos(phi);
  e.values[2] = q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  e.values[1] = 3.0 * q - e.values[0] - e.values[2];

  const double scale2 = p2 * p2;
  for (int k = 0; k < 3; k += 2) {
    Mat3 m = a;
    for (int i = 0; i < 3; ++i) m[i][i] -= e.values[k];
    if (detail::null_vector(m, e.vectors[k]) < 1e-12 * scale2)
      return eigen_symmetric_jacobi(a);
  }
  e.vectors[1] = cross(e.vectors[2], e.vectors[0]);
  detail::sort_descending(e);

  // residual guard against cancellation in badly scaled input
  for (int k = 0; k < 3; ++k) {
    const Vec3 res = sub(multiply(a, e.vectors[k]), scale(e.vectors[k], e.values[k]));
    if (norm(res) > 1e-11 * std::max(1.0, std::sqrt(p2))) return eigen_symmetric_jacobi(a);
  }
  return e;
}

}  // namespace axisfdr::linalg3
