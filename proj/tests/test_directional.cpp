#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "axisfdr/directional.hpp"
#include "axisfdr/errors.hpp"
#include "axisfdr/quadrature.hpp"
#include "axisfdr/rng.hpp"

using namespace axisfdr;

namespace {

// Composite Simpson on [0, 1] with n (even) subintervals.
template <class F>
double simpson(F f, int n) {
  const double h = 1.0 / n;
  double s = f(0.0) + f(1.0);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
  return s * h / 3.0;
}

std::vector<UnitAxis> random_axes(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<UnitAxis> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(UnitAxis::from_components(g(rng), g(rng), g(rng)));
  return out;
}

}  // namespace

TEST(UnitAxis, NormalizedAndCanonical) {
  const auto a = UnitAxis::from_components(0.0, -3.0, 4.0);
  EXPECT_NEAR(std::hypot(a[0], a[1], a[2]), 1.0, 1e-12);
  EXPECT_GT(a[1], 0.0);
  EXPECT_EQ(a, UnitAxis::from_components(0.0, 3.0, -4.0));
  EXPECT_THROW((void)UnitAxis::from_components(0, 0, 0), DomainError);
  EXPECT_THROW((void)UnitAxis::from_components(NAN, 0, 1), DomainError);
}

TEST(ScatterMatrix, SmallCases) {
  const std::vector<UnitAxis> opposite{UnitAxis::e1(), UnitAxis::from_components(-1, 0, 0)};
  const auto s1 = scatter_matrix(opposite);
  EXPECT_EQ(s1(0, 0), 1.0);
  EXPECT_EQ(s1(1, 1), 0.0);
  const std::vector<UnitAxis> pair{UnitAxis::e1(), UnitAxis::e2()};
  const auto s2 = scatter_matrix(pair);
  EXPECT_EQ(s2(0, 0), 0.5);
  EXPECT_EQ(s2(1, 1), 0.5);
  EXPECT_EQ(s2(2, 2), 0.0);
  EXPECT_THROW((void)scatter_matrix(std::span<const UnitAxis>{}), DomainError);
}

TEST(ScatterMatrix, MatchesIndependentSummation) {
  const auto axes = random_axes(10, 1);
  const auto s = scatter_matrix(axes);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double ref = 0.0;
      for (const auto& a : axes) ref += a[i] * a[j];
      EXPECT_NEAR(s(i, j), ref / 10.0, 1e-12);
    }
  EXPECT_NEAR(s(0, 0) + s(1, 1) + s(2, 2), 1.0, 1e-12);
}

TEST(PrincipalAxis, DiagonalAndUniform) {
  const auto p = principal_axis(ScatterMatrix::from_matrix({{{1, 0, 0}, {0, 0, 0}, {0, 0, 0}}}));
  EXPECT_DOUBLE_EQ(p.gamma, 1.0);
  EXPECT_EQ(p.axis, UnitAxis::e1());
  const double t = 1.0 / 3.0;
  try {
    (void)principal_axis(ScatterMatrix::from_matrix({{{t, 0, 0}, {0, t, 0}, {0, 0, t}}}));
    FAIL() << "expected a degenerate-mean error";
  } catch (const DegenerateMeanError& e) {
    EXPECT_NEAR(e.eigenvalues()[0], t, 1e-12);
    EXPECT_NEAR(e.eigenvalues()[1], t, 1e-12);
  }
}

TEST(PrincipalAxis, MatchesPowerIteration) {
  const auto axes = random_axes(10, 9);
  const auto s = scatter_matrix(axes);
  const auto p = principal_axis(s);
  Vec3 v{1.0, 1.0, 1.0};
  double lambda = 0.0;
  // the eigenvector converges only as the square root of the eigenvalue
  for (int it = 0; it < 100000; ++it) {
    Vec3 w{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) w[i] += s(i, j) * v[j];
    const double n = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    double step = 0.0;
    for (int i = 0; i < 3; ++i) {
      step = std::max(step, std::fabs(w[i] / n - v[i]));
      v[i] = w[i] / n;
    }
    lambda = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) lambda += v[i] * s(i, j) * v[j];
    if (step < 1e-15) break;
  }
  EXPECT_NEAR(p.gamma, lambda, 1e-9);
  EXPECT_LT(p.axis.angle_to(UnitAxis::from_vector(v)), 1e-6);
  EXPECT_NEAR(p.eigenvalues[0] + p.eigenvalues[1] + p.eigenvalues[2], 1.0, 1e-10);
}

TEST(PrincipalAxis, RotationEquivariance) {
  auto axes = random_axes(15, 4);
  const auto p = principal_axis(scatter_matrix(axes));
  const Mat3 r = linalg3::rotation({0.48, 0.6, 0.64}, 1.1);
  std::vector<UnitAxis> rotated;
  for (const auto& a : axes) rotated.push_back(UnitAxis::from_vector(linalg3::multiply(r, a.components())));
  const auto q = principal_axis(scatter_matrix(rotated));
  EXPECT_NEAR(q.gamma, p.gamma, 1e-12);
  EXPECT_LT(q.axis.angle_to(UnitAxis::from_vector(linalg3::multiply(r, p.axis.components()))), 1e-9);
  EXPECT_NEAR(dispersion(AxisSample(rotated)).s, dispersion(AxisSample(axes)).s, 1e-12);
}

TEST(Dispersion, SignInvariance) {
  const auto axes = random_axes(12, 21);
  std::vector<UnitAxis> flipped;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const double sign = i % 3 == 0 ? -1.0 : 1.0;
    flipped.push_back(UnitAxis::from_components(sign * axes[i][0], sign * axes[i][1], sign * axes[i][2]));
  }
  for (std::size_t i = 0; i < axes.size(); ++i) EXPECT_LT(flipped[i].angle_to(axes[i]), 1e-12);
  EXPECT_NEAR(dispersion(AxisSample(flipped)).s, dispersion(AxisSample(axes)).s, 1e-14);
}

TEST(Dispersion, SimpleCases) {
  const auto same = dispersion(AxisSample({UnitAxis::from_components(0.6, 0.8, 0), UnitAxis::from_components(0.6, 0.8, 0),
                                           UnitAxis::from_components(-0.6, -0.8, 0)}));
  EXPECT_EQ(same.s, 0.0);
  EXPECT_EQ(same.angle_dispersion_deg, 0.0);
  ASSERT_TRUE(same.kappa_hat);
  EXPECT_TRUE(std::isinf(*same.kappa_hat));
  EXPECT_EQ(same.status, ConcentrationStatus::perfect);

  const auto pair = dispersion(AxisSample({UnitAxis::e1(), UnitAxis::e2()}));
  EXPECT_NEAR(pair.gamma, 0.5, 1e-15);
  EXPECT_NEAR(pair.angle_dispersion_deg, 45.0, 1e-12);
}

TEST(Dispersion, MeanSineSquaredIdentity) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const AxisSample sample(random_axes(8, 100 + seed));
    const auto d = dispersion(sample);
    ASSERT_TRUE(d.mean_axis);
    double mean_sin2 = 0.0;
    for (const auto& x : sample) {
      const double c = x.abs_cos(*d.mean_axis);
      mean_sin2 += 1.0 - c * c;
    }
    EXPECT_NEAR(d.s, mean_sin2 / 8.0, 1e-10);
  }
}

TEST(Dispersion, UniformAxes) {
  const auto d = dispersion(sample_watson(WatsonParams(UnitAxis::e3(), 0.0), 100000, 5));
  EXPECT_NEAR(d.s, 2.0 / 3.0, 0.01);
  EXPECT_NEAR(d.angle_dispersion_deg, 54.74, 0.5);
}

TEST(Concentration, KnownValuesAndOracle) {
  EXPECT_EQ(concentration_A(0.0), 1.0 / 3.0);
  EXPECT_THROW((void)concentration_A(-1.0), DomainError);
  const double k = 5.0;
  const double num = simpson([&](double t) { return t * t * std::exp(k * t * t); }, 1'000'000);
  const double den = simpson([&](double t) { return std::exp(k * t * t); }, 1'000'000);
  EXPECT_NEAR(concentration_A(k), num / den, 1e-8);
  EXPECT_NEAR(normalizing_constant(k), 1.0 / (2.0 * std::numbers::pi * den), 1e-8);
}

TEST(Concentration, MonotoneWithLargeKappaLimit) {
  double prev = concentration_A(0.0);
  for (int i = 1; i <= 100; ++i) {
    const double a = concentration_A(i * 10.0);
    EXPECT_GT(a, prev);
    EXPECT_LT(a, 1.0);
    prev = a;
  }
  for (double k : {20.0, 50.0, 100.0, 499.0, 500.0, 1000.0, 1e5})
    EXPECT_LE(std::fabs(concentration_A(k) - (1.0 - 1.0 / k)), 2.0 / (k * k));
  // continuity across the asymptotic switch
  EXPECT_NEAR(concentration_A(499.999999), concentration_A(500.0), 1e-9);
  // d log C / d kappa = -A(kappa)
  EXPECT_NEAR(log_normalizing_constant(499.999999) - log_normalizing_constant(500.0),
              1e-6 * concentration_A(500.0), 1e-11);
}

TEST(Concentration, SolveRoundTrip) {
  for (double k : {0.5, 1.0, 5.0, 20.0, 200.0, 900.0})
    EXPECT_NEAR(solve_concentration(concentration_A(k)), k, 1e-6 * k);
  EXPECT_NEAR(solve_concentration(1.0 - 1.0 / 200.0), 200.0, 4.0);
  EXPECT_THROW((void)solve_concentration(1.0 / 3.0), NonConcentratedError);
  EXPECT_THROW((void)solve_concentration(1.0), DomainError);
}

TEST(NormalizingConstant, LargeKappaBounds) {
  for (double k : {5.0, 10.0, 50.0, 200.0, 1000.0}) {
    const double ratio = std::exp(std::log(std::numbers::pi) + log_normalizing_constant(k) + k - std::log(k));
    // pi C e^k / k = 1 / J with J between the large-kappa bounds
    const double lo = 1.0 + (k - 1.0) * std::exp(-k);
    const double hi = 1.0 + 2.0 / k - (3.0 + 2.0 / k) * std::exp(-k);
    EXPECT_GE(1.0 / ratio, lo * (1 - 1e-12));
    EXPECT_LE(1.0 / ratio, hi * (1 + 1e-12));
    if (k >= 10.0) { EXPECT_LE(std::fabs(ratio - 1.0), 2.0 / k); }
  }
}

TEST(WatsonDensity, SpecialPoints) {
  const WatsonParams p(UnitAxis::e3(), 7.0);
  EXPECT_NEAR(watson_log_density(UnitAxis::e3(), p), log_normalizing_constant(7.0) + 7.0, 1e-12);
  EXPECT_NEAR(watson_log_density(UnitAxis::e1(), p), log_normalizing_constant(7.0), 1e-12);
  EXPECT_THROW(WatsonParams(UnitAxis::e1(), -1.0), DomainError);
}

TEST(WatsonSampler, Deterministic) {
  const WatsonParams p(UnitAxis::from_components(1, 2, 3), 12.0);
  const auto a = sample_watson(p, 50, 99);
  const auto b = sample_watson(p, 50, 99);
  EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  EXPECT_THROW((void)sample_watson(p, 0, 1), DomainError);
}

TEST(WatsonSampler, UniformAtZeroKappa) {
  const auto s = scatter_matrix(sample_watson(WatsonParams(UnitAxis::e1(), 0.0), 100000, 2));
  const auto e = linalg3::eigen_symmetric(s.entries());
  for (double v : e.values) EXPECT_NEAR(v, 1.0 / 3.0, 0.01);
}

TEST(WatsonSampler, DispersionAtKappa50) {
  const auto d = dispersion(sample_watson(WatsonParams(UnitAxis::from_components(0, 1, 1), 50.0), 100000, 3));
  EXPECT_NEAR(d.s, 1.0 / 50.0, 0.05 / 50.0);
}

TEST(WatsonSampler, CosineLawMatchesQuadratureCdf) {
  const double kappa = 10.0;
  const auto mu = UnitAxis::from_components(0.3, -0.2, 0.9);
  const auto sample = sample_watson(WatsonParams(mu, kappa), 100000, 4);
  std::vector<double> c2;
  for (const auto& x : sample) {
    const double c = x.abs_cos(mu);
    c2.push_back(c * c);
  }
  std::sort(c2.begin(), c2.end());
  auto mass = [&](double u) {
    return quadrature::integrate([&](double t) { return std::exp(kappa * (t * t - 1.0)); }, 0.0, u,
                                 {1e-12, 1e-300, 4000})
        .value;
  };
  const double total = mass(1.0);
  double ks = 0.0;
  const double n = static_cast<double>(c2.size());
  for (std::size_t i = 0; i < c2.size(); ++i) {
    const double f = mass(std::sqrt(c2[i])) / total;
    ks = std::max({ks, std::fabs(f - i / n), std::fabs(f - (i + 1) / n)});
  }
  EXPECT_LT(ks, 0.005);
}
