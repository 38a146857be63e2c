#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "axisfdr/directional.hpp"
#include "axisfdr/errors.hpp"
#include "axisfdr/rng.hpp"
#include "axisfdr/special_functions.hpp"
#include "axisfdr/test_statistics.hpp"

using namespace axisfdr;

namespace {

AxisSample draw(const UnitAxis& mu, double kappa, std::size_t n, Rng& rng) {
  return sample_watson(WatsonParams(mu, kappa), n, rng);
}

double ks_against(std::vector<double> x, double d1, double d2) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = f_cdf(d1, d2, x[i]);
    d = std::max({d, std::fabs(f - i / n), std::fabs(f - (i + 1) / n)});
  }
  return d;
}

AxisSample transform(const AxisSample& s, const Mat3& r, bool flip) {
  std::vector<UnitAxis> out;
  for (const auto& a : s) {
    auto v = linalg3::multiply(r, a.components());
    if (flip) v = linalg3::scale(v, -1.0);
    out.push_back(UnitAxis::from_vector(v));
  }
  return AxisSample(out);
}

}  // namespace

TEST(WatsonStatistic, DegreesOfFreedom) {
  Rng rng = make_stream(1, 0);
  const auto w = watson_two_sample(draw(UnitAxis::e3(), 20, 6, rng), draw(UnitAxis::e3(), 20, 6, rng));
  EXPECT_EQ(w.df_num, 2);
  EXPECT_EQ(w.df_den, 20);
  const GroupedAxisSample g({draw(UnitAxis::e3(), 20, 6, rng), draw(UnitAxis::e3(), 20, 6, rng),
                             draw(UnitAxis::e3(), 20, 6, rng)});
  const auto m = watson_multi_sample(g);
  EXPECT_EQ(m.df_num, 4);
  EXPECT_EQ(m.df_den, 30);
}

TEST(WatsonStatistic, IdenticalGroupsGiveZero) {
  Rng rng = make_stream(2, 0);
  const auto s = draw(UnitAxis::e1(), 15, 6, rng);
  const auto w = watson_two_sample(s, s);
  EXPECT_EQ(w.value, 0.0);
  EXPECT_EQ(w.intergroup, 0.0);
}

TEST(WatsonStatistic, DecompositionIdentity) {
  Rng rng = make_stream(3, 0);
  for (int t = 0; t < 50; ++t) {
    const auto w = watson_two_sample(draw(UnitAxis::e1(), 10, 6, rng), draw(UnitAxis::e2(), 10, 7, rng));
    EXPECT_NEAR(w.intergroup + w.intragroup, w.total, 1e-12);
    EXPECT_GE(w.intergroup, 0.0);
  }
}

TEST(WatsonStatistic, MultiSampleMatchesTwoSample) {
  Rng rng = make_stream(4, 0);
  for (int t = 0; t < 50; ++t) {
    const auto a = draw(UnitAxis::e1(), 8, 5, rng);
    const auto b = draw(UnitAxis::from_components(1, 1, 0), 8, 7, rng);
    EXPECT_NEAR(watson_multi_sample(GroupedAxisSample({a, b})).value, watson_two_sample(a, b).value, 1e-12);
  }
}

TEST(WatsonStatistic, Invariances) {
  Rng rng = make_stream(5, 0);
  const auto a = draw(UnitAxis::e3(), 12, 6, rng);
  const auto b = draw(UnitAxis::from_components(0, 1, 2), 12, 6, rng);
  const double t = watson_two_sample(a, b).value;
  EXPECT_NEAR(watson_two_sample(b, a).value, t, 1e-12 * t);

  const Mat3 r = linalg3::rotation({0.0, 0.6, 0.8}, 2.0);
  EXPECT_NEAR(watson_two_sample(transform(a, r, false), transform(b, r, true)).value, t, 1e-9 * t);

  std::vector<UnitAxis> shuffled(a.begin(), a.end());
  std::reverse(shuffled.begin(), shuffled.end());
  EXPECT_NEAR(watson_two_sample(AxisSample(shuffled), b).value, t, 1e-12 * t);

  const Mat3 id = linalg3::identity();
  EXPECT_NEAR(watson_two_sample(transform(a, id, true), b).value, t, 1e-12 * t);
}

TEST(WatsonStatistic, Errors) {
  const AxisSample same({UnitAxis::e1(), UnitAxis::e1(), UnitAxis::e1()});
  EXPECT_THROW((void)watson_two_sample(same, same), DegenerateStatisticError);
  EXPECT_THROW((void)watson_two_sample(AxisSample({UnitAxis::e1()}), same), DomainError);
  EXPECT_THROW(GroupedAxisSample({same}), DomainError);
}

TEST(WatsonStatistic, NullCalibrationTwoGroups) {
  std::vector<double> t;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    Rng rng = make_stream(6, r);
    t.push_back(watson_two_sample(draw(UnitAxis::e1(), 50, 6, rng), draw(UnitAxis::e1(), 50, 6, rng)).value);
  }
  EXPECT_LT(ks_against(t, 2, 20), 0.02);
  // 0.95 quantile within 3 SE of the F quantile
  const double q = f_quantile(2, 20, 0.95);
  const double frac = static_cast<double>(std::count_if(t.begin(), t.end(), [&](double v) { return v <= q; })) / t.size();
  EXPECT_NEAR(frac, 0.95, 3 * std::sqrt(0.95 * 0.05 / t.size()));
}

TEST(WatsonStatistic, NullCalibrationThreeGroups) {
  std::vector<double> t;
  for (std::uint64_t r = 0; r < 10000; ++r) {
    Rng rng = make_stream(7, r);
    const auto mu = UnitAxis::from_components(1, 2, 2);
    t.push_back(watson_multi_sample(GroupedAxisSample({draw(mu, 50, 6, rng), draw(mu, 50, 6, rng),
                                                       draw(mu, 50, 6, rng)}))
                    .value);
  }
  EXPECT_LT(ks_against(t, 4, 30), 0.02);
}

TEST(Transform, ZeroMonotoneAndRoundTrip) {
  EXPECT_EQ(f_to_chisq(0.0, 2, 20), 0.0);
  double prev = 0.0;
  for (double t = 0.01; t <= 30.0; t *= 1.05) {
    const double x = f_to_chisq(t, 2, 20);
    EXPECT_GT(x, prev);
    prev = x;
    EXPECT_NEAR(chisq_to_f(x, 2, 20), t, 1e-8 * t);
    EXPECT_NEAR(f_cdf(2, 20, t), chisq_cdf(2, x), 1e-12);
  }
  EXPECT_THROW((void)f_to_chisq(-1.0, 2, 20), DomainError);
  EXPECT_THROW((void)f_to_chisq(INFINITY, 2, 20), DomainError);
}

TEST(Transform, NoSaturationInFarTail) {
  const double a = f_to_chisq(500.0, 2, 20), b = f_to_chisq(1000.0, 2, 20);
  EXPECT_TRUE(std::isfinite(a));
  EXPECT_GT(b, a);
  EXPECT_NEAR(chisq_log_sf(2, a), f_log_sf(2, 20, 500.0), 1e-9);
}

namespace {

struct Volumes {
  std::vector<DirectionGroup> groups;
  Mask mask;
};

Volumes null_volumes(std::size_t side, double kappa, std::uint64_t seed) {
  const GridGeometry g({static_cast<std::uint32_t>(side), static_cast<std::uint32_t>(side),
                        static_cast<std::uint32_t>(side)});
  Volumes v{{DirectionGroup(6, DirectionVolume(g)), DirectionGroup(6, DirectionVolume(g))}, Mask(g, true)};
  const WatsonSampler s(WatsonParams(UnitAxis::e3(), kappa));
  for (std::size_t vox = 0; vox < g.voxel_count(); ++vox) {
    Rng rng = make_stream(seed, vox);
    for (auto& grp : v.groups)
      for (auto& subj : grp) subj[vox] = s(rng);
  }
  return v;
}

}  // namespace

TEST(StatisticMap, SingleVoxelMatchesTwoSample) {
  auto v = null_volumes(3, 30, 8);
  Mask one(v.mask.geometry());
  one.set(13, true);
  const auto map = statistic_map(v.groups, one, std::nullopt);
  std::vector<UnitAxis> a, b;
  for (const auto& s : v.groups[0]) a.push_back(*s[13]);
  for (const auto& s : v.groups[1]) b.push_back(*s[13]);
  EXPECT_EQ(map.values[13], watson_two_sample(AxisSample(a), AxisSample(b)).value);
  EXPECT_TRUE(std::isnan(map.values[0]));
  EXPECT_EQ(map.effective_mask.count(), 1u);
}

TEST(StatisticMap, NullMeanNearTwo) {
  const auto v = null_volumes(8, 50, 9);
  const auto map = statistic_map(v.groups, v.mask);
  double sum = 0.0;
  for (double x : map.values.data()) sum += x;
  EXPECT_NEAR(sum / 512.0, 2.0, 0.15);
}

TEST(StatisticMap, PlantedVoxelIsArgmax) {
  auto v = null_volumes(6, 100, 10);
  const std::size_t planted = 100;
  const WatsonSampler s(WatsonParams(UnitAxis::e1(), 100));
  Rng rng = make_stream(99, 0);
  for (auto& subj : v.groups[1]) subj[planted] = s(rng);
  const auto map = statistic_map(v.groups, v.mask);
  const auto& d = map.values.data();
  EXPECT_EQ(static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin()), planted);
}

TEST(StatisticMap, DefectsAreListedAndMasked) {
  auto v = null_volumes(3, 30, 11);
  v.groups[0][2][5].reset();
  for (auto& grp : v.groups)
    for (auto& subj : grp) subj[7] = UnitAxis::e2();
  const auto map = statistic_map(v.groups, v.mask);
  ASSERT_EQ(map.defects.size(), 2u);
  EXPECT_EQ(map.defects[0], (VoxelDefect{5, DefectReason::missing_direction}));
  EXPECT_EQ(map.defects[1], (VoxelDefect{7, DefectReason::zero_dispersion}));
  EXPECT_FALSE(map.effective_mask.contains(5));
  EXPECT_FALSE(map.effective_mask.contains(7));
  EXPECT_EQ(map.effective_mask.count(), 25u);
  EXPECT_TRUE(std::isnan(map.values[7]));
}

TEST(StatisticMap, LowConcentrationFlagged) {
  // nearly isotropic pooled axes at voxel 4 only
  auto v = null_volumes(2, 50, 12);
  const std::vector<UnitAxis> g1{UnitAxis::from_components(1, 0, 0.15), UnitAxis::e2(), UnitAxis::e3(),
                                 UnitAxis::e1(), UnitAxis::from_components(0.1, 1, 0), UnitAxis::e3()};
  const std::vector<UnitAxis> g2{UnitAxis::from_components(1, 0.2, 0), UnitAxis::e2(), UnitAxis::e3(),
                                 UnitAxis::from_components(1, 0, 0.1), UnitAxis::e2(), UnitAxis::e3()};
  for (std::size_t i = 0; i < 6; ++i) {
    v.groups[0][i][4] = g1[i];
    v.groups[1][i][4] = g2[i];
  }
  const auto map = statistic_map(v.groups, v.mask);
  EXPECT_EQ(map.low_concentration, (std::vector<std::size_t>{4}));
  EXPECT_TRUE(map.effective_mask.contains(4));
  EXPECT_TRUE(std::isfinite(map.values[4]));
}

TEST(StatisticMap, IndependentOfWorkerCount) {
  const auto v = null_volumes(6, 20, 13);
  ::setenv("AXISFDR_THREADS", "1", 1);
  const auto one = statistic_map(v.groups, v.mask);
  ::setenv("AXISFDR_THREADS", "4", 1);
  const auto four = statistic_map(v.groups, v.mask);
  ::unsetenv("AXISFDR_THREADS");
  EXPECT_EQ(one.values.data(), four.values.data());
}

TEST(StatisticMap, GeometryMismatch) {
  auto v = null_volumes(3, 10, 14);
  const Mask other(GridGeometry({3, 3, 4}), true);
  EXPECT_THROW((void)statistic_map(v.groups, other), DomainError);
}
