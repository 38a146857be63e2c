#pragma once

// High-concentration Watson F statistic for equality of mean axes across
// groups, the F -> chi-squared quantile transform, and the voxelwise map.

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "axisfdr/directional.hpp"
#include "axisfdr/errors.hpp"
#include "axisfdr/parallel.hpp"
#include "axisfdr/special_functions.hpp"
#include "axisfdr/volume.hpp"

namespace axisfdr {

/// q >= 2 samples of at least two axes each.
class GroupedAxisSample {
 public:
  explicit GroupedAxisSample(std::vector<AxisSample> groups) : groups_(std::move(groups)) {
    if (groups_.size() < 2) throw DomainError("need at least two groups");
    for (const auto& g : groups_)
      if (g.size() < 2) throw DomainError("every group needs at least two axes");
  }

  [[nodiscard]] std::span<const AxisSample> groups() const noexcept { return groups_; }
  [[nodiscard]] std::size_t group_count() const noexcept { return groups_.size(); }
  [[nodiscard]] std::size_t total_size() const noexcept {
    std::size_t n = 0;
    for (const auto& g : groups_) n += g.size();
    return n;
  }

 private:
  std::vector<AxisSample> groups_;
};

struct WatsonStatistic {
  double value;
  int df_num;  // 2 (q - 1)
  int df_den;  // 2 (N - q)
  double intergroup;  // N s - sum N_j s_j
  double intragroup;  // sum N_j s_j
  double total;       // N s
};

/// Outer-product sum of one group; the statistic only needs these.
struct GroupScatter {
  Mat3 sum{};
  std::size_t n = 0;
};

inline constexpr double kZeroDispersion = 1e-14;
inline constexpr double kNegativeIntergroupSlack = 1e-12;

namespace stat_detail {

// n * (1 - gamma) for a group's outer-product sum
inline double group_dispersion(const Mat3& sum, std::size_t n) {
  Mat3 m = sum;
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& row : m)
    for (double& x : row) x *= inv;
  const auto eig = linalg3::eigen_symmetric(m);
  if (eig.values[0] - eig.values[1] < kEigenTieTolerance)
    throw DegenerateMeanError(eig.values[0], eig.values[1]);
  return static_cast<double>(n) * (1.0 - eig.values[0]);
}

}  // namespace stat_detail

/// Watson statistic from per-group outer-product sums:
/// T = [N s - sum N_j s_j] / (2(q-1)) / ([sum N_j s_j] / (2(N-q))).
[[nodiscard]] inline WatsonStatistic watson_statistic(std::span<const GroupScatter> groups) {
  if (groups.size() < 2) throw DomainError("need at least two groups");
  Mat3 pooled{};
  std::size_t total_n = 0;
  double intragroup = 0.0;
  for (const auto& g : groups) {
    if (g.n < 2) throw DomainError("every group needs at least two axes");
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) pooled[i][j] += g.sum[i][j];
    total_n += g.n;
    intragroup += stat_detail::group_dispersion(g.sum, g.n);
  }
  const double total = stat_detail::group_dispersion(pooled, total_n);
  const int q = static_cast<int>(groups.size());
  const int n = static_cast<int>(total_n);
  WatsonStatistic out{0.0, 2 * (q - 1), 2 * (n - q), total - intragroup, intragroup, total};
  if (intragroup < kZeroDispersion)
    throw DegenerateStatisticError("intragroup dispersion is zero");
  if (out.intergroup < 0.0) {
    if (out.intergroup < -kNegativeIntergroupSlack)
      throw NumericalError("intergroup dispersion is negative beyond rounding");
    out.intergroup = 0.0;
  }
  out.value = (out.intergroup / out.df_num) / (intragroup / out.df_den);
  return out;
}

[[nodiscard]] inline WatsonStatistic watson_multi_sample(const GroupedAxisSample& g) {
  std::vector<GroupScatter> sums;
  sums.reserve(g.group_count());
  for (const auto& s : g.groups()) sums.push_back({outer_product_sum(s.axes()), s.size()});
  return watson_statistic(sums);
}

/// Two-sample statistic, F(2, 2(n1 + n2 - 2)) under the null at high
/// concentration.
[[nodiscard]] inline WatsonStatistic watson_two_sample(const AxisSample& g1, const AxisSample& g2) {
  if (g1.size() < 2 || g2.size() < 2) throw DomainError("every group needs at least two axes");
  const GroupScatter sums[2] = {{outer_product_sum(g1.axes()), g1.size()},
                                {outer_product_sum(g2.axes()), g2.size()}};
  return watson_statistic(sums);
}

/// Quantile transform F(df1, df2) -> chi2(target_df). Works from whichever
/// tail is smaller, in log space, so large t does not saturate at p = 1.
[[nodiscard]] inline double f_to_chisq(double t, double df1, double df2, double target_df = 2.0) {
  if (!std::isfinite(t)) throw DomainError("statistic must be finite");
  if (t < 0.0) throw DomainError("statistic must be >= 0");
  if (t == 0.0) return 0.0;
  const double log_p = f_log_cdf(df1, df2, t);
  if (log_p <= -std::numbers::ln2) return chisq_quantile_log(target_df, log_p);
  return chisq_isf_log(target_df, f_log_sf(df1, df2, t));
}

/// Inverse of f_to_chisq.
[[nodiscard]] inline double chisq_to_f(double x, double df1, double df2, double source_df = 2.0) {
  if (!std::isfinite(x)) throw DomainError("statistic must be finite");
  if (x < 0.0) throw DomainError("statistic must be >= 0");
  if (x == 0.0) return 0.0;
  const double log_p = chisq_log_cdf(source_df, x);
  if (log_p <= -std::numbers::ln2) return f_quantile_log(df1, df2, log_p);
  return f_isf_log(df1, df2, chisq_log_sf(source_df, x));
}

// ---------------------------------------------------------------------------
// voxelwise map

enum class DefectReason { missing_direction, degenerate_mean, zero_dispersion };

[[nodiscard]] inline const char* to_string(DefectReason r) noexcept {
  switch (r) {
    case DefectReason::missing_direction: return "missing_direction";
    case DefectReason::degenerate_mean: return "degenerate_mean";
    case DefectReason::zero_dispersion: return "zero_dispersion";
  }
  return "unknown";
}

struct VoxelDefect {
  std::size_t voxel;
  DefectReason reason;
  friend bool operator==(const VoxelDefect&, const VoxelDefect&) = default;
};

struct StatisticMap {
  StatisticVolume values;      // NaN outside the effective mask
  Mask effective_mask;         // input mask minus defects
  std::vector<VoxelDefect> defects;
  std::vector<std::size_t> low_concentration;  // pooled kappa_hat < 1
  int df_num = 0;
  int df_den = 0;
  std::optional<double> target_df;
};

/// Subject volumes of one group.
using DirectionGroup = std::vector<DirectionVolume>;

/// Watson statistic at every voxel of `mask`, optionally transformed to the
/// chi2(target_df) scale. Degenerate voxels are listed and dropped from the
/// effective mask. Output does not depend on the worker count.
[[nodiscard]] inline StatisticMap statistic_map(std::span<const DirectionGroup> groups,
                                                const Mask& mask,
                                                std::optional<double> target_df = 2.0) {
  if (groups.size() < 2) throw DomainError("need at least two groups");
  const auto& geometry = mask.geometry();
  std::size_t total_n = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw DomainError("every group needs at least two subjects");
    for (const auto& v : g) require_same_geometry(v.geometry(), geometry, "subject volume vs mask");
    total_n += g.size();
  }
  const int q = static_cast<int>(groups.size());
  const int df_num = 2 * (q - 1);
  const int df_den = 2 * (static_cast<int>(total_n) - q);
  if (target_df && !(*target_df > 0.0)) throw DomainError("target df must be positive");

  // kappa_hat < 1 exactly when gamma < A(1)
  const double gamma_at_unit_kappa = concentration_A(1.0);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  enum class Status : std::uint8_t { outside, ok, low, missing, degenerate, zero };
  std::vector<Status> status(geometry.voxel_count(), Status::outside);
  StatisticVolume values(geometry, nan);

  parallel_for(geometry.voxel_count(), [&](std::size_t v) {
    if (!mask.contains(v)) return;
    std::vector<GroupScatter> sums(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      for (const auto& subject : groups[gi]) {
        const auto& axis = subject[v];
        if (!axis) {
          status[v] = Status::missing;
          return;
        }
        linalg3::add_outer(sums[gi].sum, axis->components());
      }
      sums[gi].n = groups[gi].size();
    }
    try {
      const auto w = watson_statistic(sums);
      values[v] = target_df ? f_to_chisq(w.value, df_num, df_den, *target_df) : w.value;
      const double pooled_gamma = 1.0 - w.total / static_cast<double>(total_n);
      status[v] = pooled_gamma < gamma_at_unit_kappa ? Status::low : Status::ok;
    } catch (const DegenerateMeanError&) {
      status[v] = Status::degenerate;
    } catch (const DegenerateStatisticError&) {
      status[v] = Status::zero;
    }
  });

  StatisticMap out{values, mask, {}, {}, df_num, df_den, target_df};
  for (std::size_t v = 0; v < status.size(); ++v) {
    switch (status[v]) {
      case Status::missing:
        out.defects.push_back({v, DefectReason::missing_direction});
        break;
      case Status::degenerate:
        out.defects.push_back({v, DefectReason::degenerate_mean});
        break;
      case Status::zero:
        out.defects.push_back({v, DefectReason::zero_dispersion});
        break;
      case Status::low:
        out.low_concentration.push_back(v);
        break;
      default:
        break;
    }
  }
  for (const auto& d : out.defects) {
    out.effective_mask.set(d.voxel, false);
    out.values[d.voxel] = nan;
  }
  return out;
}

}  // namespace axisfdr
