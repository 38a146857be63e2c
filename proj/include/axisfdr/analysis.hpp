#pragma once

// The voxelwise analysis chain: statistic map, chi-squared transform,
// optional box smoothing with mask shrinkage, null fit, FDR curve and
// per-alpha discoveries with clusters.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "axisfdr/empirical_null.hpp"
#include "axisfdr/errors.hpp"
#include "axisfdr/spatial.hpp"
#include "axisfdr/test_statistics.hpp"
#include "axisfdr/volume.hpp"

namespace axisfdr {

enum class NullMode { theoretical, empirical };
enum class P0Mode { fit, one };

[[nodiscard]] inline const char* to_string(NullMode m) noexcept {
  return m == NullMode::theoretical ? "theoretical" : "empirical";
}
[[nodiscard]] inline const char* to_string(P0Mode m) noexcept {
  return m == P0Mode::fit ? "fit" : "one";
}

struct AnalysisOptions {
  double target_df = 2.0;
  double bin_width = kDefaultBinWidth;
  double fit_upper = kDefaultFitUpper;
  std::size_t b = 1;
  std::vector<double> alphas{0.2, 0.05, 0.01};
  NullMode null_mode = NullMode::empirical;
  P0Mode p0_mode = P0Mode::fit;

  void validate() const {
    if (!(target_df > 0.0)) throw DomainError("target_df must be positive");
    if (!(bin_width > 0.0)) throw DomainError("bin width must be positive");
    if (!(fit_upper > 0.0 && fit_upper <= 1.0)) throw DomainError("fit_upper must lie in (0, 1]");
    if (b == 0 || b % 2 == 0) throw DomainError("smoothing size b must be odd and >= 1");
    if (alphas.empty()) throw DomainError("need at least one alpha");
    for (double a : alphas)
      if (!(a > 0.0 && a < 1.0)) throw DomainError("alpha values must lie in (0, 1)");
  }
};

struct AlphaResult {
  double alpha = 0.0;
  std::optional<double> u_alpha;
  std::vector<std::size_t> voxels;  // discoveries, ascending
  ClusterSet clusters;

  [[nodiscard]] std::size_t discoveries() const noexcept { return voxels.size(); }
};

struct AnalysisResult {
  AnalysisResult(StatisticVolume a, Mask m) : analysed(std::move(a)), mask(std::move(m)) {}

  StatisticVolume analysed;  // statistic after smoothing, NaN outside `mask`
  Mask mask;                 // voxels actually tested
  std::vector<VoxelDefect> defects;
  std::vector<std::size_t> low_concentration;
  int df_num = 0;
  int df_den = 0;
  std::vector<double> values;  // in-mask values in voxel order
  Histogram histogram;
  double t90 = 0.0;
  std::optional<EmpiricalNullFit> fit;
  std::string fit_error;
  NullModel null;
  double p0 = 1.0;
  FdrCurve curve;
  std::vector<AlphaResult> per_alpha;
  std::vector<std::string> warnings;
};

namespace analysis_detail {

// User mask plus every voxel where all subjects have an axis, so that
// smoothing sees the statistic outside the search region too.
inline Mask statistic_region(std::span<const DirectionGroup> groups, const Mask& mask) {
  Mask region = mask;
  for (std::size_t v = 0; v < mask.voxel_count(); ++v) {
    if (region.contains(v)) continue;
    bool all = true;
    for (const auto& g : groups)
      for (const auto& s : g)
        if (!s[v]) all = false;
    if (all) region.set(v, true);
  }
  return region;
}

}  // namespace analysis_detail

/// Threshold selection and everything after it, on a statistic volume that
/// is already on the chi2(target_df) scale.
[[nodiscard]] inline AnalysisResult analyze_statistic(const StatisticVolume& statistic,
                                                      const Mask& mask,
                                                      const AnalysisOptions& options) {
  options.validate();
  require_same_geometry(statistic.geometry(), mask.geometry(), "statistic vs mask");
  const double nan = std::numeric_limits<double>::quiet_NaN();

  StatisticVolume smoothed = box_smooth(statistic, options.b);
  Mask tested = shrink_mask(mask, smoothed);
  for (std::size_t v = 0; v < smoothed.size(); ++v)
    if (!tested.contains(v)) smoothed[v] = nan;

  AnalysisResult r(std::move(smoothed), std::move(tested));
  r.values = masked_values(r.analysed, r.mask);
  if (r.values.empty()) throw DomainError("no testable voxels in the mask");
  r.histogram = build_histogram(r.values, options.bin_width);
  r.t90 = empirical_quantile(r.values, options.fit_upper);
  try {
    r.fit = fit_empirical_null(r.histogram, r.t90);
  } catch (const FitFailure& e) {
    r.fit_error = e.what();
  }

  const double cube = static_cast<double>(options.b * options.b * options.b);
  if (options.null_mode == NullMode::empirical && r.fit) {
    r.null = r.fit->model();
  } else {
    if (options.null_mode == NullMode::empirical)
      r.warnings.push_back("empirical null fit failed (" + r.fit_error +
                           "); falling back to the theoretical null");
    // the mean of b^3 independent chi2(k) values is chi2(k b^3) / b^3
    r.null = NullModel::theoretical(options.target_df * cube, 1.0 / cube);
    if (options.b > 1)
      r.warnings.push_back("theoretical null after smoothing assumes independent voxels");
  }
  r.p0 = (options.p0_mode == P0Mode::fit && r.fit) ? r.fit->p0 : 1.0;
  if (options.p0_mode == P0Mode::fit && !r.fit) r.warnings.push_back("p0 fixed at 1 (no fit)");

  r.curve = fdr_curve(r.values, r.null, r.p0);
  for (double alpha : options.alphas) {
    AlphaResult a;
    a.alpha = alpha;
    a.u_alpha = select_threshold(r.curve, alpha);
    if (a.u_alpha) {
      a.voxels = count_discoveries(r.analysed, r.mask, *a.u_alpha).voxels;
      a.clusters = extract_clusters(a.voxels, r.mask.geometry());
    }
    r.per_alpha.push_back(std::move(a));
  }
  return r;
}

/// Full chain from subject direction volumes.
[[nodiscard]] inline AnalysisResult analyze(std::span<const DirectionGroup> groups, const Mask& mask,
                                            const AnalysisOptions& options) {
  options.validate();
  const Mask region = analysis_detail::statistic_region(groups, mask);
  const auto map = statistic_map(groups, region, options.target_df);
  Mask tested = mask;
  for (const auto& d : map.defects) tested.set(d.voxel, false);
  auto r = analyze_statistic(map.values, tested, options);
  for (const auto& d : map.defects)
    if (mask.contains(d.voxel)) r.defects.push_back(d);
  for (auto v : map.low_concentration)
    if (r.mask.contains(v)) r.low_concentration.push_back(v);
  r.df_num = map.df_num;
  r.df_den = map.df_den;
  if (!r.low_concentration.empty())
    r.warnings.push_back(std::to_string(r.low_concentration.size()) +
                         " tested voxels have pooled concentration below 1");
  return r;
}

/// One row of the smoothing summary table.
struct SweepRow {
  std::size_t b = 1;
  std::size_t n = 0;  // tested voxels
  std::optional<EmpiricalNullFit> fit;
  std::string fit_error;
  double t90 = 0.0;
  double alpha = 0.0;
  std::optional<double> u_alpha;
  std::size_t discoveries = 0;
  std::vector<std::size_t> cluster_sizes;  // descending
};

[[nodiscard]] inline std::vector<SweepRow> sweep_rows(const AnalysisResult& r, std::size_t b) {
  std::vector<SweepRow> rows;
  for (const auto& a : r.per_alpha) {
    SweepRow row;
    row.b = b;
    row.n = r.mask.count();
    row.fit = r.fit;
    row.fit_error = r.fit_error;
    row.t90 = r.t90;
    row.alpha = a.alpha;
    row.u_alpha = a.u_alpha;
    row.discoveries = a.discoveries();
    row.cluster_sizes = a.clusters.sizes();
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace axisfdr
