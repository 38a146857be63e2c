#pragma once

// Monte Carlo: null Watson statistics, single-voxel power, synthetic
// direction volumes with a planted group difference, FDR control and
// smoothing sweeps. Every replicate and voxel draws from its own stream
// derived from (seed, index), so results do not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <vector>

#include "axisfdr/analysis.hpp"
#include "axisfdr/directional.hpp"
#include "axisfdr/errors.hpp"
#include "axisfdr/parallel.hpp"
#include "axisfdr/rng.hpp"
#include "axisfdr/test_statistics.hpp"
#include "axisfdr/volume.hpp"

namespace axisfdr {

struct MonteCarloResult {
  double estimate = 0.0;
  double standard_error = 0.0;
  std::size_t replications = 0;
  std::uint64_t seed = 0;
};

/// Two groups of subjects on a grid. Background axes follow a Watson law
/// around `background` (or the per-voxel `background_field`); inside
/// `signal` the second group's mean is rotated by delta_deg about a fixed
/// axis perpendicular to the background mean.
struct SimulationSpec {
  explicit SimulationSpec(GridGeometry g) : geometry(g), signal(g) {}

  GridGeometry geometry;
  std::size_t n1 = 6;
  std::size_t n2 = 6;
  double kappa = 200.0;
  UnitAxis background = UnitAxis::e3();
  std::optional<DirectionVolume> background_field;
  Mask signal;
  double delta_deg = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (n1 < 2 || n2 < 2) throw DomainError("group sizes must be >= 2");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw DomainError("kappa must be finite and >= 0");
    if (!(delta_deg >= 0.0 && delta_deg <= 90.0)) throw DomainError("delta must lie in [0, 90] degrees");
    require_same_geometry(signal.geometry(), geometry, "signal region vs grid");
    if (background_field) {
      require_same_geometry(background_field->geometry(), geometry, "background field vs grid");
      for (const auto& a : background_field->data())
        if (!a) throw DomainError("background field must be defined everywhere");
    }
  }
};

/// Centered cube of side `side` voxels (clipped to the grid).
[[nodiscard]] inline Mask cube_region(const GridGeometry& g, std::size_t side) {
  Mask m(g);
  std::size_t lo[3], hi[3];
  const std::size_t n[3] = {g.nx(), g.ny(), g.nz()};
  for (int a = 0; a < 3; ++a) {
    const std::size_t s = std::min(side, n[a]);
    lo[a] = (n[a] - s) / 2;
    hi[a] = lo[a] + s;
  }
  for (std::size_t k = lo[2]; k < hi[2]; ++k)
    for (std::size_t j = lo[1]; j < hi[1]; ++j)
      for (std::size_t i = lo[0]; i < hi[0]; ++i) m.set(g.index(i, j, k), true);
  return m;
}

namespace sim_detail {

inline Vec3 perpendicular(const Vec3& mu) {
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::fabs(mu[i]) < std::fabs(mu[k])) k = i;
  Vec3 e{};
  e[k] = 1.0;
  const Vec3 p = linalg3::cross(mu, e);
  return linalg3::scale(p, 1.0 / linalg3::norm(p));
}

inline UnitAxis rotated_mean(const UnitAxis& mu, double delta_deg) {
  const double angle = delta_deg * std::numbers::pi / 180.0;
  const auto r = linalg3::rotation(perpendicular(mu.components()), angle);
  return UnitAxis::from_vector(linalg3::multiply(r, mu.components()));
}

inline GroupScatter draw_group(const WatsonSampler& draw, std::size_t n, Rng& rng) {
  GroupScatter g;
  g.n = n;
  for (std::size_t i = 0; i < n; ++i) linalg3::add_outer(g.sum, draw(rng).components());
  return g;
}

// Two-group statistic, redrawing degenerate replicates from the same stream.
inline double two_group_statistic(const WatsonSampler& d1, const WatsonSampler& d2, std::size_t n1,
                                  std::size_t n2, Rng& rng, std::size_t& redraws) {
  for (;;) {
    const GroupScatter g[2] = {draw_group(d1, n1, rng), draw_group(d2, n2, rng)};
    try {
      return watson_statistic(g).value;
    } catch (const DegenerateMeanError&) {
    } catch (const DegenerateStatisticError&) {
    }
    ++redraws;
  }
}

inline MonteCarloResult proportion(std::size_t hits, std::size_t reps, std::uint64_t seed) {
  const double p = static_cast<double>(hits) / static_cast<double>(reps);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(reps)), reps, seed};
}

inline MonteCarloResult mean_and_se(const std::vector<double>& x, std::uint64_t seed) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double se = x.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return {mean, se, x.size(), seed};
}

}  // namespace sim_detail

struct NullSimulation {
  std::vector<double> statistics;
  std::size_t redraws = 0;
};

/// `reps` Watson statistics for two groups drawn from one Watson law.
[[nodiscard]] inline NullSimulation simulate_null_statistics(double kappa, std::size_t n1,
                                                             std::size_t n2, std::size_t reps,
                                                             std::uint64_t seed) {
  if (reps < 1) throw DomainError("reps must be >= 1");
  if (n1 < 2 || n2 < 2) throw DomainError("group sizes must be >= 2");
  const WatsonSampler draw(WatsonParams(UnitAxis::e3(), kappa));
  NullSimulation out;
  out.statistics.resize(reps);
  std::vector<std::size_t> redraws(reps, 0);
  parallel_for(reps, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    out.statistics[r] = sim_detail::two_group_statistic(draw, draw, n1, n2, rng, redraws[r]);
  });
  out.redraws = std::accumulate(redraws.begin(), redraws.end(), std::size_t{0});
  return out;
}

/// Fraction of replicates whose statistic exceeds the upper-alpha quantile of
/// F(2, 2(n1 + n2 - 2)) when the group means are delta_deg apart.
[[nodiscard]] inline MonteCarloResult estimate_power(double delta_deg, double kappa, std::size_t n1,
                                                     std::size_t n2, double alpha, std::size_t reps,
                                                     std::uint64_t seed) {
  if (reps < 1) throw DomainError("reps must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
  if (n1 < 2 || n2 < 2) throw DomainError("group sizes must be >= 2");
  if (!(delta_deg >= 0.0 && delta_deg <= 90.0)) throw DomainError("delta must lie in [0, 90] degrees");
  const double threshold = f_isf(2.0, 2.0 * static_cast<double>(n1 + n2 - 2), alpha);
  const UnitAxis mu1 = UnitAxis::e3();
  const WatsonSampler d1(WatsonParams(mu1, kappa));
  const WatsonSampler d2(WatsonParams(sim_detail::rotated_mean(mu1, delta_deg), kappa));
  std::vector<std::uint8_t> hit(reps, 0);
  std::vector<std::size_t> redraws(reps, 0);
  parallel_for(reps, [&](std::size_t r) {
    Rng rng = make_stream(seed, r);
    hit[r] = sim_detail::two_group_statistic(d1, d2, n1, n2, rng, redraws[r]) > threshold;
  });
  const auto hits = static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
  return sim_detail::proportion(hits, reps, seed);
}

struct VolumePair {
  DirectionGroup group1;
  DirectionGroup group2;
  Mask truth;
};

/// Per-voxel Watson draws for both groups.
[[nodiscard]] inline VolumePair simulate_volume_pair(const SimulationSpec& spec) {
  spec.validate();
  const auto& g = spec.geometry;
  VolumePair out{DirectionGroup(spec.n1, DirectionVolume(g)),
                 DirectionGroup(spec.n2, DirectionVolume(g)), spec.signal};
  parallel_for(g.voxel_count(), [&](std::size_t v) {
    const UnitAxis mu1 = spec.background_field ? *(*spec.background_field)[v] : spec.background;
    const UnitAxis mu2 = spec.signal.contains(v) ? sim_detail::rotated_mean(mu1, spec.delta_deg) : mu1;
    const WatsonSampler d1(WatsonParams(mu1, spec.kappa));
    const WatsonSampler d2(WatsonParams(mu2, spec.kappa));
    Rng rng = make_stream(spec.seed, v);
    for (auto& subject : out.group1) subject[v] = d1(rng);
    for (auto& subject : out.group2) subject[v] = d2(rng);
  });
  return out;
}

/// Mean false-discovery proportion V / max(R, 1) of the theoretical
/// chi2(2) null procedure with p0 = 1, over `reps` independent volumes
/// (replicate r uses seed derive_seed(spec.seed, r)). Every voxel is tested.
[[nodiscard]] inline MonteCarloResult fdr_control_experiment(const SimulationSpec& spec, double alpha,
                                                             std::size_t reps) {
  spec.validate();
  if (reps < 1) throw DomainError("reps must be >= 1");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in (0, 1]");
  const Mask all(spec.geometry, true);
  std::vector<double> fdp(reps, 0.0);
  for (std::size_t r = 0; r < reps; ++r) {
    SimulationSpec rep = spec;
    rep.seed = derive_seed(spec.seed, r);
    const auto pair = simulate_volume_pair(rep);
    const DirectionGroup groups[2] = {pair.group1, pair.group2};
    const auto map = statistic_map(groups, all, 2.0);
    const auto values = masked_values(map.values, map.effective_mask);
    const auto curve = fdr_curve(values, NullModel::theoretical(2.0), 1.0);
    const auto u = select_threshold(curve, alpha);
    if (!u) continue;
    const auto found = count_discoveries(map.values, map.effective_mask, *u);
    std::size_t false_hits = 0;
    for (auto v : found.voxels)
      if (!pair.truth.contains(v)) ++false_hits;
    fdp[r] = static_cast<double>(false_hits) / static_cast<double>(std::max<std::size_t>(found.count, 1));
  }
  return sim_detail::mean_and_se(fdp, spec.seed);
}

/// Summary rows for one simulated data set analysed at each b.
[[nodiscard]] inline std::vector<SweepRow> smoothing_sweep(const SimulationSpec& spec,
                                                           const std::vector<std::size_t>& b_values,
                                                           const std::vector<double>& alpha_values,
                                                           AnalysisOptions options = {}) {
  spec.validate();
  for (auto b : b_values)
    if (b == 0 || b % 2 == 0) throw DomainError("smoothing sizes must be odd");
  options.alphas = alpha_values;
  const auto pair = simulate_volume_pair(spec);
  const DirectionGroup groups[2] = {pair.group1, pair.group2};
  const Mask all(spec.geometry, true);
  const auto map = statistic_map(groups, all, options.target_df);
  std::vector<SweepRow> rows;
  for (auto b : b_values) {
    options.b = b;
    const auto r = analyze_statistic(map.values, map.effective_mask, options);
    for (auto& row : sweep_rows(r, b)) rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace axisfdr
