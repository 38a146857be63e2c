#pragma once

// Box smoothing of statistic maps, mask shrinkage after smoothing, cluster
// extraction over selected voxels, and per-voxel group mean axes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "axisfdr/directional.hpp"
#include "axisfdr/errors.hpp"
#include "axisfdr/parallel.hpp"
#include "axisfdr/volume.hpp"

namespace axisfdr {

namespace spatial_detail {

// Centered running sum of width b along one axis. An output is NaN when its
// window leaves the array or covers a non-finite input.
inline void window_sum_axis(const std::vector<double>& in, std::vector<double>& out,
                            const GridGeometry& g, int axis, std::size_t b) {
  const std::size_t n[3] = {g.nx(), g.ny(), g.nz()};
  const std::size_t stride[3] = {1, g.nx(), g.nx() * g.ny()};
  const std::size_t len = n[axis];
  const std::size_t step = stride[axis];
  const std::size_t half = b / 2;
  const int u = axis == 0 ? 1 : 0;
  const int w = axis == 2 ? 1 : 2;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::size_t lines = n[u] * n[w];

  parallel_for(lines, [&](std::size_t line) {
    const std::size_t base = (line % n[u]) * stride[u] + (line / n[u]) * stride[w];
    if (len < b) {
      for (std::size_t t = 0; t < len; ++t) out[base + t * step] = nan;
      return;
    }
    double sum = 0.0;
    std::size_t bad = 0;
    auto add = [&](std::size_t t, int sign) {
      const double v = in[base + t * step];
      if (std::isfinite(v)) sum += sign * v;
      else bad = sign > 0 ? bad + 1 : bad - 1;
    };
    for (std::size_t t = 0; t < b; ++t) add(t, +1);
    for (std::size_t t = 0; t < half; ++t) out[base + t * step] = nan;
    for (std::size_t c = half; c + half < len; ++c) {
      if (c > half) {
        add(c - half - 1, -1);
        add(c + half, +1);
      }
      out[base + c * step] = bad == 0 ? sum : nan;
    }
    for (std::size_t t = len - half; t < len; ++t) out[base + t * step] = nan;
  });
}

}  // namespace spatial_detail

/// Mean over the centered b x b x b cube at every voxel, over the whole
/// array regardless of any mask. Windows that leave the array or touch a
/// non-finite value give NaN. b = 1 returns the input unchanged.
[[nodiscard]] inline StatisticVolume box_smooth(const StatisticVolume& vol, std::size_t b) {
  if (b % 2 == 0) throw DomainError("box size must be odd");
  if (b == 1) return vol;
  const auto& g = vol.geometry();
  std::vector<double> a = vol.data();
  std::vector<double> tmp(a.size());
  for (int axis = 0; axis < 3; ++axis) {
    spatial_detail::window_sum_axis(a, tmp, g, axis, b);
    std::swap(a, tmp);
  }
  const double inv = 1.0 / static_cast<double>(b * b * b);
  for (double& v : a) v *= inv;
  return StatisticVolume(g, std::move(a));
}

/// mask AND (smoothed value finite).
[[nodiscard]] inline Mask shrink_mask(const Mask& mask, const StatisticVolume& smoothed) {
  require_same_geometry(mask.geometry(), smoothed.geometry(), "mask vs smoothed map");
  Mask out = mask;
  for (std::size_t v = 0; v < smoothed.size(); ++v)
    if (out.contains(v) && !std::isfinite(smoothed[v])) out.set(v, false);
  return out;
}

/// 26-connected components of a voxel selection, largest first.
struct ClusterSet {
  std::vector<std::vector<std::size_t>> clusters;  // each sorted ascending

  [[nodiscard]] std::vector<std::size_t> sizes() const {
    std::vector<std::size_t> s;
    s.reserve(clusters.size());
    for (const auto& c : clusters) s.push_back(c.size());
    return s;
  }
};

[[nodiscard]] inline ClusterSet extract_clusters(std::span<const std::size_t> selected,
                                                 const GridGeometry& g) {
  ClusterSet out;
  if (selected.empty()) return out;
  constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
  constexpr std::size_t kNotSelected = kUnvisited - 1;
  std::vector<std::size_t> label(g.voxel_count(), kNotSelected);
  for (auto v : selected) {
    if (v >= label.size()) throw DomainError("selected voxel outside the grid");
    label[v] = kUnvisited;
  }
  std::vector<std::size_t> sorted(selected.begin(), selected.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<std::size_t> stack;
  for (auto seed : sorted) {
    if (label[seed] != kUnvisited) continue;
    const std::size_t id = out.clusters.size();
    std::vector<std::size_t> members;
    label[seed] = id;
    stack.push_back(seed);
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      members.push_back(v);
      const auto c = g.coord(v);
      for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0 && dz == 0) continue;
            const auto x = static_cast<std::ptrdiff_t>(c[0]) + dx;
            const auto y = static_cast<std::ptrdiff_t>(c[1]) + dy;
            const auto z = static_cast<std::ptrdiff_t>(c[2]) + dz;
            if (x < 0 || y < 0 || z < 0 || x >= static_cast<std::ptrdiff_t>(g.nx()) ||
                y >= static_cast<std::ptrdiff_t>(g.ny()) || z >= static_cast<std::ptrdiff_t>(g.nz()))
              continue;
            const auto n = g.index(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                   static_cast<std::size_t>(z));
            if (label[n] == kUnvisited) {
              label[n] = id;
              stack.push_back(n);
            }
          }
    }
    std::sort(members.begin(), members.end());
    out.clusters.push_back(std::move(members));
  }
  // ties keep the order of their smallest voxel
  std::stable_sort(out.clusters.begin(), out.clusters.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  return out;
}

struct MeanDirectionMap {
  DirectionVolume mean;                // nullopt outside the mask and at flagged voxels
  std::vector<std::size_t> degenerate; // in-mask voxels without an identifiable mean
};

/// Principal axis of the per-voxel scatter matrix across subjects.
[[nodiscard]] inline MeanDirectionMap group_mean_direction_map(std::span<const DirectionVolume> group,
                                                               const Mask& mask) {
  if (group.empty()) throw DomainError("need at least one subject volume");
  for (const auto& v : group) require_same_geometry(v.geometry(), mask.geometry(), "subject vs mask");
  MeanDirectionMap out{DirectionVolume(mask.geometry()), {}};
  std::vector<std::uint8_t> flagged(mask.voxel_count(), 0);
  parallel_for(mask.voxel_count(), [&](std::size_t v) {
    if (!mask.contains(v)) return;
    Mat3 sum{};
    for (const auto& subject : group) {
      if (!subject[v]) {
        flagged[v] = 1;
        return;
      }
      linalg3::add_outer(sum, subject[v]->components());
    }
    if (group.size() == 1) {
      out.mean[v] = group[0][v];
      return;
    }
    const auto eig = linalg3::eigen_symmetric(sum);
    const double n = static_cast<double>(group.size());
    if ((eig.values[0] - eig.values[1]) / n < kEigenTieTolerance) {
      flagged[v] = 1;
      return;
    }
    out.mean[v] = UnitAxis::from_vector(eig.vectors[0]);
  });
  for (std::size_t v = 0; v < flagged.size(); ++v)
    if (flagged[v]) out.degenerate.push_back(v);
  return out;
}

}  // namespace axisfdr
