#pragma once

// 3D voxel grids. Linear voxel order is x-fastest:
// index = i + nx * (j + ny * k).

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "axisfdr/directional.hpp"
#include "axisfdr/errors.hpp"

namespace axisfdr {

using Dims = std::array<std::uint32_t, 3>;
using Spacing = std::array<double, 3>;
using VoxelCoord = std::array<std::size_t, 3>;

class GridGeometry {
 public:
  GridGeometry(Dims dims, Spacing spacing = {1.0, 1.0, 1.0})
      : dims_(dims), spacing_(spacing) {
    for (int a = 0; a < 3; ++a) {
      if (dims_[a] < 1) throw DomainError("grid dimensions must be >= 1");
      if (!(spacing_[a] > 0.0) || !std::isfinite(spacing_[a]))
        throw DomainError("grid spacing must be positive");
    }
  }

  [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
  [[nodiscard]] const Spacing& spacing() const noexcept { return spacing_; }
  [[nodiscard]] std::size_t nx() const noexcept { return dims_[0]; }
  [[nodiscard]] std::size_t ny() const noexcept { return dims_[1]; }
  [[nodiscard]] std::size_t nz() const noexcept { return dims_[2]; }

  [[nodiscard]] std::size_t voxel_count() const noexcept { return nx() * ny() * nz(); }

  [[nodiscard]] std::size_t index(std::size_t i, std::size_t j, std::size_t k) const noexcept {
    return i + nx() * (j + ny() * k);
  }

  [[nodiscard]] std::size_t index(const VoxelCoord& c) const noexcept {
    return index(c[0], c[1], c[2]);
  }

  [[nodiscard]] VoxelCoord coord(std::size_t idx) const noexcept {
    const std::size_t i = idx % nx();
    const std::size_t rest = idx / nx();
    return {i, rest % ny(), rest / ny()};
  }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;

 private:
  Dims dims_;
  Spacing spacing_;
};

inline void require_same_geometry(const GridGeometry& a, const GridGeometry& b,
                                  const std::string& context) {
  if (!(a == b)) throw DomainError("geometry mismatch: " + context);
}

/// One value per voxel.
template <class T>
class Volume {
 public:
  explicit Volume(GridGeometry geometry, T fill = T{})
      : geometry_(geometry), data_(geometry.voxel_count(), fill) {}

  Volume(GridGeometry geometry, std::vector<T> data)
      : geometry_(geometry), data_(std::move(data)) {
    if (data_.size() != geometry_.voxel_count())
      throw DomainError("volume data length does not match its geometry");
  }

  [[nodiscard]] const GridGeometry& geometry() const noexcept { return geometry_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] const std::vector<T>& data() const noexcept { return data_; }
  [[nodiscard]] std::vector<T>& data() noexcept { return data_; }

  [[nodiscard]] const T& operator[](std::size_t idx) const { return data_[idx]; }
  [[nodiscard]] T& operator[](std::size_t idx) { return data_[idx]; }

  [[nodiscard]] const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[geometry_.index(i, j, k)];
  }
  [[nodiscard]] T& at(std::size_t i, std::size_t j, std::size_t k) {
    return data_[geometry_.index(i, j, k)];
  }

  friend bool operator==(const Volume&, const Volume&) = default;

 private:
  GridGeometry geometry_;
  std::vector<T> data_;
};

/// Per-voxel test statistic; non-finite values mark voxels without one.
using StatisticVolume = Volume<double>;

/// Per-voxel axis; nullopt marks an undefined voxel.
using DirectionVolume = Volume<std::optional<UnitAxis>>;

/// Voxel membership with a cached count of members.
class Mask {
 public:
  explicit Mask(GridGeometry geometry, bool fill = false)
      : geometry_(geometry),
        member_(geometry.voxel_count(), fill ? 1 : 0),
        count_(fill ? geometry.voxel_count() : 0) {}

  Mask(GridGeometry geometry, std::vector<std::uint8_t> membership)
      : geometry_(geometry), member_(std::move(membership)) {
    if (member_.size() != geometry_.voxel_count())
      throw DomainError("mask length does not match its geometry");
    for (auto& m : member_) {
      if (m > 1) throw DomainError("mask entries must be 0 or 1");
      count_ += m;
    }
  }

  static Mask from_indices(GridGeometry geometry, const std::vector<std::size_t>& indices) {
    Mask m(geometry);
    for (auto idx : indices) {
      if (idx >= m.member_.size()) throw DomainError("mask index outside the grid");
      m.set(idx, true);
    }
    return m;
  }

  [[nodiscard]] const GridGeometry& geometry() const noexcept { return geometry_; }
  [[nodiscard]] std::size_t count() const noexcept { return count_; }
  [[nodiscard]] std::size_t voxel_count() const noexcept { return member_.size(); }
  [[nodiscard]] bool contains(std::size_t idx) const { return member_[idx] != 0; }
  [[nodiscard]] const std::vector<std::uint8_t>& membership() const noexcept { return member_; }

  void set(std::size_t idx, bool value) {
    const std::uint8_t v = value ? 1 : 0;
    if (member_[idx] == v) return;
    count_ = v ? count_ + 1 : count_ - 1;
    member_[idx] = v;
  }

  /// Member voxel indices in ascending order.
  [[nodiscard]] std::vector<std::size_t> indices() const {
    std::vector<std::size_t> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < member_.size(); ++i)
      if (member_[i]) out.push_back(i);
    return out;
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  GridGeometry geometry_;
  std::vector<std::uint8_t> member_;
  std::size_t count_ = 0;
};

}  // namespace axisfdr
