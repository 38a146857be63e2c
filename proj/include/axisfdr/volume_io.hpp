#pragma once

// Little-endian binary volume files.
//
//   header: 8-byte magic, nx ny nz (uint32), sx sy sz (float64, mm)
//   .dvol  "DVOL0001"  float32 triple per voxel; a non-finite triple marks
//                      an undefined voxel
//   .svol  "SVOL0001"  float32 per voxel
//   .mvol  "MVOL0001"  one byte per voxel, 0 or 1
//
// Voxels are stored x-fastest.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "axisfdr/errors.hpp"
#include "axisfdr/volume.hpp"

namespace axisfdr::io {

inline constexpr std::string_view kDirectionMagic = "DVOL0001";
inline constexpr std::string_view kScalarMagic = "SVOL0001";
inline constexpr std::string_view kMaskMagic = "MVOL0001";
inline constexpr std::size_t kHeaderBytes = 8 + 3 * 4 + 3 * 8;

using Bytes = std::vector<std::uint8_t>;

namespace detail {

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

inline void put_u64(Bytes& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

inline void put_f32(Bytes& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(Bytes& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  Reader(const Bytes& bytes, std::string context) : bytes_(bytes), context_(std::move(context)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * b);
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * b);
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }

  std::string_view magic() {
    need(8);
    std::string_view m(reinterpret_cast<const char*>(bytes_.data() + pos_), 8);
    pos_ += 8;
    return m;
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) throw DomainError(context_ + ": trailing bytes after volume data");
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DomainError(context_ + ": truncated volume file");
  }

  const Bytes& bytes_;
  std::string context_;
  std::size_t pos_ = 0;
};

inline void put_header(Bytes& out, std::string_view magic, const GridGeometry& g) {
  out.insert(out.end(), magic.begin(), magic.end());
  for (auto d : g.dims()) put_u32(out, d);
  for (auto s : g.spacing()) put_f64(out, s);
}

inline GridGeometry read_header(Reader& r, std::string_view magic, const std::string& context) {
  if (r.magic() != magic)
    throw DomainError(context + ": bad magic, expected " + std::string(magic));
  Dims dims{};
  for (auto& d : dims) d = r.u32();
  Spacing spacing{};
  for (auto& s : spacing) s = r.f64();
  return GridGeometry(dims, spacing);
}

// float32 components whose renormalized axis rounds back to the same floats,
// so that reading and rewriting a file reproduces it byte for byte
inline std::array<float, 3> stable_float_axis(const UnitAxis& axis) {
  std::array<float, 3> f{static_cast<float>(axis[0]), static_cast<float>(axis[1]),
                         static_cast<float>(axis[2])};
  for (int iter = 0; iter < 8; ++iter) {
    const auto back = UnitAxis::from_components(f[0], f[1], f[2]);
    const std::array<float, 3> g{static_cast<float>(back[0]), static_cast<float>(back[1]),
                                 static_cast<float>(back[2])};
    if (g == f) break;
    f = g;
  }
  return f;
}

}  // namespace detail

[[nodiscard]] inline Bytes encode(const DirectionVolume& vol) {
  Bytes out;
  out.reserve(kHeaderBytes + vol.size() * 12);
  detail::put_header(out, kDirectionMagic, vol.geometry());
  constexpr float nan = std::numeric_limits<float>::quiet_NaN();
  for (const auto& a : vol.data()) {
    const auto f = a ? detail::stable_float_axis(*a) : std::array<float, 3>{nan, nan, nan};
    for (float c : f) detail::put_f32(out, c);
  }
  return out;
}

[[nodiscard]] inline Bytes encode(const StatisticVolume& vol) {
  Bytes out;
  out.reserve(kHeaderBytes + vol.size() * 4);
  detail::put_header(out, kScalarMagic, vol.geometry());
  for (double v : vol.data()) detail::put_f32(out, static_cast<float>(v));
  return out;
}

[[nodiscard]] inline Bytes encode(const Mask& mask) {
  Bytes out;
  out.reserve(kHeaderBytes + mask.voxel_count());
  detail::put_header(out, kMaskMagic, mask.geometry());
  out.insert(out.end(), mask.membership().begin(), mask.membership().end());
  return out;
}

[[nodiscard]] inline DirectionVolume decode_direction_volume(const Bytes& bytes,
                                                             const std::string& context = "dvol") {
  detail::Reader r(bytes, context);
  const auto g = detail::read_header(r, kDirectionMagic, context);
  DirectionVolume vol(g);
  if (r.remaining() != g.voxel_count() * 12)
    throw DomainError(context + ": data length does not match the header dimensions");
  for (std::size_t i = 0; i < vol.size(); ++i) {
    const float x = r.f32(), y = r.f32(), z = r.f32();
    if (std::isfinite(x) && std::isfinite(y) && std::isfinite(z) &&
        (x != 0.0f || y != 0.0f || z != 0.0f))
      vol[i] = UnitAxis::from_components(x, y, z);
  }
  r.expect_end();
  return vol;
}

[[nodiscard]] inline StatisticVolume decode_statistic_volume(const Bytes& bytes,
                                                             const std::string& context = "svol") {
  detail::Reader r(bytes, context);
  const auto g = detail::read_header(r, kScalarMagic, context);
  if (r.remaining() != g.voxel_count() * 4)
    throw DomainError(context + ": data length does not match the header dimensions");
  StatisticVolume vol(g);
  for (auto& v : vol.data()) v = r.f32();
  r.expect_end();
  return vol;
}

[[nodiscard]] inline Mask decode_mask(const Bytes& bytes, const std::string& context = "mvol") {
  detail::Reader r(bytes, context);
  const auto g = detail::read_header(r, kMaskMagic, context);
  if (r.remaining() != g.voxel_count())
    throw DomainError(context + ": data length does not match the header dimensions");
  std::vector<std::uint8_t> member(g.voxel_count());
  for (auto& m : member) m = r.u8();
  r.expect_end();
  return Mask(g, std::move(member));
}

[[nodiscard]] inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("error reading " + path.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error writing " + path.string());
}

[[nodiscard]] inline DirectionVolume read_direction_volume(const std::filesystem::path& path) {
  return decode_direction_volume(read_file(path), path.string());
}

[[nodiscard]] inline StatisticVolume read_statistic_volume(const std::filesystem::path& path) {
  return decode_statistic_volume(read_file(path), path.string());
}

[[nodiscard]] inline Mask read_mask(const std::filesystem::path& path) {
  return decode_mask(read_file(path), path.string());
}

inline void write_volume(const std::filesystem::path& path, const DirectionVolume& vol) {
  write_file(path, encode(vol));
}

inline void write_volume(const std::filesystem::path& path, const StatisticVolume& vol) {
  write_file(path, encode(vol));
}

inline void write_volume(const std::filesystem::path& path, const Mask& mask) {
  write_file(path, encode(mask));
}

}  // namespace axisfdr::io
