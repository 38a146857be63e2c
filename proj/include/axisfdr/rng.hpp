#pragma once

// Seeded random streams. Every stochastic routine takes an explicit seed and
// derives one independent stream per replicate (or voxel), so results do not
// depend on scheduling or on the number of worker threads.

#include <cmath>
#include <cstdint>
#include <random>

namespace axisfdr {

using Rng = std::mt19937_64;

[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for stream `index` of a run seeded with `seed`.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                                  std::uint64_t index) noexcept {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

[[nodiscard]] inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  return Rng(derive_seed(seed, index));
}

/// Uniform on [0, 1) with 53 random bits.
[[nodiscard]] inline double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on (0, 1].
[[nodiscard]] inline double uniform01_open_low(Rng& rng) noexcept {
  return 1.0 - uniform01(rng);
}

/// chi2(2) draw by inversion.
[[nodiscard]] inline double chisq2_draw(Rng& rng) noexcept {
  return -2.0 * std::log(uniform01_open_low(rng));
}

}  // namespace axisfdr
