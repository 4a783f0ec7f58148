#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>

namespace dynhaz {

using Engine = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of the stream addressed by `coords` under `base`. Streams for
/// different coordinate tuples are decorrelated, so work items can be
/// scheduled in any order and still reproduce.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::int64_t> coords) noexcept {
  std::uint64_t h = mix64(base ^ 0x6a09e667f3bcc908ULL);
  for (auto c : coords) {
    h = mix64(h ^ static_cast<std::uint64_t>(c));
  }
  return h;
}

// The std distributions are implementation-defined; these are not, so that
// simulated data and bootstrap samples are identical across toolchains.

/// Uniform integer in [0, n), Lemire's nearly-divisionless method.
inline std::uint64_t uniform_index(Engine& rng, std::uint64_t n) {
  std::uint64_t x = rng();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = rng();
      m = static_cast<__uint128_t>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Uniform double in (0, 1).
inline double uniform_open(Engine& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller (one draw per call, the cosine branch).
inline double standard_normal(Engine& rng) {
  const double u1 = uniform_open(rng);
  const double u2 = uniform_open(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double standard_exponential(Engine& rng) { return -std::log(uniform_open(rng)); }

}  // namespace dynhaz
