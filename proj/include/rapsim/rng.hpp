#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rapsim {

/// splitmix64 finalizer; a bijective mixer used to derive stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent generator for stream `index` of `seed`. Any (seed, index)
/// pair can be materialized without touching any other stream.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t a = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
  const std::uint64_t b = splitmix64(a ^ splitmix64(index + 0x14057b7ef767814fULL));
  std::seed_seq seq{static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32)};
  return std::mt19937_64(seq);
}

/// Uniform in [0, 1) with 53 random bits. Platform-independent, unlike
/// std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

/// Uniform in (0, 1].
inline double uniform01_open_low(std::mt19937_64& g) { return 1.0 - uniform01(g); }

/// Standard normal via Box-Muller on uniform01; reproducible across
/// standard libraries.
inline double standard_normal(std::mt19937_64& g) {
  const double u1 = uniform01_open_low(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Exponential with the given mean.
inline double exponential(std::mt19937_64& g, double mean) {
  return -mean * std::log(uniform01_open_low(g));
}

}  // namespace rapsim
