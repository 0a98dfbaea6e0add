#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ddep::rng {

// Stateless counter-based generator: every draw is a pure function of its
// key, so evaluation order and threading never change the stream.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_key(std::uint64_t seed, std::uint64_t a,
                                 std::uint64_t b = 0,
                                 std::uint64_t c = 0) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ (c + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

/// Maps 64 random bits onto the open interval (0, 1).
constexpr double to_unit_open(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

inline double uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0) noexcept {
  return to_unit_open(hash_key(seed, a, b, c));
}

inline double uniform(double low, double high, std::uint64_t seed,
                      std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0) noexcept {
  return low + (high - low) * uniform(seed, a, b, c);
}

/// Standard normal via Box-Muller on two hashed uniforms.
inline double standard_normal(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0) noexcept {
  const std::uint64_t key = hash_key(seed, a, b);
  const double u1 = to_unit_open(splitmix64(key ^ 0x1ULL));
  const double u2 = to_unit_open(splitmix64(key ^ 0x2ULL));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace ddep::rng
