#pragma once

#include <cstdint>
#include <random>

namespace pubbie::detail {

// std::mt19937_64 output is fully specified by the standard; the
// distributions are not. These keep seeded results identical across
// standard libraries.

inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n), by rejection.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

}  // namespace pubbie::detail
