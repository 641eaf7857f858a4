// SPDX-License-Identifier: Apache-2.0
/**
 * @file   rng.hpp
 * @brief  Counter-based SplitMix64 generator with named stream derivation.
 *
 * Every random draw in the project goes through Rng so results are
 * bit-identical across standard libraries (std::normal_distribution is not).
 * Streams are derived as hash(seed, purpose tag, index...), never shared.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>

namespace mvlpuf {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Order-sensitive hash of a seed, a purpose tag and any number of indices.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::initializer_list<std::uint64_t> idx = {}) {
  std::uint64_t h = mix64(seed ^ 0x6A09E667F3BCC909ULL);
  h = mix64(h ^ fnv1a(tag));
  for (std::uint64_t v : idx)
    h = mix64(h + 0x9E3779B97F4A7C15ULL + v);
  return h;
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) noexcept : state_(seed) {}

  Rng(std::uint64_t seed, std::string_view tag,
      std::initializer_list<std::uint64_t> idx = {})
      : state_(derive_seed(seed, tag, idx)) {}

  std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer in [0, bound) by Lemire's multiply-shift with rejection.
  std::uint64_t below(std::uint64_t bound) noexcept {
    if (bound <= 1)
      return 0;
    const std::uint64_t threshold = (0 - bound) % bound;
    __extension__ typedef unsigned __int128 u128; // GCC/Clang extension
    for (;;) {
      const u128 m = static_cast<u128>(next()) * bound;
      if (static_cast<std::uint64_t>(m) >= threshold)
        return static_cast<std::uint64_t>(m >> 64);
    }
  }

  /// Box-Muller; one normal per call, the paired value is discarded.
  double normal(double mean = 0.0, double stddev = 1.0) noexcept {
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::uint64_t state_;
};

} // namespace mvlpuf
