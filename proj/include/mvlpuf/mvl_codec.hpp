// SPDX-License-Identifier: Apache-2.0
/**
 * @file   mvl_codec.hpp
 * @brief  Fixed-width radix-R digit vectors for 24-bit challenge/response
 *         values (multiple-valued-logic feature encoding).
 *
 * Digits are always stored most-significant first. Widths are computed with
 * exact integer arithmetic: at radix 8 the floating log of 2^24 - 1 sits one
 * unit below an integer, which is exactly where log-based widths go wrong.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mvlpuf/error.hpp"

namespace mvlpuf::codec {

inline constexpr int kBits = 24;
inline constexpr std::uint64_t kMaxValue = (std::uint64_t{1} << kBits) - 1;
inline constexpr std::uint64_t kValueSpace = std::uint64_t{1} << kBits;

/// Smallest D with radix^D > max_value.
inline int digits_required(std::int64_t radix, std::int64_t max_value) {
  if (radix < 2)
    throw InvalidArgument("radix must be >= 2, got " + std::to_string(radix));
  if (max_value < 1)
    throw InvalidArgument("max_value must be >= 1, got " +
                          std::to_string(max_value));
  const auto r = static_cast<std::uint64_t>(radix);
  const auto n = static_cast<std::uint64_t>(max_value);
  int width = 0;
  std::uint64_t power = 1; // radix^width
  while (power <= n) {
    ++width;
    if (power > std::numeric_limits<std::uint64_t>::max() / r)
      break; // next power overflows, so it certainly exceeds n
    power *= r;
  }
  return width;
}

struct RadixSpec {
  int radix = 2;
  int width = kBits;
  std::uint64_t max_value = kMaxValue;

  /// Spec covering [0, max_value] at the given radix.
  static RadixSpec make(int radix, std::uint64_t max_value = kMaxValue) {
    if (max_value > static_cast<std::uint64_t>(
                        std::numeric_limits<std::int64_t>::max()))
      throw InvalidArgument("max_value too large");
    return RadixSpec{radix,
                     digits_required(radix, static_cast<std::int64_t>(max_value)),
                     max_value};
  }

  /// Spec whose width is exactly `width` digits (max_value = radix^width - 1).
  static RadixSpec for_width(int radix, int width) {
    if (radix < 2)
      throw InvalidArgument("radix must be >= 2");
    if (width < 1)
      throw InvalidArgument("width must be >= 1");
    std::uint64_t power = 1;
    for (int i = 0; i < width; ++i) {
      if (power > std::numeric_limits<std::uint64_t>::max() /
                      static_cast<std::uint64_t>(radix))
        throw InvalidArgument("radix^width overflows 64 bits");
      power *= static_cast<std::uint64_t>(radix);
    }
    return RadixSpec{radix, width, power - 1};
  }

  bool operator==(const RadixSpec &) const = default;
};

struct DigitVector {
  RadixSpec spec;
  std::vector<int> digits;

  bool operator==(const DigitVector &) const = default;
};

/// 24 bits, most-significant first.
struct BitVector24 {
  std::array<std::uint8_t, kBits> bits{};

  bool operator==(const BitVector24 &) const = default;
};

/// Writes the digits of `value` into `out` (size spec.width), MSB first.
template <typename T>
void encode_into(std::uint64_t value, const RadixSpec &spec, std::span<T> out) {
  if (value > spec.max_value)
    throw InvalidArgument("value " + std::to_string(value) +
                          " exceeds max_value " +
                          std::to_string(spec.max_value));
  if (out.size() != static_cast<std::size_t>(spec.width))
    throw InvalidArgument("output span does not match digit width");
  const auto r = static_cast<std::uint64_t>(spec.radix);
  for (int i = spec.width - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = static_cast<T>(value % r);
    value /= r;
  }
}

inline DigitVector encode(std::uint64_t value, const RadixSpec &spec) {
  DigitVector dv{spec, std::vector<int>(static_cast<std::size_t>(spec.width))};
  encode_into<int>(value, spec, dv.digits);
  return dv;
}

/// Positional value of `digits`; can exceed 2^24 - 1 when radix^width does.
inline std::uint64_t decode_digits(std::span<const int> digits, int radix) {
  const auto r = static_cast<std::uint64_t>(radix);
  std::uint64_t value = 0;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    const int d = digits[i];
    if (d < 0 || d >= radix)
      throw InvalidDigit("digit " + std::to_string(d) + " at position " +
                         std::to_string(i) + " outside [0, " +
                         std::to_string(radix - 1) + "]");
    value = value * r + static_cast<std::uint64_t>(d);
  }
  return value;
}

inline std::uint64_t decode(const DigitVector &dv) {
  if (dv.digits.size() != static_cast<std::size_t>(dv.spec.width))
    throw InvalidArgument("digit count does not match spec width");
  return decode_digits(dv.digits, dv.spec.radix);
}

/// Half-away-from-zero rounding of one raw output, clamped to a legal digit.
inline int round_digit(double raw, int radix) {
  if (!std::isfinite(raw))
    throw InvalidPrediction("non-finite model output");
  const double r = std::round(raw); // std::round is half-away-from-zero
  if (r <= 0.0)
    return 0;
  if (r >= static_cast<double>(radix - 1))
    return radix - 1;
  return static_cast<int>(r);
}

inline DigitVector round_digits(std::span<const double> raw,
                                const RadixSpec &spec) {
  if (raw.size() != static_cast<std::size_t>(spec.width))
    throw InvalidArgument("raw prediction width " + std::to_string(raw.size()) +
                          " != digit width " + std::to_string(spec.width));
  DigitVector dv{spec, std::vector<int>(raw.size())};
  for (std::size_t i = 0; i < raw.size(); ++i)
    dv.digits[i] = round_digit(raw[i], spec.radix);
  return dv;
}

inline DigitVector round_digits(std::span<const double> raw, int radix) {
  if (raw.empty())
    throw InvalidArgument("empty prediction");
  return round_digits(raw, RadixSpec::for_width(radix, static_cast<int>(raw.size())));
}

inline BitVector24 value_to_bits(std::uint64_t value) {
  if (value > kMaxValue)
    throw InvalidArgument("value " + std::to_string(value) +
                          " does not fit in 24 bits");
  BitVector24 bv;
  for (int i = 0; i < kBits; ++i)
    bv.bits[static_cast<std::size_t>(i)] =
        static_cast<std::uint8_t>((value >> (kBits - 1 - i)) & 1U);
  return bv;
}

inline std::uint32_t bits_to_value(const BitVector24 &bv) {
  std::uint32_t v = 0;
  for (std::uint8_t b : bv.bits)
    v = (v << 1) | (b & 1U);
  return v;
}

} // namespace mvlpuf::codec
