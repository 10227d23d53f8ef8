// SPDX-License-Identifier: Apache-2.0
#include "dsvd/half.hpp"

#include <bit>
#include <cmath>

namespace dsvd {

double half_to_double(std::uint16_t bits) noexcept {
  const bool negative = (bits & 0x8000u) != 0;
  const int exponent = (bits >> 10) & 0x1f;
  const int mantissa = bits & 0x3ff;
  double magnitude;
  if (exponent == 0) {
    magnitude = std::ldexp(static_cast<double>(mantissa), -24);
  } else if (exponent == 0x1f) {
    magnitude = mantissa == 0 ? INFINITY : NAN;
  } else {
    magnitude = std::ldexp(static_cast<double>(mantissa | 0x400), exponent - 25);
  }
  return negative ? -magnitude : magnitude;
}

std::uint16_t double_to_half(double value) noexcept {
  const auto raw = std::bit_cast<std::uint64_t>(value);
  const auto sign = static_cast<std::uint16_t>((raw >> 48) & 0x8000u);
  const int exponent = static_cast<int>((raw >> 52) & 0x7ff);
  const std::uint64_t mantissa = raw & ((std::uint64_t{1} << 52) - 1);

  if (exponent == 0x7ff) {
    if (mantissa == 0) return sign | 0x7c00u;
    return sign | 0x7e00u | static_cast<std::uint16_t>(mantissa >> 42);
  }

  // Value is (1.mantissa) * 2^(exponent-1023); half normals cover [-14, 15].
  const int unbiased = exponent - 1023;
  if (unbiased > 15) return sign | 0x7c00u;

  // Significand with the implicit bit at position 52; subnormal doubles are far
  // below the half range and fall through to the shift-out path.
  std::uint64_t significand = exponent == 0 ? mantissa : (mantissa | (std::uint64_t{1} << 52));
  int shift;  // bits to drop so the result is in half units
  std::uint16_t half_exponent;
  if (unbiased >= -14) {
    shift = 42;
    half_exponent = static_cast<std::uint16_t>(unbiased + 15);
  } else {
    // Subnormal half: value / 2^-24 expressed as an integer.
    shift = 42 + (-14 - unbiased);
    half_exponent = 0;
    if (shift > 63) return sign;
  }

  std::uint64_t kept = significand >> shift;
  const std::uint64_t dropped = significand & ((std::uint64_t{1} << shift) - 1);
  const std::uint64_t halfway = std::uint64_t{1} << (shift - 1);
  if (dropped > halfway || (dropped == halfway && (kept & 1u) != 0)) ++kept;

  std::uint32_t bits;
  if (half_exponent == 0) {
    // Rounding up may carry into the smallest normal; the encoding absorbs it.
    bits = static_cast<std::uint32_t>(kept);
  } else {
    // kept carries the implicit bit at position 10; a carry to bit 11 bumps the exponent.
    bits = (static_cast<std::uint32_t>(half_exponent) << 10) + static_cast<std::uint32_t>(kept - 0x400);
    if (bits >= 0x7c00u) return sign | 0x7c00u;
  }
  return static_cast<std::uint16_t>(sign | bits);
}

}  // namespace dsvd
