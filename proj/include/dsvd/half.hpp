// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace dsvd {

// IEEE 754 binary16 <-> binary64. Widening is exact; narrowing rounds to
// nearest, ties to even, overflowing to infinity.
double half_to_double(std::uint16_t bits) noexcept;
std::uint16_t double_to_half(double value) noexcept;

}  // namespace dsvd
