// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string_view>

namespace dsvd::simd {

enum class Level { Scalar, Avx2 };

std::string_view to_string(Level level) noexcept;

/// Gram entries of a column pair: <x,x>, <y,y>, <x,y>.
struct Gram {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;
};

// Reductions accumulate in 8 interleaved lanes (lane j sums elements with
// index = j mod 8 over the full-block prefix), fold the lanes as
// ((l0+l1)+(l2+l3))+((l4+l5)+(l6+l7)), then add the tail sequentially. Every
// variant follows this order without fused multiply-add, so all levels return
// bit-identical results.
inline constexpr std::size_t kLanes = 8;

struct KernelTable {
  Level level;
  double (*dot)(std::span<const double> x, std::span<const double> y);
  double (*sum_squares)(std::span<const double> x);
  Gram (*gram)(std::span<const double> x, std::span<const double> y);
  // x <- c*x - s*y ; y <- s*x + c*y
  void (*rotate)(std::span<double> x, std::span<double> y, double c, double s);
  // y <- y + alpha*x
  void (*axpy)(double alpha, std::span<const double> x, std::span<double> y);
  // out <- a - b
  void (*subtract)(std::span<const double> a, std::span<const double> b, std::span<double> out);
  // x <- alpha*x
  void (*scale)(double alpha, std::span<double> x);
};

const KernelTable& scalar_kernels() noexcept;

/// AVX2 table, or nullptr when it was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels() noexcept;

/// Table chosen at first use: the widest supported level unless the
/// environment variable DSVD_SIMD=scalar pins the reference kernels.
const KernelTable& kernels() noexcept;

}  // namespace dsvd::simd
