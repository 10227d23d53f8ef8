// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels. Loops mirror the lane layout of the vector variants so
// the results match them bit for bit.
#include <array>
#include <cstddef>

#include "kernel_tables.hpp"

namespace dsvd::simd::detail {
namespace {

using Lanes = std::array<double, kLanes>;

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % kLanes;
  Lanes acc{};
  for (std::size_t i = 0; i < blocked; i += kLanes)
    for (std::size_t j = 0; j < kLanes; ++j) acc[j] = acc[j] + x[i + j] * y[i + j];
  double sum = fold_lanes(acc);
  for (std::size_t i = blocked; i < n; ++i) sum = sum + x[i] * y[i];
  return sum;
}

double sum_squares(std::span<const double> x) { return dot(x, x); }

Gram gram(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % kLanes;
  Lanes xx{}, yy{}, xy{};
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    for (std::size_t j = 0; j < kLanes; ++j) {
      const double a = x[i + j];
      const double b = y[i + j];
      xx[j] = xx[j] + a * a;
      yy[j] = yy[j] + b * b;
      xy[j] = xy[j] + a * b;
    }
  }
  Gram g{fold_lanes(xx), fold_lanes(yy), fold_lanes(xy)};
  for (std::size_t i = blocked; i < n; ++i) {
    g.xx = g.xx + x[i] * x[i];
    g.yy = g.yy + y[i] * y[i];
    g.xy = g.xy + x[i] * y[i];
  }
  return g;
}

void rotate(std::span<double> x, std::span<double> y, double c, double s) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i];
    const double b = y[i];
    x[i] = c * a - s * b;
    y[i] = s * a + c * b;
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = y[i] + alpha * x[i];
}

void subtract(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
}

void scale(double alpha, std::span<double> x) {
  for (double& v : x) v = alpha * v;
}

}  // namespace

const KernelTable kScalarTable{Level::Scalar, dot, sum_squares, gram, rotate, axpy, subtract, scale};

}  // namespace dsvd::simd::detail
