// SPDX-License-Identifier: Apache-2.0
#if !defined(__AVX2__)
#error "kernels_avx2.cpp must be compiled with -mavx2"
#endif

#include <immintrin.h>

#include <array>
#include <cstddef>

#include "kernel_tables.hpp"

namespace dsvd::simd::detail {
namespace {

using Lanes = std::array<double, kLanes>;

// Two registers hold lanes 0..3 and 4..7.
inline double fold(__m256d lo, __m256d hi) {
  Lanes l;
  _mm256_storeu_pd(l.data(), lo);
  _mm256_storeu_pd(l.data() + 4, hi);
  return fold_lanes(l);
}

double dot(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % kLanes;
  const double* px = x.data();
  const double* py = y.data();
  __m256d lo = _mm256_setzero_pd();
  __m256d hi = _mm256_setzero_pd();
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    lo = _mm256_add_pd(lo, _mm256_mul_pd(_mm256_loadu_pd(px + i), _mm256_loadu_pd(py + i)));
    hi = _mm256_add_pd(hi, _mm256_mul_pd(_mm256_loadu_pd(px + i + 4), _mm256_loadu_pd(py + i + 4)));
  }
  double sum = fold(lo, hi);
  for (std::size_t i = blocked; i < n; ++i) sum = sum + px[i] * py[i];
  return sum;
}

double sum_squares(std::span<const double> x) { return dot(x, x); }

Gram gram(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % kLanes;
  const double* px = x.data();
  const double* py = y.data();
  __m256d xx_lo = _mm256_setzero_pd(), xx_hi = _mm256_setzero_pd();
  __m256d yy_lo = _mm256_setzero_pd(), yy_hi = _mm256_setzero_pd();
  __m256d xy_lo = _mm256_setzero_pd(), xy_hi = _mm256_setzero_pd();
  for (std::size_t i = 0; i < blocked; i += kLanes) {
    const __m256d a0 = _mm256_loadu_pd(px + i);
    const __m256d a1 = _mm256_loadu_pd(px + i + 4);
    const __m256d b0 = _mm256_loadu_pd(py + i);
    const __m256d b1 = _mm256_loadu_pd(py + i + 4);
    xx_lo = _mm256_add_pd(xx_lo, _mm256_mul_pd(a0, a0));
    xx_hi = _mm256_add_pd(xx_hi, _mm256_mul_pd(a1, a1));
    yy_lo = _mm256_add_pd(yy_lo, _mm256_mul_pd(b0, b0));
    yy_hi = _mm256_add_pd(yy_hi, _mm256_mul_pd(b1, b1));
    xy_lo = _mm256_add_pd(xy_lo, _mm256_mul_pd(a0, b0));
    xy_hi = _mm256_add_pd(xy_hi, _mm256_mul_pd(a1, b1));
  }
  Gram g{fold(xx_lo, xx_hi), fold(yy_lo, yy_hi), fold(xy_lo, xy_hi)};
  for (std::size_t i = blocked; i < n; ++i) {
    g.xx = g.xx + px[i] * px[i];
    g.yy = g.yy + py[i] * py[i];
    g.xy = g.xy + px[i] * py[i];
  }
  return g;
}

void rotate(std::span<double> x, std::span<double> y, double c, double s) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % 4;
  double* px = x.data();
  double* py = y.data();
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vs = _mm256_set1_pd(s);
  for (std::size_t i = 0; i < blocked; i += 4) {
    const __m256d a = _mm256_loadu_pd(px + i);
    const __m256d b = _mm256_loadu_pd(py + i);
    _mm256_storeu_pd(px + i, _mm256_sub_pd(_mm256_mul_pd(vc, a), _mm256_mul_pd(vs, b)));
    _mm256_storeu_pd(py + i, _mm256_add_pd(_mm256_mul_pd(vs, a), _mm256_mul_pd(vc, b)));
  }
  for (std::size_t i = blocked; i < n; ++i) {
    const double a = px[i];
    const double b = py[i];
    px[i] = c * a - s * b;
    py[i] = s * a + c * b;
  }
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % 4;
  const double* px = x.data();
  double* py = y.data();
  const __m256d va = _mm256_set1_pd(alpha);
  for (std::size_t i = 0; i < blocked; i += 4)
    _mm256_storeu_pd(py + i, _mm256_add_pd(_mm256_loadu_pd(py + i),
                                           _mm256_mul_pd(va, _mm256_loadu_pd(px + i))));
  for (std::size_t i = blocked; i < n; ++i) py[i] = py[i] + alpha * px[i];
}

void subtract(std::span<const double> a, std::span<const double> b, std::span<double> out) {
  const std::size_t n = a.size();
  const std::size_t blocked = n - n % 4;
  for (std::size_t i = 0; i < blocked; i += 4)
    _mm256_storeu_pd(out.data() + i,
                     _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i)));
  for (std::size_t i = blocked; i < n; ++i) out[i] = a[i] - b[i];
}

void scale(double alpha, std::span<double> x) {
  const std::size_t n = x.size();
  const std::size_t blocked = n - n % 4;
  const __m256d va = _mm256_set1_pd(alpha);
  for (std::size_t i = 0; i < blocked; i += 4)
    _mm256_storeu_pd(x.data() + i, _mm256_mul_pd(va, _mm256_loadu_pd(x.data() + i)));
  for (std::size_t i = blocked; i < n; ++i) x[i] = alpha * x[i];
}

}  // namespace

const KernelTable kAvx2Table{Level::Avx2, dot, sum_squares, gram, rotate, axpy, subtract, scale};

}  // namespace dsvd::simd::detail
