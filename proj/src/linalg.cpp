// SPDX-License-Identifier: Apache-2.0
#include "dsvd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dsvd/error.hpp"
#include "dsvd/simd/kernels.hpp"

namespace dsvd {
namespace {

std::string dims(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    raise(ErrorCode::DimensionMismatch, "matmul " + dims(a) + " by " + dims(b));
  const auto& k = simd::kernels();
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out = c.row(i);
    for (std::size_t p = 0; p < a.cols(); ++p) {
      const double coeff = a(i, p);
      if (coeff != 0.0) k.axpy(coeff, b.row(p), out);
    }
  }
  return c;
}

double frobenius_norm(const Matrix& m) {
  return std::sqrt(simd::kernels().sum_squares(m.values()));
}

double cosine_similarity(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    raise(ErrorCode::DimensionMismatch, "cosine_similarity " + dims(a) + " vs " + dims(b));
  const auto& k = simd::kernels();
  const simd::Gram g = k.gram(a.values(), b.values());
  const bool a_zero = g.xx == 0.0;
  const bool b_zero = g.yy == 0.0;
  if (a_zero && b_zero) return 1.0;
  if (a_zero || b_zero) return 0.0;
  // sqrt(fl(x*x)) == |x|, so identical or negated inputs give exactly +-1.
  double denom = std::sqrt(g.xx * g.yy);
  if (!std::isfinite(denom) || denom == 0.0) denom = std::sqrt(g.xx) * std::sqrt(g.yy);
  const double cos = g.xy / denom;
  return std::clamp(cos, -1.0, 1.0);
}

}  // namespace dsvd
