// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "dsvd/matrix.hpp"

namespace dsvd {

/// Thin SVD m = u * diag(sigma) * vt with r = min(rows, cols).
///
/// sigma is non-increasing; values below kSigmaClampRatio * sigma[0] are
/// exactly zero. Each singular pair is signed so that the largest-magnitude
/// entry of its u column (lowest row on ties) is non-negative.
struct SvdResult {
  Matrix u;                   // d x r, orthonormal columns
  std::vector<double> sigma;  // r
  Matrix vt;                  // r x k, orthonormal rows
};

inline constexpr double kSigmaClampRatio = 1e-14;

struct SvdOptions {
  // 0 selects the default cap of 100 * min(d, k) sweeps.
  std::size_t max_sweeps = 0;
};

/// One-sided Jacobi SVD. Throws ConvergenceFailure when the sweep cap is hit
/// and InvalidArgument on empty or non-finite input.
SvdResult svd(const Matrix& m, const SvdOptions& options = {});

Matrix matmul(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& m);

/// Cosine of the angle between the flattened matrices. One zero operand gives
/// 0, two zero operands give 1.
double cosine_similarity(const Matrix& a, const Matrix& b);

}  // namespace dsvd
