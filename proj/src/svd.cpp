// SPDX-License-Identifier: Apache-2.0
//
// One-sided (Hestenes) Jacobi SVD over the columns of the tall orientation of
// the input. Columns are stored as rows so every rotation and Gram product
// runs over contiguous memory through the SIMD kernel table.
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "dsvd/error.hpp"
#include "dsvd/linalg.hpp"
#include "dsvd/simd/kernels.hpp"

namespace dsvd {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Rotates row pairs of `work` until all non-negligible rows are mutually
// orthogonal; the same rotations accumulate into `basis`.
void jacobi_sweeps(Matrix& work, Matrix& basis, double scale, std::size_t max_sweeps) {
  const auto& k = simd::kernels();
  const std::size_t n = work.rows();
  const double tol = kEps * static_cast<double>(std::max<std::size_t>(work.cols(), 1));
  // Rows this small are certain to fall under the sigma clamp.
  const double negligible_norm =
      1e-2 * kSigmaClampRatio * scale / std::sqrt(static_cast<double>(n));
  const double negligible = negligible_norm * negligible_norm;

  std::vector<double> norms(n);
  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t j = 0; j < n; ++j) norms[j] = k.sum_squares(work.row(j));

    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (norms[p] <= negligible || norms[q] <= negligible) continue;
        const simd::Gram g = k.gram(work.row(p), work.row(q));
        if (g.xx <= negligible || g.yy <= negligible) continue;
        if (std::abs(g.xy) <= tol * std::sqrt(g.xx) * std::sqrt(g.yy)) continue;

        const double zeta = (g.yy - g.xx) / (2.0 * g.xy);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        k.rotate(work.row(p), work.row(q), c, s);
        k.rotate(basis.row(p), basis.row(q), c, s);
        norms[p] = g.xx - t * g.xy;
        norms[q] = g.yy + t * g.xy;
        rotated = true;
      }
    }
    if (!rotated) return;
  }
  raise(ErrorCode::ConvergenceFailure,
        "Jacobi SVD did not converge within " + std::to_string(max_sweeps) + " sweeps (" +
            std::to_string(work.cols()) + "x" + std::to_string(n) + ")");
}

// Modified Gram-Schmidt, applied twice, over rows [0, count) of `cols`.
void reorthonormalize(Matrix& cols, std::size_t count) {
  const auto& k = simd::kernels();
  for (std::size_t j = 0; j < count; ++j) {
    auto v = cols.row(j);
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i < j; ++i) k.axpy(-k.dot(cols.row(i), v), cols.row(i), v);
    k.scale(1.0 / std::sqrt(k.sum_squares(v)), v);
  }
}

// Fills rows [count, cols.rows()) with an orthonormal basis of the complement
// of rows [0, count), via Householder QR of the accepted rows.
void complete_basis(Matrix& cols, std::size_t count) {
  const auto& k = simd::kernels();
  const std::size_t len = cols.cols();
  std::vector<std::vector<double>> reflectors;
  Matrix reduced(count, len);
  for (std::size_t j = 0; j < count; ++j)
    std::copy(cols.row(j).begin(), cols.row(j).end(), reduced.row(j).begin());

  for (std::size_t i = 0; i < count; ++i) {
    auto x = reduced.row(i).subspan(i);
    std::vector<double> v(x.begin(), x.end());
    const double alpha = std::sqrt(k.sum_squares(v));
    v[0] += v[0] >= 0.0 ? alpha : -alpha;
    const double vnorm = std::sqrt(k.sum_squares(v));
    if (vnorm > 0.0) k.scale(1.0 / vnorm, v);
    for (std::size_t j = i; j < count; ++j) {
      auto y = reduced.row(j).subspan(i);
      k.axpy(-2.0 * k.dot(v, y), v, y);
    }
    reflectors.push_back(std::move(v));
  }

  for (std::size_t j = count; j < cols.rows(); ++j) {
    auto y = cols.row(j);
    std::fill(y.begin(), y.end(), 0.0);
    y[j] = 1.0;
    for (std::size_t i = count; i-- > 0;) {
      auto tail = y.subspan(i);
      k.axpy(-2.0 * k.dot(reflectors[i], tail), reflectors[i], tail);
    }
  }
}

}  // namespace

SvdResult svd(const Matrix& m, const SvdOptions& options) {
  if (m.rows() == 0 || m.cols() == 0) raise(ErrorCode::InvalidArgument, "svd of an empty matrix");
  if (!m.all_finite()) raise(ErrorCode::InvalidArgument, "svd input contains NaN or Inf");

  // Wide inputs are factored through their transpose so the column count is min(d, k).
  const bool wide = m.rows() < m.cols();
  Matrix work = wide ? m : m.transposed();
  const std::size_t n = work.rows();
  const std::size_t len = work.cols();
  Matrix basis = Matrix::identity(n);

  const double scale = frobenius_norm(m);
  if (scale > 0.0) {
    const std::size_t max_sweeps = options.max_sweeps != 0 ? options.max_sweeps : 100 * n;
    jacobi_sweeps(work, basis, scale, max_sweeps);
  }

  const auto& k = simd::kernels();
  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = std::sqrt(k.sum_squares(work.row(j)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

  const double largest = norms[order[0]];
  std::vector<double> sigma(n, 0.0);
  Matrix long_side(n, len);   // singular vectors of length len
  Matrix short_side(n, n);    // singular vectors of length n
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = order[i];
    std::copy(basis.row(j).begin(), basis.row(j).end(), short_side.row(i).begin());
    if (norms[j] > 0.0 && norms[j] >= kSigmaClampRatio * largest) {
      sigma[i] = norms[j];
      auto dst = long_side.row(i);
      std::copy(work.row(j).begin(), work.row(j).end(), dst.begin());
      k.scale(1.0 / norms[j], dst);
      ++accepted;
    }
  }
  reorthonormalize(long_side, accepted);
  if (accepted < n) complete_basis(long_side, accepted);

  // Tall input: u columns are long_side rows. Wide input: roles swap.
  const Matrix& left = wide ? short_side : long_side;
  const Matrix& right = wide ? long_side : short_side;
  SvdResult result{Matrix(m.rows(), n), std::move(sigma), Matrix(n, m.cols())};
  for (std::size_t i = 0; i < n; ++i) {
    const auto lcol = left.row(i);
    std::size_t pivot = 0;
    for (std::size_t r = 1; r < lcol.size(); ++r)
      if (std::abs(lcol[r]) > std::abs(lcol[pivot])) pivot = r;
    const double sign = lcol[pivot] < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < m.rows(); ++r) result.u(r, i) = sign * lcol[r];
    const auto rrow = right.row(i);
    for (std::size_t c = 0; c < m.cols(); ++c) result.vt(i, c) = sign * rrow[c];
  }
  return result;
}

}  // namespace dsvd
