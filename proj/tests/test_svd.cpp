// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <random>

#include "dsvd/error.hpp"
#include "dsvd/linalg.hpp"
#include "test_support.hpp"

using dsvd::Matrix;
using dsvd::SvdResult;
using namespace dsvd::testing;

namespace {

struct SvdErrors {
  double reconstruction = 0.0;  // relative Frobenius
  double u_orthogonality = 0.0;
  double v_orthogonality = 0.0;
};

// Naive loops only; nothing here goes through the kernel table.
SvdErrors measure(const Matrix& m, const SvdResult& s) {
  const std::size_t r = s.sigma.size();
  Matrix rebuilt(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) {
      long double acc = 0;
      for (std::size_t p = 0; p < r; ++p) acc += static_cast<long double>(s.u(i, p)) * s.sigma[p] * s.vt(p, j);
      rebuilt(i, j) = static_cast<double>(acc);
    }
  SvdErrors e;
  e.reconstruction = naive_diff_frobenius(rebuilt, m) / std::max(naive_frobenius(m), 1e-12);
  for (std::size_t a = 0; a < r; ++a)
    for (std::size_t b = 0; b < r; ++b) {
      long double uu = 0, vv = 0;
      for (std::size_t i = 0; i < m.rows(); ++i) uu += static_cast<long double>(s.u(i, a)) * s.u(i, b);
      for (std::size_t j = 0; j < m.cols(); ++j) vv += static_cast<long double>(s.vt(a, j)) * s.vt(b, j);
      const double target = a == b ? 1.0 : 0.0;
      e.u_orthogonality = std::max(e.u_orthogonality, std::abs(static_cast<double>(uu) - target));
      e.v_orthogonality = std::max(e.v_orthogonality, std::abs(static_cast<double>(vv) - target));
    }
  return e;
}

void expect_contract(const Matrix& m, const SvdResult& s) {
  const std::size_t r = std::min(m.rows(), m.cols());
  ASSERT_EQ(s.sigma.size(), r);
  ASSERT_EQ(s.u.rows(), m.rows());
  ASSERT_EQ(s.u.cols(), r);
  ASSERT_EQ(s.vt.rows(), r);
  ASSERT_EQ(s.vt.cols(), m.cols());
  for (std::size_t i = 0; i < r; ++i) {
    EXPECT_GE(s.sigma[i], 0.0);
    if (i + 1 < r) {
      EXPECT_GE(s.sigma[i], s.sigma[i + 1]);
    }
  }
  const SvdErrors e = measure(m, s);
  EXPECT_LE(e.reconstruction, 1e-10);
  EXPECT_LE(e.u_orthogonality, 1e-10);
  EXPECT_LE(e.v_orthogonality, 1e-10);
}

bool bit_identical(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::bit_cast<std::uint64_t>(a.values()[i]) != std::bit_cast<std::uint64_t>(b.values()[i])) return false;
  return true;
}

}  // namespace

TEST(Svd, IdentityHasUnitSingularValues) {
  const auto s = dsvd::svd(Matrix::identity(3));
  EXPECT_EQ(s.sigma, (std::vector<double>{1, 1, 1}));
  expect_contract(Matrix::identity(3), s);
}

TEST(Svd, DiagonalInput) {
  const Matrix m(2, 2, {5, 0, 0, 3});
  const auto s = dsvd::svd(m);
  EXPECT_DOUBLE_EQ(s.sigma[0], 5.0);
  EXPECT_DOUBLE_EQ(s.sigma[1], 3.0);
  expect_contract(m, s);
}

// sigma^2 are the eigenvalues of M^T M; for 2x2 they follow from trace and
// determinant in closed form.
TEST(Svd, RankOneOuterProductMatchesEigenOracle) {
  const Matrix m(2, 2, {1 * 3, 1 * 4, 2 * 3, 2 * 4});
  const double g00 = m(0, 0) * m(0, 0) + m(1, 0) * m(1, 0);
  const double g01 = m(0, 0) * m(0, 1) + m(1, 0) * m(1, 1);
  const double g11 = m(0, 1) * m(0, 1) + m(1, 1) * m(1, 1);
  const double trace = g00 + g11;
  const double det = g00 * g11 - g01 * g01;
  const double lambda_max = (trace + std::sqrt(trace * trace - 4 * det)) / 2;
  ASSERT_NEAR(std::sqrt(lambda_max), 11.1803398875, 1e-10);

  const auto s = dsvd::svd(m);
  EXPECT_NEAR(s.sigma[0], std::sqrt(lambda_max), 1e-12);
  EXPECT_NEAR(s.sigma[0], std::sqrt(5.0) * 5.0, 1e-12);
  EXPECT_EQ(s.sigma[1], 0.0);
  expect_contract(m, s);
}

TEST(Svd, RandomEightByFiveProperty) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix m = random_matrix(8, 5, rng);
    const auto s = dsvd::svd(m);
    expect_contract(m, s);

    // M^T M == V diag(sigma^2) V^T, both sides formed with naive loops.
    for (std::size_t a = 0; a < 5; ++a)
      for (std::size_t b = 0; b < 5; ++b) {
        long double gram = 0, rebuilt = 0;
        for (std::size_t i = 0; i < 8; ++i) gram += static_cast<long double>(m(i, a)) * m(i, b);
        for (std::size_t p = 0; p < 5; ++p)
          rebuilt += static_cast<long double>(s.vt(p, a)) * s.sigma[p] * s.sigma[p] * s.vt(p, b);
        EXPECT_NEAR(static_cast<double>(gram), static_cast<double>(rebuilt), 1e-10 * (1 + std::abs(static_cast<double>(gram))));
      }
  }
}

TEST(Svd, AllShapeClasses) {
  std::mt19937_64 rng(99);
  const std::pair<std::size_t, std::size_t> shapes[] = {{1, 1}, {1, 9}, {9, 1}, {6, 6}, {12, 4}, {4, 12}, {33, 17}, {17, 33}};
  for (auto [d, k] : shapes) {
    SCOPED_TRACE(std::to_string(d) + "x" + std::to_string(k));
    const Matrix m = random_matrix(d, k, rng);
    expect_contract(m, dsvd::svd(m));
  }
}

TEST(Svd, RankDeficientInputsCompleteTheBasis) {
  std::mt19937_64 rng(5);
  for (auto [d, k] : {std::pair<std::size_t, std::size_t>{10, 6}, {6, 10}, {20, 20}}) {
    const Matrix m = sum_of_outer_products(d, k, 2, rng, 1.0);
    const auto s = dsvd::svd(m);
    expect_contract(m, s);
    EXPECT_GT(s.sigma[1], 0.0);
    for (std::size_t i = 2; i < s.sigma.size(); ++i) EXPECT_EQ(s.sigma[i], 0.0) << i;
  }
}

TEST(Svd, ZeroMatrix) {
  const Matrix m(4, 3);
  const auto s = dsvd::svd(m);
  EXPECT_EQ(s.sigma, (std::vector<double>{0, 0, 0}));
  expect_contract(m, s);
}

TEST(Svd, SmallSingularValuesAreClampedToZero) {
  Matrix m(3, 3);
  m(0, 0) = 1.0;
  m(1, 1) = 1e-15;
  m(2, 2) = 1e-3;
  const auto s = dsvd::svd(m);
  EXPECT_EQ(s.sigma[0], 1.0);
  EXPECT_EQ(s.sigma[1], 1e-3);
  EXPECT_EQ(s.sigma[2], 0.0);
}

TEST(Svd, SignConvention) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix m = random_matrix(7, 4, rng);
    const auto s = dsvd::svd(m);
    for (std::size_t c = 0; c < s.u.cols(); ++c) {
      std::size_t pivot = 0;
      for (std::size_t r = 1; r < s.u.rows(); ++r)
        if (std::abs(s.u(r, c)) > std::abs(s.u(pivot, c))) pivot = r;
      EXPECT_GE(s.u(pivot, c), 0.0);
    }
  }
  // Negating the input flips exactly the right factors.
  const Matrix m = random_matrix(5, 5, rng);
  Matrix neg = m;
  for (double& v : neg.values()) v = -v;
  const auto a = dsvd::svd(m);
  const auto b = dsvd::svd(neg);
  for (std::size_t i = 0; i < a.u.size(); ++i) EXPECT_NEAR(a.u.values()[i], b.u.values()[i], 1e-12);
  for (std::size_t i = 0; i < a.vt.size(); ++i) EXPECT_NEAR(a.vt.values()[i], -b.vt.values()[i], 1e-12);
}

TEST(Svd, DeterministicAcrossCalls) {
  std::mt19937_64 rng(8);
  const Matrix m = random_matrix(30, 20, rng);
  const auto a = dsvd::svd(m);
  const auto b = dsvd::svd(m);
  EXPECT_TRUE(bit_identical(a.u, b.u));
  EXPECT_TRUE(bit_identical(a.vt, b.vt));
  EXPECT_EQ(a.sigma, b.sigma);
}

TEST(Svd, ConvergenceFailureIsReported) {
  std::mt19937_64 rng(10);
  const Matrix m = random_matrix(12, 12, rng);
  try {
    dsvd::svd(m, {.max_sweeps = 1});
    FAIL() << "expected ConvergenceFailure";
  } catch (const dsvd::Error& e) {
    EXPECT_EQ(e.code(), dsvd::ErrorCode::ConvergenceFailure);
  }
}

TEST(Svd, RejectsNonFiniteAndEmptyInput) {
  Matrix m(2, 2, {1, 2, NAN, 4});
  EXPECT_THROW(dsvd::svd(m), dsvd::Error);
  Matrix inf(2, 2, {1, INFINITY, 0, 4});
  EXPECT_THROW(dsvd::svd(inf), dsvd::Error);
  EXPECT_THROW(dsvd::svd(Matrix()), dsvd::Error);
}

TEST(Svd, BadlyScaledColumns) {
  std::mt19937_64 rng(12);
  Matrix m = random_matrix(15, 6, rng);
  for (std::size_t i = 0; i < 15; ++i) {
    m(i, 0) *= 1e8;
    m(i, 5) *= 1e-6;
  }
  expect_contract(m, dsvd::svd(m));
}
