#include <cmath>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "tailcert/numerics.hpp"

using namespace tailcert;

namespace {

// Independent oracle: largest singular value from Eigen's SVD.
double svd_oracle(const Matrix& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e);
  return svd.singularValues()(0);
}

Matrix random_matrix(RngStream& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  return m;
}

double frob_diff(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  return std::sqrt(s);
}

}  // namespace

TEST(SpectralNorm, DiagonalMatrix) {
  EXPECT_NEAR(spectral_norm(Matrix::from_rows({{3, 0}, {0, 4}})), 4.0, 4e-9);
}

TEST(SpectralNorm, Identity) { EXPECT_NEAR(spectral_norm(Matrix::identity(5)), 1.0, 1e-9); }

TEST(SpectralNorm, Nilpotent) { EXPECT_NEAR(spectral_norm(Matrix::from_rows({{0, 1}, {0, 0}})), 1.0, 1e-9); }

TEST(SpectralNorm, ZeroMatrix) { EXPECT_EQ(spectral_norm(Matrix(3, 2)), 0.0); }

TEST(SpectralNorm, MatchesSvdOracleOnRandomMatrices) {
  RngStream rng(11, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t r = 1 + static_cast<std::size_t>(rng.uniform() * 40);
    const std::size_t c = 1 + static_cast<std::size_t>(rng.uniform() * 40);
    const Matrix m = random_matrix(rng, r, c, std::exp(rng.uniform(-5, 5)));
    const double truth = svd_oracle(m);
    EXPECT_LE(std::abs(spectral_norm(m) - truth), 1e-9 * truth) << r << "x" << c;
  }
}

TEST(SpectralNorm, RankOneWithAllOnesInNullSpace) {
  // The all-ones start is orthogonal to the top right singular vector.
  const Matrix m = Matrix::from_rows({{1, -1}, {2, -2}});
  EXPECT_NEAR(spectral_norm(m), std::sqrt(10.0), 1e-9 * std::sqrt(10.0));
}

TEST(SpectralNorm, NonConvergenceCarriesIterate) {
  RngStream rng(3, 0);
  const Matrix m = random_matrix(rng, 30, 30);
  try {
    spectral_norm(m, 1e-15, 2);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.last_iterate().size(), 30u);
    EXPECT_GT(e.last_estimate(), 0.0);
    EXPECT_EQ(e.iterations(), 2u);
  }
}

TEST(SpectralNorm, BoundedByFrobenius) {
  RngStream rng(5, 0);
  const double tol = 1e-9;
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix m = random_matrix(rng, 1 + trial % 7, 1 + trial % 11);
    const double s = spectral_norm(m, tol);
    EXPECT_LE(s, frobenius_norm(m) + tol * s);
  }
}

TEST(SafeOperatorNorm, NeverBelowTruthAndNeverAboveFrobenius) {
  RngStream rng(6, 0);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix m = random_matrix(rng, 2 + trial % 9, 2 + trial % 5);
    const double safe = safe_operator_norm(m, 1e-9);
    EXPECT_GE(safe, svd_oracle(m));
    EXPECT_LE(safe, frobenius_norm(m));
  }
  // Single-row matrix: spectral == Frobenius, so the min picks Frobenius.
  EXPECT_EQ(safe_operator_norm(Matrix::from_rows({{3, 4}})), 5.0);
}

TEST(FrobeniusNorm, Examples) {
  EXPECT_DOUBLE_EQ(frobenius_norm(Matrix::from_rows({{3, 4}})), 5.0);
  EXPECT_EQ(frobenius_norm(Matrix(4, 4)), 0.0);
  EXPECT_DOUBLE_EQ(frobenius_norm(Matrix::identity(3)), std::sqrt(3.0));
}

TEST(FrobeniusNorm, NoOverflowForHugeEntries) {
  EXPECT_DOUBLE_EQ(frobenius_norm(Matrix::from_rows({{3e200, 4e200}})), 5e200);
}

TEST(Cholesky, Examples) {
  EXPECT_EQ(cholesky(Matrix::from_rows({{4, 0}, {0, 9}})), Matrix::from_rows({{2, 0}, {0, 3}}));
  EXPECT_EQ(cholesky(Matrix::identity(4)), Matrix::identity(4));
  const Matrix l = cholesky(Matrix::from_rows({{2, 1}, {1, 2}}));
  EXPECT_NEAR(l(0, 0), std::sqrt(2.0), 1e-15);
  EXPECT_EQ(l(0, 1), 0.0);
  EXPECT_NEAR(l(1, 0), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(l(1, 1), std::sqrt(1.5), 1e-15);
}

TEST(Cholesky, ReproducesRandomSpd) {
  RngStream rng(8, 0);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 1 + trial % 12;
    const Matrix a = random_matrix(rng, n, n);
    Matrix sigma = a.transposed().matmul(a);
    for (std::size_t i = 0; i < n; ++i) sigma(i, i) += 1e-3;
    const Matrix l = cholesky(sigma);
    EXPECT_TRUE(l.is_lower_triangular());
    EXPECT_LE(frob_diff(l.matmul(l.transposed()), sigma), 1e-8 * frobenius_norm(sigma));
  }
}

TEST(Cholesky, IndefiniteNamesPivot) {
  try {
    cholesky(Matrix::from_rows({{1, 2}, {2, 1}}));
    FAIL();
  } catch (const DefinitenessError& e) {
    EXPECT_EQ(e.pivot(), 1u);
  }
  try {
    cholesky(Matrix::from_rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 0}}));
    FAIL();
  } catch (const DefinitenessError& e) {
    EXPECT_EQ(e.pivot(), 2u);
  }
}

TEST(Cholesky, RejectsAsymmetricAndNonSquare) {
  EXPECT_THROW(cholesky(Matrix::from_rows({{2, 1}, {0, 2}})), DomainError);
  EXPECT_THROW(cholesky(Matrix(2, 3, 1.0)), ShapeError);
}

TEST(Matrix, RejectsNonFiniteAndEmpty) {
  EXPECT_THROW(Matrix(0, 2), ShapeError);
  EXPECT_THROW(Matrix(1, 2, std::vector<double>{1.0, NAN}), DomainError);
  EXPECT_THROW(Matrix(1, 2, std::vector<double>{1.0}), ShapeError);
}

TEST(Matrix, MultiplyAndTranspose) {
  const Matrix m = Matrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(m.multiply(Vector{1, 0, -1}), (Vector{-2, -2}));
  EXPECT_EQ(m.multiply_transposed(Vector{1, 1}), (Vector{5, 7, 9}));
  EXPECT_EQ(m.transposed().transposed(), m);
  EXPECT_EQ(lower_triangular_multiply(Matrix::from_rows({{2, 0}, {1, 3}}), Vector{1, 2}), (Vector{2, 7}));
}

TEST(RngStream, BitIdenticalReplay) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(a.normal(), b.normal());
    EXPECT_EQ(a.uniform(), b.uniform());
    EXPECT_EQ(a.chi_squared(3.0), b.chi_squared(3.0));
  }
}

TEST(RngStream, DistinctStreamsDiffer) {
  RngStream a(42, 0), b(42, 1), c(43, 0);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    same_ab += x == b.next_u64();
    same_ac += x == c.next_u64();
  }
  EXPECT_EQ(same_ab, 0);
  EXPECT_EQ(same_ac, 0);
  EXPECT_FALSE(std::string(RngStream::kAlgorithm).empty());
}

TEST(RngStream, UnitVectorHasUnitNorm) {
  RngStream rng(1, 2);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(norm2(rng.unit_vector(17)), 1.0, 1e-14);
}

TEST(RngStream, NormalMoments) {
  RngStream rng(9, 9);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 4.0 * std::sqrt(2.0 / n));
}
