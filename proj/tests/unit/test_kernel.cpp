#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "svtp/errors.hpp"
#include "svtp/kernel.hpp"

namespace {

using namespace svtp;

KernelParams params(double ell, double sd) { return {std::log(ell), std::log(sd)}; }

TEST(Gram, MatchesDirectFormula) {
  std::mt19937_64 rng(1);
  const Matrix a = svtp::testing::random_matrix(rng, 7, 3, -2, 2);
  const Matrix b = svtp::testing::random_matrix(rng, 5, 3, -2, 2);
  const auto p = params(0.8, 1.3);
  const Matrix k = gram(p, a, b);
  for (int i = 0; i < 7; ++i)
    for (int j = 0; j < 5; ++j) {
      const double d2 = (a.row(i) - b.row(j)).squaredNorm();
      EXPECT_NEAR(k(i, j), 1.69 * std::exp(-d2 / (2 * 0.64)), 1e-14);
    }
}

TEST(Gram, SymmetricWithSignalVarianceDiagonal) {
  std::mt19937_64 rng(2);
  const Matrix a = svtp::testing::random_matrix(rng, 20, 2, -1, 1);
  const auto p = params(0.5, 2.0);
  const Matrix k = gram(p, a, a);
  EXPECT_TRUE(k.isApprox(k.transpose(), 0.0));
  for (int i = 0; i < 20; ++i) EXPECT_DOUBLE_EQ(k(i, i), 4.0);
}

TEST(Gram, ParallelEqualsReferenceBitwise) {
  std::mt19937_64 rng(3);
  const Matrix a = svtp::testing::random_matrix(rng, 513, 4, -3, 3);
  const Matrix b = svtp::testing::random_matrix(rng, 97, 4, -3, 3);
  const auto p = params(1.1, 0.7);
  const Matrix par = gram(p, a, b, parallel::Exec::Parallel);
  const Matrix ser = gram(p, a, b, parallel::Exec::Serial);
  const Matrix ref = gram_reference(p, a, b);
  EXPECT_TRUE((par.array() == ref.array()).all());
  EXPECT_TRUE((ser.array() == ref.array()).all());
}

TEST(Gram, ColumnMismatchIsShapeError) {
  EXPECT_THROW(gram(params(1, 1), Matrix::Zero(2, 3), Matrix::Zero(2, 2)), ShapeError);
}

TEST(GramWithJitter, DuplicateInputsStillFactor) {
  Matrix a(3, 1);
  a << 0.0, 0.0, 1.0;  // repeated row makes K singular
  const auto g = gram_with_jitter(params(1.0, 1.0), a);
  EXPECT_GT(g.factor.jitter, 0.0);
  EXPECT_EQ(g.factor.llt.info(), Eigen::Success);
  EXPECT_NEAR(g.k(0, 0), 1.0 + g.factor.jitter, 1e-15);
}

TEST(KernelParams, Transforms) {
  const auto p = params(2.0, 3.0);
  EXPECT_NEAR(p.lengthscale(), 2.0, 1e-15);
  EXPECT_NEAR(p.signal_variance(), 9.0, 1e-13);
}

}  // namespace
