#include "hamkrr/gram.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "test_support.hpp"

namespace hamkrr {
namespace {

using testing::random_point;
using testing::random_points;

double min_over_max_eigen(const Matrix& g) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() / es.eigenvalues().maxCoeff();
}

TEST(ApplyJ, Examples) {
  Vector v(2);
  v << 1, 0;
  EXPECT_EQ(SymplecticBlocks(1, 1).apply(v), (Vector(2) << 0, -1).finished());
  Vector w(4);
  w << 1, 2, 3, 4;
  EXPECT_EQ(SymplecticBlocks(2, 1).apply(w), (Vector(4) << 3, 4, -1, -2).finished());
  EXPECT_EQ(apply_J(w), (Vector(4) << 3, 4, -1, -2).finished());
}

TEST(ApplyJ, SquaresToMinusIdentityAndTransposeInverts) {
  PortableRng rng(1);
  const SymplecticBlocks jj(2, 7);
  for (int t = 0; t < 20; ++t) {
    const Vector v = random_point(rng, jj.dim(), -5, 5);
    EXPECT_EQ(jj.apply(jj.apply(v)), -v);
    EXPECT_LE((jj.apply_transpose(jj.apply(v)) - v).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(jj.apply_transpose(v), -jj.apply(v));
  }
}

TEST(ApplyJ, LengthMismatchThrows) {
  EXPECT_THROW(SymplecticBlocks(2, 3).apply(Vector::Zero(11)), ValidationError);
  EXPECT_THROW(SymplecticBlocks(0, 3), ValidationError);
}

TEST(AssembleGram, SinglePointIsTwoIdentity) {
  const std::vector<PhasePoint> pts{Vector::Zero(4)};
  const auto g = assemble_gram(GaussianKernel(1.0), std::span(pts));
  EXPECT_EQ(g.dim(), 4);
  EXPECT_LT((g.matrix - 2.0 * Matrix::Identity(4, 4)).norm(), 1e-15);
}

TEST(AssembleGram, DuplicatePointsGiveEqualBlocksAndRankDeficiency) {
  Vector z(2);
  z << 0.3, -0.4;
  const std::vector<PhasePoint> pts{z, z};
  const auto g = assemble_gram(GaussianKernel(1.0), std::span(pts));
  const Matrix b = g.matrix.block(0, 0, 2, 2);
  EXPECT_EQ(g.matrix.block(0, 2, 2, 2), b);
  EXPECT_EQ(g.matrix.block(2, 0, 2, 2), b);
  EXPECT_EQ(g.matrix.block(2, 2, 2, 2), b);
  EXPECT_EQ(Eigen::FullPivLU<Matrix>(g.matrix).rank(), 2);
}

TEST(AssembleGram, InconsistentDimensionsThrow) {
  const std::vector<PhasePoint> pts{Vector::Zero(4), Vector::Zero(2)};
  EXPECT_THROW(assemble_gram(GaussianKernel(1.0), std::span(pts)), ValidationError);
  const std::vector<PhasePoint> odd{Vector::Zero(3)};
  EXPECT_THROW(assemble_gram(GaussianKernel(1.0), std::span(odd)), ValidationError);
  const std::vector<PhasePoint> none;
  EXPECT_THROW(assemble_gram(GaussianKernel(1.0), std::span(none)), ValidationError);
}

TEST(AssembleGram, TenRandomPointsArePositiveSemidefinite) {
  PortableRng rng(2);
  const auto pts = random_points(rng, 10, 4, -1, 1);
  const auto g = assemble_gram(GaussianKernel(1.0), std::span(pts));
  EXPECT_GE(min_over_max_eigen(g.matrix), -1e-8);
}

TEST(AssembleGramProperty, SymmetricAndPsdOverRandomDatasets) {
  PortableRng rng(4);
  const double etas[] = {0.5, 1.0, 2.0};
  for (int t = 0; t < 50; ++t) {
    const auto n = static_cast<std::size_t>(1 + rng.below(40));
    const auto pts = random_points(rng, n, 4, -1, 1);
    const auto g = assemble_gram(GaussianKernel(etas[t % 3]), std::span(pts));
    EXPECT_EQ(g.matrix, g.matrix.transpose());
    EXPECT_GE(min_over_max_eigen(g.matrix), -1e-8) << "N=" << n;
  }
}

TEST(SolveRegularized, HandSolvedSinglePoint) {
  const std::vector<PhasePoint> pts{Vector::Zero(4)};
  const auto g = assemble_gram(GaussianKernel(1.0), std::span(pts));
  const Vector rhs = (Vector(4) << 3, 0, 0, 0).finished();
  const Vector c = solve_regularized(g, 1.0, rhs);
  EXPECT_LT((c - (Vector(4) << 1, 0, 0, 0).finished()).norm(), 1e-15);
  EXPECT_EQ(solve_regularized(g, 1.0, Vector::Zero(4)), Vector::Zero(4));
}

TEST(SolveRegularized, MatchesIndependentLuSolve) {
  PortableRng rng(6);
  for (int t = 0; t < 10; ++t) {
    const auto pts = random_points(rng, 15, 4, -1, 1);
    const auto g = assemble_gram(GaussianKernel(0.9), std::span(pts));
    const Vector rhs = random_point(rng, g.dim(), -1, 1);
    const double lambda = rng.uniform(1e-3, 1e-1);
    const Vector c = solve_regularized(g, lambda, rhs);
    const Matrix a = g.matrix + lambda * 15 * Matrix::Identity(g.dim(), g.dim());
    const Vector oracle = Eigen::PartialPivLU<Matrix>(a).solve(rhs);
    EXPECT_LE((c - oracle).norm() / oracle.norm(), 1e-10);
    EXPECT_LE(regularized_residual(g, lambda, c, rhs), 1e-8);
  }
}

// lambda*N down to 1e-5 with a wide kernel; the smallest regularization the
// default c grid produces is about 8e-5 at N = 100.
TEST(SolveRegularized, ResidualBoundHoldsOnIllConditionedSystems) {
  PortableRng rng(8);
  const auto pts = random_points(rng, 100, 4, -1, 1);
  const auto g = assemble_gram(GaussianKernel(3.5), std::span(pts));
  const Vector rhs = random_point(rng, g.dim(), -1, 1);
  for (double lambda : {1e-5, 1e-6, 1e-7}) {
    const Vector c = solve_regularized(g, lambda, rhs);
    EXPECT_LE(regularized_residual(g, lambda, c, rhs), 1e-8) << lambda;
  }
}

TEST(SolveRegularized, RejectsBadArguments) {
  const std::vector<PhasePoint> pts{Vector::Zero(2)};
  const auto g = assemble_gram(GaussianKernel(1.0), std::span(pts));
  EXPECT_THROW(solve_regularized(g, 0.0, Vector::Zero(2)), ValidationError);
  EXPECT_THROW(solve_regularized(g, -1.0, Vector::Zero(2)), ValidationError);
  EXPECT_THROW(solve_regularized(g, 1.0, Vector::Zero(3)), ValidationError);
}

TEST(ShiftedCholesky, JitterRescuesSingularMatrix) {
  Matrix s(2, 2);
  s << 1, 1, 1, 1;
  const ShiftedCholesky f(s, 0.0);
  EXPECT_GT(f.jitter(), 0.0);
  EXPECT_LE(f.jitter(), 1e-9);
  EXPECT_THROW(ShiftedCholesky(s, 0.0, /*allow_jitter=*/false), NumericalError);
}

TEST(ShiftedCholesky, IndefiniteMatrixFailsAfterEscalation) {
  Matrix s(2, 2);
  s << 1, 0, 0, -1;
  EXPECT_THROW(ShiftedCholesky(s, 0.0), NumericalError);
}

}  // namespace
}  // namespace hamkrr
