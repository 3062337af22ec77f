#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>
#include <fstream>
#include <vector>

#include "grfest/contract_error.hpp"
#include "grfest/qp/qp_solver.hpp"
#include "qp_oracle.hpp"

namespace grfest {
namespace {

using namespace grfest::testing;

TEST(QpSolverTest, UnconstrainedDistanceToOnes) {
  const Eigen::MatrixXd H = 2.0 * Eigen::MatrixXd::Identity(3, 3);
  const Eigen::VectorXd c = -2.0 * Eigen::VectorXd::Ones(3);
  const QpProblem p = makeProblem(H, c, Eigen::MatrixXd(0, 3), Eigen::VectorXd(0),
                                  Eigen::MatrixXd(0, 3), Eigen::VectorXd(0));
  const QpSolution sol = solveQp(p);
  ASSERT_EQ(sol.status, QpStatus::solved);
  EXPECT_LT((sol.x - Eigen::VectorXd::Ones(3)).norm(), 1e-9);
}

TEST(QpSolverTest, SingleActiveLowerBound) {
  // min x^2  s.t.  x >= 1  written as  -x <= -1.
  Eigen::MatrixXd H(1, 1), Ain(1, 1);
  H << 2.0;
  Ain << -1.0;
  const QpProblem p = makeProblem(H, Eigen::VectorXd::Zero(1), Eigen::MatrixXd(0, 1),
                                  Eigen::VectorXd(0), Ain, Eigen::VectorXd::Constant(1, -1.0));
  const QpSolution sol = solveQp(p);
  ASSERT_EQ(sol.status, QpStatus::solved);
  EXPECT_NEAR(sol.x(0), 1.0, 1e-9);
  EXPECT_NEAR(sol.y_in(0), 2.0, 1e-9);
}

TEST(QpSolverTest, MatchesDenseActiveSetOracleOnRandomProblems) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(2, 40);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = dim(rng);
    const int me = std::min(n - 1, trial % 4);
    const int mi = std::min(10, 2 + trial % 9);
    const RandomQp q = randomQp(rng, n, me, mi);
    const DenseSolution oracle = activeSetOracle(q.H, q.c, q.Aeq, q.beq, q.Ain, q.bin);
    ASSERT_TRUE(oracle.found) << "trial " << trial;
    const QpSolution sol = solveQp(makeProblem(q.H, q.c, q.Aeq, q.beq, q.Ain, q.bin));
    ASSERT_EQ(sol.status, QpStatus::solved) << "trial " << trial;
    EXPECT_LT((sol.x - oracle.x).lpNorm<Eigen::Infinity>(), 1e-6) << "trial " << trial;
    // Multipliers are not unique on degenerate instances; check them through KKT.
    const QpProblem p = makeProblem(q.H, q.c, q.Aeq, q.beq, q.Ain, q.bin);
    EXPECT_LE(kktResiduals(p, sol.x, sol.y_eq, sol.y_in).max(), 1e-6) << "trial " << trial;
  }
}

TEST(QpSolverTest, AdmmWithoutPolishConvergesToOracle) {
  std::mt19937_64 rng(11);
  QpSettings settings;
  settings.polish = false;
  settings.eps_abs = settings.eps_rel = 1e-9;
  settings.max_iter = 20000;
  for (int trial = 0; trial < 10; ++trial) {
    const RandomQp q = randomQp(rng, 8, 2, 6);
    const DenseSolution oracle = activeSetOracle(q.H, q.c, q.Aeq, q.beq, q.Ain, q.bin);
    ASSERT_TRUE(oracle.found);
    const QpSolution sol = solveQp(makeProblem(q.H, q.c, q.Aeq, q.beq, q.Ain, q.bin), settings);
    ASSERT_EQ(sol.status, QpStatus::solved) << "trial " << trial;
    EXPECT_FALSE(sol.polished);
    EXPECT_LT((sol.x - oracle.x).lpNorm<Eigen::Infinity>(), 1e-6) << "trial " << trial;
  }
}

TEST(QpSolverTest, SolvedStatusSatisfiesKktTolerances) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const RandomQp q = randomQp(rng, 12, 3, 8);
    const QpProblem p = makeProblem(q.H, q.c, q.Aeq, q.beq, q.Ain, q.bin);
    const QpSolution sol = solveQp(p);
    ASSERT_EQ(sol.status, QpStatus::solved);
    EXPECT_LE(kktResiduals(p, sol.x, sol.y_eq, sol.y_in).max(), 1e-6);
    EXPECT_GE(sol.y_in.minCoeff(), 0.0);
  }
}

TEST(QpSolverTest, EqualityOnlyMatchesDirectKktSolve) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const RandomQp q = randomQp(rng, 15, 5, 0);
    const int n = 15, me = 5;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + me, n + me);
    K.topLeftCorner(n, n) = q.H;
    K.topRightCorner(n, me) = q.Aeq.transpose();
    K.bottomLeftCorner(me, n) = q.Aeq;
    Eigen::VectorXd rhs(n + me);
    rhs << -q.c, q.beq;
    const Eigen::VectorXd direct = K.fullPivLu().solve(rhs);
    const QpSolution sol = solveQp(makeProblem(q.H, q.c, q.Aeq, q.beq, q.Ain, q.bin));
    ASSERT_EQ(sol.status, QpStatus::solved);
    EXPECT_LT((sol.x - direct.head(n)).lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_LT((sol.y_eq - direct.tail(me)).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(QpSolverTest, InvariantUnderRowScalingAndPermutation) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const RandomQp q = randomQp(rng, 10, 2, 6);
    const QpSolution base = solveQp(makeProblem(q.H, q.c, q.Aeq, q.beq, q.Ain, q.bin));
    ASSERT_EQ(base.status, QpStatus::solved);

    Eigen::VectorXd row_scale_eq(2), row_scale_in(6);
    row_scale_eq << 100.0, 0.01;
    row_scale_in << 3.0, 0.2, 50.0, 1.0, 7.0, 0.05;
    const QpSolution scaled = solveQp(makeProblem(
        q.H, q.c, row_scale_eq.asDiagonal() * q.Aeq, row_scale_eq.asDiagonal() * q.beq,
        row_scale_in.asDiagonal() * q.Ain, row_scale_in.asDiagonal() * q.bin));
    ASSERT_EQ(scaled.status, QpStatus::solved);
    EXPECT_LT((scaled.x - base.x).lpNorm<Eigen::Infinity>(), 1e-6);

    Eigen::VectorXi perm(10);
    for (int i = 0; i < 10; ++i) perm(i) = (3 * i + 1) % 10;
    const Eigen::PermutationMatrix<Eigen::Dynamic> P(perm);
    const Eigen::MatrixXd Hp = P.transpose() * q.H * P;
    const QpSolution permuted = solveQp(makeProblem(Hp, P.transpose() * q.c, q.Aeq * P, q.beq,
                                                    q.Ain * P, q.bin));
    ASSERT_EQ(permuted.status, QpStatus::solved);
    EXPECT_LT((P * permuted.x - base.x).lpNorm<Eigen::Infinity>(), 1e-6);
  }
}

TEST(QpSolverTest, WarmStartedResolveConvergesImmediately) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const RandomQp q = randomQp(rng, 20, 3, 10);
    const QpProblem p = makeProblem(q.H, q.c, q.Aeq, q.beq, q.Ain, q.bin);
    const QpSolution first = solveQp(p);
    ASSERT_EQ(first.status, QpStatus::solved);
    const QpWarmStart warm{first.x, first.y_eq, first.y_in};
    const QpSolution again = solveQp(p, {}, &warm);
    ASSERT_EQ(again.status, QpStatus::solved);
    EXPECT_LE(again.iterations, 5);
    EXPECT_LT((again.x - first.x).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(QpSolverTest, DetectsPrimalInfeasibility) {
  // x <= -1 and -x <= -1 (x >= 1).
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(2, 2), Ain(2, 2);
  Ain << 1.0, 0.0, -1.0, 0.0;
  Eigen::VectorXd bin(2);
  bin << -1.0, -1.0;
  const QpSolution sol = solveQp(makeProblem(H, Eigen::VectorXd::Zero(2), Eigen::MatrixXd(0, 2),
                                             Eigen::VectorXd(0), Ain, bin));
  EXPECT_EQ(sol.status, QpStatus::infeasible);
}

TEST(QpSolverTest, IterationCapReportsMaxIter) {
  std::mt19937_64 rng(17);
  const RandomQp q = randomQp(rng, 10, 2, 6);
  QpSettings settings;
  settings.polish = false;
  settings.max_iter = 3;
  const QpSolution sol = solveQp(makeProblem(q.H, q.c, q.Aeq, q.beq, q.Ain, q.bin), settings);
  EXPECT_EQ(sol.status, QpStatus::max_iter);
  EXPECT_EQ(sol.iterations, 3);
  EXPECT_TRUE(sol.x.allFinite());
}

TEST(QpSolverTest, RejectsInvalidProblems) {
  Eigen::MatrixXd H(2, 2);
  H << 1.0, 0.5, 0.0, 1.0;
  EXPECT_THROW(solveQp(makeProblem(H, Eigen::VectorXd::Zero(2), Eigen::MatrixXd(0, 2),
                                   Eigen::VectorXd(0), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0))),
               ContractError);
  H << 1.0, 0.0, 0.0, -1.0;
  EXPECT_THROW(solveQp(makeProblem(H, Eigen::VectorXd::Zero(2), Eigen::MatrixXd(0, 2),
                                   Eigen::VectorXd(0), Eigen::MatrixXd(0, 2), Eigen::VectorXd(0))),
               ContractError);
  EXPECT_THROW(solveQp(makeProblem(Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(3),
                                   Eigen::MatrixXd(0, 2), Eigen::VectorXd(0),
                                   Eigen::MatrixXd(0, 2), Eigen::VectorXd(0))),
               ContractError);
}

TEST(QpSolverTest, DumpWritesTriplets) {
  const std::string path = ::testing::TempDir() + "qp_dump.txt";
  QpSettings settings;
  settings.dump_path = path;
  Eigen::MatrixXd H(1, 1), Ain(1, 1);
  H << 2.0;
  Ain << -1.0;
  solveQp(makeProblem(H, Eigen::VectorXd::Zero(1), Eigen::MatrixXd(0, 1), Eigen::VectorXd(0), Ain,
                      Eigen::VectorXd::Constant(1, -1.0)),
          settings);
  std::ifstream is(path);
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "%% H 1 1 1");
  std::getline(is, line);
  EXPECT_EQ(line, "1 1 2");
}

}  // namespace
}  // namespace grfest
