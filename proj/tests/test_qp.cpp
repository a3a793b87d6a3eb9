// Dual active-set solver: hand-solvable instances, randomized comparison
// against the exhaustive active-set oracle and failure-mode behavior.

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace wbc;

namespace {

QpProblem blank(int n) {
  QpProblem p;
  p.h_diag = VecX::Ones(n);
  p.g = VecX::Zero(n);
  p.eq_a = MatX::Zero(0, n);
  p.eq_b = VecX::Zero(0);
  p.in_a = MatX::Zero(0, n);
  p.in_b = VecX::Zero(0);
  p.lower = VecX::Constant(n, -kInf);
  p.upper = VecX::Constant(n, kInf);
  return p;
}

}  // namespace

TEST(Qp, UnconstrainedMinimizer) {
  QpProblem p = blank(3);
  p.g = (VecX(3) << 1.0, -2.0, 0.5).finished();
  p.h_diag = (VecX(3) << 2.0, 1.0, 4.0).finished();
  const QpSolution s = qp_solve(p);
  EXPECT_EQ(s.status, QpStatus::Optimal);
  EXPECT_LT((s.u - (VecX(3) << -0.5, 2.0, -0.125).finished()).norm(), 1e-12);
  EXPECT_TRUE(s.active.empty());
}

TEST(Qp, LowerBoundBecomesActive) {
  // min 1/2 u^2 with u >= 1: the bound is tight with multiplier 1.
  QpProblem p = blank(1);
  p.lower(0) = 1.0;
  const QpSolution s = qp_solve(p);
  EXPECT_EQ(s.status, QpStatus::Optimal);
  EXPECT_NEAR(s.u(0), 1.0, 1e-12);
  ASSERT_EQ(s.active.size(), 1u);
  EXPECT_NEAR(s.in_duals(s.active[0]), 1.0, 1e-12);
}

TEST(Qp, EqualitySplitsEvenly) {
  // min 1/2 ||u||^2 with x + y = 1: symmetric split, dual -0.5.
  QpProblem p = blank(2);
  p.eq_a = MatX::Ones(1, 2);
  p.eq_b = VecX::Ones(1);
  const QpSolution s = qp_solve(p);
  EXPECT_EQ(s.status, QpStatus::Optimal);
  EXPECT_LT((s.u - VecX::Constant(2, 0.5)).norm(), 1e-12);
  ASSERT_EQ(s.eq_duals.size(), 1);
  EXPECT_NEAR(s.eq_duals(0), -0.5, 1e-12);
  EXPECT_LT(s.stationarity_residual, 1e-10);
}

TEST(Qp, RedundantEqualityRowsAreTolerated) {
  QpProblem p = blank(2);
  p.eq_a = MatX::Ones(2, 2);  // duplicated row, consistent bounds
  p.eq_b = VecX::Ones(2);
  const QpSolution s = qp_solve(p);
  EXPECT_EQ(s.status, QpStatus::Optimal);
  EXPECT_LT((s.u - VecX::Constant(2, 0.5)).norm(), 1e-10);
}

TEST(Qp, InequalityPushesSolution) {
  // min 1/2 u^2 with -u <= -2 (u >= 2).
  QpProblem p = blank(1);
  p.in_a = MatX::Constant(1, 1, -1.0);
  p.in_b = VecX::Constant(1, -2.0);
  const QpSolution s = qp_solve(p);
  EXPECT_EQ(s.status, QpStatus::Optimal);
  EXPECT_NEAR(s.u(0), 2.0, 1e-12);
  EXPECT_NEAR(s.in_duals(0), 2.0, 1e-12);
  EXPECT_LT(s.complementarity_residual, 1e-10);
}

TEST(Qp, DetectsContradictoryRows) {
  QpProblem p = blank(1);
  p.in_a = MatX::Zero(2, 1);
  p.in_a << 1.0, -1.0;
  p.in_b = (VecX(2) << -1.0, -1.0).finished();  // u <= -1 and u >= 1
  const QpSolution s = qp_solve(p);
  EXPECT_EQ(s.status, QpStatus::Infeasible);
  EXPECT_FALSE(s.conflict.empty());
}

TEST(Qp, DetectsEqualityBoxConflict) {
  QpProblem p = blank(2);
  p.eq_a = MatX::Zero(1, 2);
  p.eq_a(0, 0) = 1.0;
  p.eq_b = VecX::Zero(1);
  p.lower(0) = 1.0;  // x = 0 but x >= 1
  const QpSolution s = qp_solve(p);
  EXPECT_EQ(s.status, QpStatus::Infeasible);
}

TEST(Qp, RandomizedAgainstExhaustiveOracle) {
  std::mt19937 rng(61);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.1, 10.0);
  std::uniform_int_distribution<int> n_dist(2, 6);
  std::uniform_int_distribution<int> m_in_dist(0, 6);
  std::uniform_int_distribution<int> coin(0, 3);

  int solved = 0;
  for (int trial = 0; trial < 250; ++trial) {
    const int n = n_dist(rng);
    std::uniform_int_distribution<int> m_eq_dist(0, n - 1);
    const int m_eq = m_eq_dist(rng);
    const int m_in = m_in_dist(rng);

    QpProblem p = blank(n);
    for (int i = 0; i < n; ++i) p.h_diag(i) = pos(rng);
    for (int i = 0; i < n; ++i) p.g(i) = 3.0 * unit(rng);

    // A guaranteed-feasible point anchors every constraint.
    VecX u0(n);
    for (int i = 0; i < n; ++i) u0(i) = 2.0 * unit(rng);

    p.eq_a = MatX::Zero(m_eq, n);
    p.eq_b = VecX::Zero(m_eq);
    for (int r = 0; r < m_eq; ++r) {
      for (int c = 0; c < n; ++c) p.eq_a(r, c) = unit(rng);
      p.eq_b(r) = p.eq_a.row(r).dot(u0);
    }
    if (m_eq > 0 && Eigen::FullPivLU<MatX>(p.eq_a).rank() < m_eq) continue;

    p.in_a = MatX::Zero(m_in, n);
    p.in_b = VecX::Zero(m_in);
    for (int r = 0; r < m_in; ++r) {
      for (int c = 0; c < n; ++c) p.in_a(r, c) = unit(rng);
      p.in_b(r) = p.in_a.row(r).dot(u0) + 0.5 * std::abs(unit(rng));
    }
    for (int i = 0; i < n; ++i) {
      if (coin(rng) == 0) p.lower(i) = u0(i) - 0.3 - std::abs(unit(rng));
      if (coin(rng) == 0) p.upper(i) = u0(i) + 0.3 + std::abs(unit(rng));
    }

    const QpSolution s = qp_solve(p);
    ASSERT_EQ(s.status, QpStatus::Optimal) << "trial " << trial;
    const auto oracle = oracles::qp_oracle(p);
    ASSERT_TRUE(oracle.found) << "trial " << trial;
    EXPECT_NEAR(p.objective(s.u), oracle.objective, 1e-6) << "trial " << trial;
    EXPECT_LT(s.eq_residual, 1e-8);
    EXPECT_LT(s.in_residual, 1e-8);
    EXPECT_LT(s.stationarity_residual, 1e-7);
    EXPECT_LT(s.complementarity_residual, 1e-7);
    ++solved;
  }
  // The rank re-draws discard at most a handful of trials.
  EXPECT_GE(solved, 200);
}

TEST(Qp, WarmStartReproducesSolution) {
  std::mt19937 rng(62);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    QpProblem p = blank(5);
    for (int i = 0; i < 5; ++i) p.g(i) = 3.0 * unit(rng);
    p.in_a = MatX::Zero(4, 5);
    p.in_b = VecX::Zero(4);
    VecX u0(5);
    for (int i = 0; i < 5; ++i) u0(i) = unit(rng);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 5; ++c) p.in_a(r, c) = unit(rng);
      p.in_b(r) = p.in_a.row(r).dot(u0) + 0.05;
    }
    const QpSolution cold = qp_solve(p);
    ASSERT_EQ(cold.status, QpStatus::Optimal);
    QpOptions opt;
    opt.warm_rows = cold.active;
    const QpSolution warm = qp_solve(p, opt);
    ASSERT_EQ(warm.status, QpStatus::Optimal);
    EXPECT_LT((warm.u - cold.u).norm(), 1e-9);
    // Stale or nonsense hints must never change the answer.
    opt.warm_rows = {99, -3, 2, 2, 0};
    const QpSolution stale = qp_solve(p, opt);
    ASSERT_EQ(stale.status, QpStatus::Optimal);
    EXPECT_LT((stale.u - cold.u).norm(), 1e-9);
  }
}

TEST(Qp, MaxIterationsReported) {
  QpProblem p = blank(3);
  p.g = VecX::Constant(3, 5.0);
  p.in_a = MatX::Identity(3, 3) * -1.0;
  p.in_b = VecX::Constant(3, -1.0);  // u >= 1 in every coordinate
  QpOptions opt;
  opt.max_iter = 1;
  const QpSolution s = qp_solve(p, opt);
  EXPECT_EQ(s.status, QpStatus::MaxIterations);
  EXPECT_TRUE(s.u.allFinite());
}

TEST(Qp, KktResidualRecoveryFlagsPerturbation) {
  QpProblem p = blank(2);
  p.g = (VecX(2) << 1.0, -1.0).finished();
  p.in_a = MatX::Ones(1, 2);
  p.in_b = VecX::Zero(1);
  const QpSolution s = qp_solve(p);
  ASSERT_EQ(s.status, QpStatus::Optimal);
  const KktResiduals good = kkt_residuals(p, s.u);
  EXPECT_LT(good.stationarity, 1e-8);
  const KktResiduals bad = kkt_residuals(p, s.u + VecX::Constant(2, 0.01));
  EXPECT_GT(std::max({bad.stationarity, bad.ineq, bad.eq}), 1e-3);
}

TEST(Qp, DumpLoadRoundTrip) {
  std::mt19937 rng(63);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  QpProblem p = blank(4);
  for (int i = 0; i < 4; ++i) {
    p.g(i) = unit(rng);
    p.h_diag(i) = 1.0 + std::abs(unit(rng));
  }
  p.eq_a = MatX::Zero(1, 4);
  for (int c = 0; c < 4; ++c) p.eq_a(0, c) = unit(rng);
  p.eq_b = VecX::Constant(1, 0.25);
  p.in_a = MatX::Zero(2, 4);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 4; ++c) p.in_a(r, c) = unit(rng);
  p.in_b = (VecX(2) << 1.0, 2.0).finished();
  p.lower(1) = -0.7;
  p.upper(2) = 0.9;

  const std::string path = "/tmp/wbc_qp_roundtrip.txt";
  dump_qp(p, path);
  const QpProblem q = load_qp(path);
  EXPECT_LT((p.h_diag - q.h_diag).norm(), 1e-16);
  EXPECT_LT((p.g - q.g).norm(), 1e-16);
  EXPECT_LT((p.eq_a - q.eq_a).norm(), 1e-16);
  EXPECT_LT((p.in_a - q.in_a).norm(), 1e-16);
  EXPECT_EQ(q.lower(0), -kInf);
  EXPECT_EQ(q.lower(1), -0.7);
  EXPECT_EQ(q.upper(2), 0.9);
  // Identical solutions on both instances.
  EXPECT_LT((qp_solve(p).u - qp_solve(q).u).norm(), 1e-15);
}

TEST(Qp, ValidationRejectsBadProblems) {
  QpProblem p = blank(2);
  p.h_diag(0) = 0.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = blank(2);
  p.g.resize(3);
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = blank(2);
  p.g = VecX::Constant(2, std::nan(""));
  EXPECT_THROW(p.validate(), std::invalid_argument);
}
