#include <gtest/gtest.h>

#include "lqmp/error.hpp"
#include "lqmp/oracle.hpp"
#include "lqmp/qp.hpp"
#include "lqmp/submersible.hpp"
#include "support.hpp"

using namespace lqmp;

namespace {

SparseMatrixXd sparse(const MatrixXd& m) { return m.sparseView(); }

}  // namespace

TEST(Qp, SmallProblemByHand) {
  // min (y1-1)^2 + (y2-2)^2  s.t. y1 + y2 = 1, y1 >= 0.5.
  // Stationarity with the bound active: y = (0.5, 0.5), nu = 3, z = 2.
  QpProblem qp;
  qp.H = sparse(2.0 * MatrixXd::Identity(2, 2));
  qp.f = Eigen::Vector2d(-2, -4);
  qp.E = sparse(MatrixXd::Ones(1, 2));
  qp.b = VectorXd::Ones(1);
  qp.G = sparse((MatrixXd(1, 2) << -1, 0).finished());
  qp.h = VectorXd::Constant(1, -0.5);
  const auto sol = solve_qp(qp);
  EXPECT_NEAR(sol.y[0], 0.5, 1e-8);
  EXPECT_NEAR(sol.y[1], 0.5, 1e-8);
  EXPECT_NEAR(sol.nu[0], 3.0, 1e-7);
  EXPECT_NEAR(sol.z[0], 2.0, 1e-7);
  EXPECT_NEAR(sol.objective, -2.5, 1e-8);
  EXPECT_NEAR(sol.slack[0], 0.0, 1e-8);
}

TEST(Qp, InactiveBound) {
  QpProblem qp;
  qp.H = sparse(2.0 * MatrixXd::Identity(2, 2));
  qp.f = Eigen::Vector2d(-2, -4);
  qp.E = sparse(MatrixXd::Ones(1, 2));
  qp.b = VectorXd::Ones(1);
  qp.G = sparse((MatrixXd(1, 2) << 1, 0).finished());
  qp.h = VectorXd::Constant(1, 0.2);
  const auto sol = solve_qp(qp);
  EXPECT_NEAR(sol.y[0], 0.0, 1e-8);
  EXPECT_NEAR(sol.y[1], 1.0, 1e-8);
  EXPECT_NEAR(sol.z[0], 0.0, 1e-7);
}

TEST(Qp, InfeasibleBounds) {
  QpProblem qp;
  qp.H = sparse(MatrixXd::Identity(1, 1));
  qp.f = VectorXd::Zero(1);
  qp.E = SparseMatrixXd(0, 1);
  qp.b = VectorXd::Zero(0);
  qp.G = sparse((MatrixXd(2, 1) << 1, -1).finished());
  qp.h = (VectorXd(2) << 0.0, -1.0).finished();
  try {
    solve_qp(qp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kQpInfeasible);
  }
}

TEST(Collocation, ZeroData) {
  LqProblem p = fixtures::double_integrator(0, 0, 0, 0, 1);
  const auto r = collocate(p, 100);
  EXPECT_NEAR(r.cost, 0.0, 1e-10);
  EXPECT_LE(r.x.cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE(r.u.cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Collocation, UnshiftedCostIsTrapezoid) {
  const auto p = fixtures::double_integrator();
  const auto r = collocate(p, 200);
  EXPECT_FALSE(r.convexified);
  EXPECT_NEAR(trapezoid_cost(p, r.x, r.u, r.h), r.cost, 1e-9);
  EXPECT_LE(max_defect(p, r.x, r.u, r.h), 1e-9);
}

TEST(Collocation, DoubleIntegratorConverges) {
  const auto p = fixtures::double_integrator();
  const double exact = fixtures::min_energy_cubic(0, 0, 1, 0, 1).cost(1);
  const double e200 = collocate(p, 200).cost - exact;
  const double e400 = collocate(p, 400).cost - exact;
  const double e800 = collocate(p, 800).cost - exact;
  // Second order: each halving divides the error by about four.
  EXPECT_NEAR(e200 / e400, 4.0, 0.2);
  EXPECT_NEAR(e400 / e800, 4.0, 0.2);
  const double extrapolated = exact + (4 * e800 - e400) / 3;
  EXPECT_NEAR(extrapolated, 12.0, 1e-6);
}

TEST(Collocation, DefectsAndCostAreConsistent) {
  const auto p = build_problem(submersible_scenario(SubmersibleVariant::kPerturbed));
  const auto r = collocate(p, 400);
  EXPECT_LE(max_defect(p, r.x, r.u, r.h), 1e-7);
  // The shifted objective equals the original only in the limit.
  const auto fine = collocate(p, 800);
  const double d400 = std::abs(trapezoid_cost(p, r.x, r.u, r.h) - r.cost);
  const double d800 = std::abs(trapezoid_cost(p, fine.x, fine.u, fine.h) - fine.cost);
  EXPECT_LT(d800, 0.5 * d400);
  EXPECT_LE((r.x.row(0).transpose() - p.x0).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LE((r.x.row(r.nodes).transpose() - p.xT).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_GE(r.multipliers.minCoeff(), -1e-8);
}

TEST(Collocation, NominalSubmersible) {
  const auto p = build_problem(submersible_scenario(SubmersibleVariant::kNominal));
  const auto r = collocate(p, 1600);
  EXPECT_NEAR(r.cost, 8439.0, 0.01 * 8439.0);
  EXPECT_TRUE(r.binding.empty());
}

TEST(Collocation, PerturbedBindsFloor) {
  const auto p = build_problem(submersible_scenario(SubmersibleVariant::kPerturbed));
  const auto r = collocate(p, 800);
  ASSERT_FALSE(r.binding.empty());
  for (const auto& b : r.binding) EXPECT_EQ(b.row, 0);
}

TEST(ConvexifyingShift, AnnihilatesDrift) {
  const auto p = build_problem(submersible_scenario(SubmersibleVariant::kNominal));
  const MatrixXd P = convexifying_shift(p);
  EXPECT_LE((P - P.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((P * p.A + p.A.transpose() * P).cwiseAbs().maxCoeff(), 1e-10);
  // Subtracting d/dt x'Px leaves [[Q, N - PB], [., R]], which must be
  // positive semidefinite.
  const int n = p.num_states(), m = p.num_controls();
  MatrixXd K(n + m, n + m);
  K << p.Q, p.N - P * p.B, (p.N - P * p.B).transpose(), p.R;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(K);
  EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
}
