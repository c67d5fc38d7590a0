#include <gtest/gtest.h>

#include <cmath>

#include "lqmp/error.hpp"
#include "lqmp/junctions.hpp"
#include "lqmp/oracle.hpp"
#include "lqmp/problem_io.hpp"
#include "lqmp/sequencing.hpp"
#include "lqmp/submersible.hpp"
#include "support.hpp"

using namespace lqmp;

namespace {

struct Solved {
  std::shared_ptr<BrunovskyForm> form;
  std::unique_ptr<PrimitiveLibrary> lib;
  Trajectory traj;
};

Solved solve(const LqProblem& p, const std::vector<JunctionSpec>& specs = {}) {
  Solved s;
  s.form = fixtures::form_of(p);
  s.lib = std::make_unique<PrimitiveLibrary>(s.form);
  s.traj = specs.empty() ? solve_unconstrained(*s.lib) : solve_junctions(assemble(specs, *s.lib));
  return s;
}

JunctionSpec touch(int row) { return {JunctionKind::kTouch, {row}}; }

LqProblem submersible(SubmersibleVariant v) { return build_problem(submersible_scenario(v)); }

// Bryson-Denham: x0 = (0, 1), xT = (0, -1), T = 1, p <= l with l <= 1/6.
// Textbook closed form for J = int u^2 / 2 has cost 4 / (9 l); ours is twice that.
struct BrysonDenham {
  double l;
  double entry() const { return 3 * l; }
  double exit() const { return 1 - 3 * l; }
  double cost() const { return 2.0 * 4.0 / (9.0 * l); }
  double p(double t) const {
    if (t > 0.5) return p(1 - t);
    if (t >= entry()) return l;
    const double r = 1 - t / (3 * l);
    return l * (1 - r * r * r);
  }
};

}  // namespace

TEST(SolveUnconstrained, DoubleIntegratorMatchesCubic) {
  const auto s = solve(fixtures::double_integrator());
  const auto cubic = fixtures::min_energy_cubic(0, 0, 1, 0, 1);
  EXPECT_NEAR(cubic.cost(1), 12.0, 1e-12);
  EXPECT_NEAR(energy(s.traj), cubic.cost(1), 1e-6);
  for (int k = 0; k <= 50; ++k) {
    const double t = k / 50.0;
    const auto pt = evaluate(s.traj, t);
    EXPECT_NEAR(pt.x[0], cubic.p(t), 1e-9);
    EXPECT_NEAR(pt.x[1], cubic.v(t), 1e-9);
    EXPECT_NEAR(pt.u[0], cubic.u(t), 1e-8);
  }
}

TEST(SolveUnconstrained, NonRestBoundaryMatchesCubic) {
  const auto s = solve(fixtures::double_integrator(0.3, -1.0, -2.0, 0.5, 2.5));
  const auto cubic = fixtures::min_energy_cubic(0.3, -1.0, -2.0, 0.5, 2.5);
  EXPECT_NEAR(energy(s.traj), cubic.cost(2.5), 1e-6 * (1 + cubic.cost(2.5)));
  EXPECT_NEAR(evaluate(s.traj, 1.7).x[0], cubic.p(1.7), 1e-9);
}

TEST(SolveUnconstrained, ZeroDataGivesZeroTrajectory) {
  const auto s = solve(fixtures::double_integrator(0, 0, 0, 0, 1));
  EXPECT_NEAR(energy(s.traj), 0.0, 1e-14);
  for (int k = 0; k <= 10; ++k) {
    const auto pt = evaluate(s.traj, k / 10.0);
    EXPECT_LE(pt.z.cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LE(pt.lambda.cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(SolveUnconstrained, SubmersibleNominalEnergy) {
  const auto s = solve(submersible(SubmersibleVariant::kNominal));
  EXPECT_NEAR(energy(s.traj), 8439.0, 0.01 * 8439.0);
}

TEST(SolveUnconstrained, EmptySequenceIsSame) {
  const auto p = submersible(SubmersibleVariant::kNominal);
  const auto a = solve(p);
  auto form = fixtures::form_of(p);
  PrimitiveLibrary lib(form);
  const Trajectory b = solve_junctions(assemble({}, lib));
  EXPECT_EQ(b.junctions.size(), 0u);
  EXPECT_NEAR(energy(a.traj), energy(b), 1e-9);
  for (double t : {0.0, 13.0, 40.0, 79.5}) EXPECT_LE((evaluate(a.traj, t).z - evaluate(b, t).z).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Costate, MatchesCollocationAdjoint) {
  const auto p = fixtures::double_integrator(0, 0, 1, 0, 1);
  const auto s = solve(p);
  const auto col = collocate(p, 1600);
  double worst = 0;
  for (int k = 0; k < col.nodes; k += 40) {
    const double t = (k + 0.5) * col.h;
    const auto pt = evaluate(s.traj, t);
    worst = std::max(worst, (pt.lambda - col.costate.row(k).transpose()).cwiseAbs().maxCoeff());
  }
  EXPECT_LE(worst, 1e-4);
}

TEST(Costate, PartialSumsMatchHamiltonianCostate) {
  const auto s = solve(submersible(SubmersibleVariant::kNominal));
  const auto rep = check_optimality(s.traj);
  EXPECT_LE(rep.costate_formula, 1e-8);
}

TEST(Costate, SmoothAlongXChain) {
  // lambda for v_x sampled densely: increments shrink with the step.
  const auto s = solve(submersible(SubmersibleVariant::kNominal));
  auto max_increment = [&](int N) {
    double worst = 0, prev = evaluate(s.traj, 0).lambda[1];
    for (int k = 1; k <= N; ++k) {
      const double v = evaluate(s.traj, 80.0 * k / N).lambda[1];
      worst = std::max(worst, std::abs(v - prev));
      prev = v;
    }
    return worst;
  };
  const double coarse = max_increment(800), fine = max_increment(1600);
  EXPECT_LT(fine, 0.6 * coarse);
}

TEST(Evaluate, BoundaryValues) {
  const auto p = submersible(SubmersibleVariant::kPerturbed);
  const auto s = solve(p, {touch(0)});
  EXPECT_LE((evaluate(s.traj, 0).x - p.x0).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((evaluate(s.traj, p.T).x - p.xT).cwiseAbs().maxCoeff(), 1e-6);
  try {
    evaluate(s.traj, -0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfHorizon);
  }
  EXPECT_THROW(evaluate(s.traj, p.T + 0.1), Error);
}

TEST(Evaluate, FloorTouchPosition) {
  const auto s = solve(submersible(SubmersibleVariant::kPerturbed), {touch(0)});
  ASSERT_EQ(s.traj.junctions.size(), 1u);
  const double t1 = s.traj.junctions[0].spec.time;
  const auto pt = evaluate(s.traj, t1);
  EXPECT_NEAR(pt.z[2], 0.0, 1e-9);
  EXPECT_NEAR(pt.z[3], 0.0, 1e-6);
}

// The instantaneous touch imposes y(t1) = 0 only; beta(t1) = 0 is also
// expected at the touch and is checked separately.
TEST(TouchStack, FloorTouchAccelerationVanishes) {
  const auto s = solve(submersible(SubmersibleVariant::kPerturbed), {touch(0)});
  const double t1 = s.traj.junctions[0].spec.time;
  EXPECT_NEAR(evaluate(s.traj, t1).z[4], 0.0, 1e-6);
}

TEST(JunctionSystem, TouchCountsBalance) {
  const auto form = fixtures::form_of(submersible(SubmersibleVariant::kPerturbed));
  PrimitiveLibrary lib(form);
  const auto sys = assemble({touch(0)}, lib);
  const int n = form->num_states();
  EXPECT_EQ(sys.counts.unknowns, sys.counts.equations);
  ASSERT_EQ(sys.counts.per_junction.size(), 1u);
  const int rows = static_cast<int>(sys.N[0].rows());
  EXPECT_EQ(rows, 1);
  EXPECT_EQ(sys.counts.per_junction[0].first, 2 * n + rows + 1);
  EXPECT_EQ(sys.counts.per_junction[0].second, 2 * n + rows + 1);
}

TEST(JunctionSystem, IntervalAddsTwoJunctions) {
  const auto form = fixtures::form_of(load_problem(LQMP_DATA_DIR "/double_integrator_ceiling.json"));
  PrimitiveLibrary lib(form);
  const auto sys = assemble({{JunctionKind::kEntry, {0}}, {JunctionKind::kExit, {0}}}, lib);
  EXPECT_EQ(sys.num_junctions(), 2);
  EXPECT_EQ(sys.counts.unknowns, sys.counts.equations);
  const int n = form->num_states();
  for (int j = 0; j < 2; ++j) {
    const int rows = static_cast<int>(sys.N[j].rows());
    EXPECT_EQ(sys.counts.per_junction[j].first, 2 * n + rows + 1);
    EXPECT_EQ(sys.counts.per_junction[j].second, 2 * n + rows + 1);
  }
}

TEST(JunctionSystem, EmptySequenceHasBoundaryOnly) {
  const auto form = fixtures::form_of(fixtures::double_integrator());
  PrimitiveLibrary lib(form);
  const auto sys = assemble({}, lib);
  EXPECT_EQ(sys.num_junctions(), 0);
  EXPECT_EQ(sys.counts.unknowns, sys.counts.equations);
  EXPECT_TRUE(sys.counts.per_junction.empty());
}

TEST(SolveJunctions, BrysonDenhamClosedForm) {
  const BrysonDenham bd{0.1};
  EXPECT_NEAR(bd.cost(), 8.0 / 0.9, 1e-12);
  const auto s = solve(load_problem(LQMP_DATA_DIR "/double_integrator_ceiling.json"),
                       {{JunctionKind::kEntry, {0}}, {JunctionKind::kExit, {0}}});
  ASSERT_EQ(s.traj.junctions.size(), 2u);
  // The jump is quadratic in the time error near these roots and the linear
  // solve carries ~1e-12 noise, so the times are good to ~1e-6.
  EXPECT_NEAR(s.traj.junctions[0].spec.time, bd.entry(), 1e-6);
  EXPECT_NEAR(s.traj.junctions[1].spec.time, bd.exit(), 1e-6);
  EXPECT_NEAR(energy(s.traj), bd.cost(), 1e-6);
  for (int k = 0; k <= 100; ++k) EXPECT_NEAR(evaluate(s.traj, k / 100.0).x[0], bd.p(k / 100.0), 1e-7);
  for (const auto& j : s.traj.junctions) EXPECT_LE(std::abs(j.hamiltonian_jump), 1e-8);
}

TEST(SolveJunctions, PerturbedFloorTouch) {
  const auto s = solve(submersible(SubmersibleVariant::kPerturbed), {touch(0)});
  EXPECT_NEAR(energy(s.traj), 8458.0, 0.01 * 8458.0);
  const double t1 = s.traj.junctions[0].spec.time;
  EXPECT_GT(t1, 0.0);
  EXPECT_LT(t1, 80.0);
  EXPECT_LE(std::abs(s.traj.junctions[0].hamiltonian_jump), 1e-8);
  EXPECT_LE(max_violation(s.traj, 20000), 1e-8);
}

TEST(SolveJunctions, PerturbedCeilingTouch) {
  const auto s = solve(submersible(SubmersibleVariant::kPerturbed), {touch(1)});
  EXPECT_NEAR(energy(s.traj), 8561.0, 0.01 * 8561.0);
  EXPECT_LE(std::abs(s.traj.junctions[0].hamiltonian_jump), 1e-8);
}

TEST(Optimality, FloorTouchSuite) {
  const auto s = solve(submersible(SubmersibleVariant::kPerturbed), {touch(0)});
  const auto r = check_optimality(s.traj);
  EXPECT_LE(r.euler_lagrange, 1e-8);
  EXPECT_LE(r.hamiltonian_drift, 1e-6);
  EXPECT_LE(r.state_continuity, 1e-9);
  EXPECT_LE(r.costate_jump, 1e-8);
  EXPECT_LE(r.hamiltonian_jump, 1e-6);
  EXPECT_GE(r.min_multiplier, -1e-9);
}

TEST(Optimality, IntervalSuite) {
  const auto s = solve(load_problem(LQMP_DATA_DIR "/double_integrator_ceiling.json"),
                       {{JunctionKind::kEntry, {0}}, {JunctionKind::kExit, {0}}});
  const auto r = check_optimality(s.traj);
  EXPECT_LE(r.euler_lagrange, 1e-8);
  EXPECT_LE(r.hamiltonian_drift, 1e-6);
  EXPECT_LE(r.state_continuity, 1e-9);
  EXPECT_LE(r.costate_jump, 1e-8);
  EXPECT_GE(r.min_multiplier, -1e-9);
}

TEST(Energy, QuadratureMatchesFineTrapezoid) {
  const auto s = solve(submersible(SubmersibleVariant::kPerturbed), {touch(0)});
  const auto& K = s.form->Kmat;
  const int N = 200000;
  double sum = 0;
  for (int k = 0; k <= N; ++k) {
    const double t = 80.0 * k / N;
    const VectorXd z = evaluate(s.traj, t).z;
    sum += (k == 0 || k == N ? 0.5 : 1.0) * z.dot(K * z);
  }
  sum *= 80.0 / N;
  EXPECT_NEAR(energy(s.traj), sum, 1e-5 * sum);
}
