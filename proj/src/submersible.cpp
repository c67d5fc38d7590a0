#include "lqmp/submersible.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>

#include "lqmp/error.hpp"

namespace lqmp {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double x_chain_deviation(const Trajectory& a, const Trajectory& b, int samples = 2000) {
  const BrunovskyForm& form = *a.form;
  std::vector<int> cols = chain_slices(form)[0];
  double worst = 0.0;
  for (int k = 0; k <= samples; ++k) {
    const double t = form.T * k / samples;
    const VectorXd za = evaluate(a, t).z, zb = evaluate(b, t).z;
    for (int c : cols) worst = std::max(worst, std::abs(za[c] - zb[c]));
  }
  return worst;
}

}  // namespace

SubmersibleScenario submersible_scenario(SubmersibleVariant variant) {
  SubmersibleScenario s;
  s.variant = variant;
  if (variant == SubmersibleVariant::kPerturbed) {
    s.start[3] = -3.0;
    s.start[4] = -1.0;
  }
  return s;
}

SubmersibleVariant parse_variant(const std::string& name) {
  if (name == "nominal") return SubmersibleVariant::kNominal;
  if (name == "perturbed") return SubmersibleVariant::kPerturbed;
  throw Error(ErrorCode::kInvalidInput, "unknown variant '" + name + "' (nominal or perturbed)");
}

std::string to_string(SubmersibleVariant variant) {
  return variant == SubmersibleVariant::kNominal ? "nominal" : "perturbed";
}

LqProblem build_problem(const SubmersibleScenario& s) {
  LqProblem p;
  p.coordinates = Coordinates::kBrunovsky;
  p.A = MatrixXd::Zero(5, 5);
  p.A(0, 1) = 1;
  p.A(2, 3) = 1;
  p.A(3, 4) = 1;
  p.B = MatrixXd::Zero(5, 2);
  p.B(1, 0) = 1;
  p.B(4, 1) = 1;

  MatrixXd K = MatrixXd::Zero(7, 7);
  K(1, 1) = s.c1 * s.bx * s.bx + s.k1;
  K(1, 5) = K(5, 1) = 2 * s.c1 * s.bx;
  K(3, 3) = s.k2;
  K(4, 4) = s.c2 * s.by * s.by;
  K(4, 6) = K(6, 4) = 2 * s.c2 * s.by;
  K(5, 5) = s.c1;
  K(6, 6) = s.c2;
  p.Q = K.topLeftCorner(5, 5);
  p.N = K.topRightCorner(5, 2);
  p.R = K.bottomRightCorner(2, 2);

  p.C = MatrixXd::Zero(3, 5);
  p.C(0, 2) = -1;
  p.C(1, 2) = 1;
  p.C(2, 1) = -s.bx;
  p.D = MatrixXd::Zero(3, 2);
  p.D(2, 0) = -1;
  p.e = Eigen::Vector3d(0, s.h, -s.t_min);

  p.x0 = s.start;
  p.xT = s.finish;
  p.T = s.T;
  p.state_names = {"x", "v_x", "y", "v_y", "beta"};
  p.control_names = {"a_x", "a_y"};
  p.constraint_names = {"floor", "ceiling", "thrust"};
  return p;
}

LqProblem physical_problem(const SubmersibleScenario& s) {
  LqProblem p;
  p.A = MatrixXd::Zero(5, 5);
  p.A(0, 1) = 1;
  p.A(1, 1) = -s.bx;
  p.A(2, 3) = 1;
  p.A(3, 3) = -s.by;
  p.A(3, 4) = 1;
  p.B = MatrixXd::Zero(5, 2);
  p.B(1, 0) = 1;
  p.B(4, 1) = 1;
  p.Q = MatrixXd::Zero(5, 5);
  p.Q(1, 1) = s.k1;
  p.Q(3, 3) = s.k2;
  p.R = Eigen::Vector2d(s.c1, s.c2).asDiagonal();
  p.N = MatrixXd::Zero(5, 2);
  p.C = MatrixXd::Zero(3, 5);
  p.C(0, 2) = -1;
  p.C(1, 2) = 1;
  p.D = MatrixXd::Zero(3, 2);
  p.D(2, 0) = -1;
  p.e = Eigen::Vector3d(0, s.h, -s.t_min);
  // B = beta + by vy.
  auto physical = [&](const VectorXd& c) {
    VectorXd x = c;
    x[4] = c[4] + s.by * c[3];
    return x;
  };
  p.x0 = physical(s.start);
  p.xT = physical(s.finish);
  p.T = s.T;
  p.state_names = {"x", "xdot", "y", "ydot", "B"};
  p.control_names = {"u_x", "u_y"};
  p.constraint_names = {"floor", "ceiling", "thrust"};
  return p;
}

Eigen::Vector3d physical_controls(const SubmersibleScenario& s, const VectorXd& z) {
  const double ux = s.bx * z[1] + z[5];
  const double uy = z[6] + s.by * z[4];
  const double B = z[4] + s.by * z[3];
  return {ux, uy, B};
}

LqrBaseline run_lqr_baseline(const BrunovskyForm& form, const GaOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  LqrBaseline out;
  out.search = optimize_weights(form, options);
  SimulationOptions sim = options.simulation;
  sim.keep_trajectory = true;
  out.best = evaluate_weights(form, out.search.best_weights, sim);
  out.seconds = seconds_since(t0);
  return out;
}

Table2Report run_table2(const SubmersibleScenario& s, const BenchOptions& options) {
  Table2Report r;
  r.scenario = s;
  auto form = std::make_shared<const BrunovskyForm>(to_brunovsky(build_problem(s)));
  std::future<LqrBaseline> lqr;
  if (options.run_lqr) lqr = std::async(std::launch::async, [&] { return run_lqr_baseline(*form, options.ga); });

  const auto t0 = std::chrono::steady_clock::now();
  PrimitiveLibrary library(form);
  r.trajectory = solve_unconstrained(library);
  r.energy = energy(r.trajectory);
  r.solve_seconds = seconds_since(t0);
  r.violations = static_cast<int>(check_feasibility(r.trajectory, options.sequencing.feasibility_points,
                                                    options.sequencing.feasibility_tolerance).size());
  r.min_y = std::numeric_limits<double>::infinity();
  r.max_y = -r.min_y;
  r.min_thrust = r.min_y;
  for (int k = 0; k <= 10000; ++k) {
    const VectorXd z = evaluate(r.trajectory, s.T * k / 10000).z;
    r.min_y = std::min(r.min_y, z[2]);
    r.max_y = std::max(r.max_y, z[2]);
    r.min_thrust = std::min(r.min_thrust, physical_controls(s, z)[0]);
  }
  if (options.run_lqr) {
    r.lqr = lqr.get();
    r.ratio = r.lqr->best.energy / r.energy;
  }
  return r;
}

Table3Report run_table3(const SubmersibleScenario& s, const BenchOptions& options) {
  Table3Report r;
  r.scenario = s;
  auto form = std::make_shared<const BrunovskyForm>(to_brunovsky(build_problem(s)));
  std::future<LqrBaseline> lqr;
  if (options.run_lqr) lqr = std::async(std::launch::async, [&] { return run_lqr_baseline(*form, options.ga); });

  const auto t0 = std::chrono::steady_clock::now();
  PrimitiveLibrary library(form);
  const int floor = constraint_index(*form, "floor"), ceiling = constraint_index(*form, "ceiling");
  r.unconstrained = solve_unconstrained(library);
  auto floor_job = std::async(std::launch::async, [&] {
    return solve_sequence(library, {{JunctionKind::kTouch, {floor}}}, options.sequencing);
  });
  r.ceiling = solve_sequence(library, {{JunctionKind::kTouch, {ceiling}}}, options.sequencing);
  r.floor = floor_job.get();
  r.solve_seconds = seconds_since(t0);
  if (r.floor.solved() && r.ceiling.solved()) r.gap_percent = 100.0 * (r.ceiling.cost - r.floor.cost) / r.floor.cost;
  for (const SequenceCandidate* c : {&r.floor, &r.ceiling})
    if (c->trajectory) r.x_chain_deviation = std::max(r.x_chain_deviation, x_chain_deviation(*c->trajectory, r.unconstrained));
  if (options.run_lqr) {
    r.lqr = lqr.get();
    if (r.floor.solved()) r.ratio = r.lqr->best.energy / r.floor.cost;
  }
  return r;
}

}  // namespace lqmp
