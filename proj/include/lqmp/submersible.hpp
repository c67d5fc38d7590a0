#pragma once

#include <optional>
#include <string>

#include "lqmp/junctions.hpp"
#include "lqmp/lqr.hpp"
#include "lqmp/model.hpp"
#include "lqmp/sequencing.hpp"

namespace lqmp {

enum class SubmersibleVariant { kNominal, kPerturbed };

/// Point-mass submersible: x'' = -bx x' + ux, y'' = -by y' + B, B' = uy,
/// with cost c1 ux^2 + c2 uy^2 + k1 x'^2 + k2 y'^2, height 0 <= y <= h and
/// thrust ux >= t_min.
struct SubmersibleScenario {
  double c1 = 10.0, c2 = 10.0;
  double k1 = 5.0, k2 = 1.0;
  double bx = 2.5, by = 2.5;
  double h = 25.0;
  double t_min = 1.0;
  // Boundary data (x, vx, y, vy, beta) with beta = B - by vy.
  Eigen::VectorXd start = (Eigen::VectorXd(5) << 0, 1, 20, 0, 0).finished();
  Eigen::VectorXd finish = (Eigen::VectorXd(5) << 100, 1, 1, 0, 0).finished();
  double T = 80.0;
  SubmersibleVariant variant = SubmersibleVariant::kNominal;
};

SubmersibleScenario submersible_scenario(SubmersibleVariant variant);
/// "nominal" or "perturbed"; throws InvalidInput.
SubmersibleVariant parse_variant(const std::string& name);
std::string to_string(SubmersibleVariant variant);

/// Chain coordinates z = [x, vx, y, vy, beta, ax, ay] with the cost matrix
/// as displayed for the feedback-linearized model (cross entries 2 c bx and
/// 2 c by) and the rows floor, ceiling, thrust.
LqProblem build_problem(const SubmersibleScenario& scenario);

/// The same vehicle in physical coordinates x = [x, x', y, y', B],
/// u = [ux, uy], with the cost expanded directly.
LqProblem physical_problem(const SubmersibleScenario& scenario);

/// Physical thrust, buoyancy rate and buoyancy (ux, uy, B) from a stacked
/// point in chain coordinates.
Eigen::Vector3d physical_controls(const SubmersibleScenario& scenario, const Eigen::VectorXd& z);

struct LqrBaseline {
  GaResult search;
  LqrEvaluation best;  // with trajectory
  double seconds = 0.0;
};

struct Table2Report {
  SubmersibleScenario scenario;
  Trajectory trajectory;
  double energy = 0.0;
  double solve_seconds = 0.0;
  int violations = 0;                // of check_feasibility
  double min_y = 0.0, max_y = 0.0, min_thrust = 0.0;
  std::optional<LqrBaseline> lqr;
  double ratio = 0.0;                // LQR energy / proposed energy
};

struct Table3Report {
  SubmersibleScenario scenario;
  Trajectory unconstrained;
  SequenceCandidate floor, ceiling;
  double gap_percent = 0.0;          // (ceiling - floor) / floor
  double x_chain_deviation = 0.0;    // max |x-chain(candidate) - x-chain(unconstrained)|
  double solve_seconds = 0.0;
  std::optional<LqrBaseline> lqr;
  double ratio = 0.0;                // LQR energy / floor energy
};

struct BenchOptions {
  bool run_lqr = true;
  GaOptions ga;
  SequencingOptions sequencing;
};

LqrBaseline run_lqr_baseline(const BrunovskyForm& form, const GaOptions& options);
Table2Report run_table2(const SubmersibleScenario& scenario, const BenchOptions& options = {});
Table3Report run_table3(const SubmersibleScenario& scenario, const BenchOptions& options = {});

}  // namespace lqmp
