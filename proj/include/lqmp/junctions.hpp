#pragma once

#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lqmp/model.hpp"
#include "lqmp/primitive_cache.hpp"
#include "lqmp/primitives.hpp"

namespace lqmp {

enum class JunctionKind { kTouch, kEntry, kExit };

std::string to_string(JunctionKind kind);

/// One switch between primitives. `time` is the solved time, or the initial
/// guess before solving (NaN when unknown).
struct JunctionSpec {
  JunctionKind kind = JunctionKind::kTouch;
  std::vector<int> constraints;
  double time = std::numeric_limits<double>::quiet_NaN();
};

/// A primitive with solved coefficients on [ta, tb]. The arc state is
/// w = [s; lambda; 1] = Phi(t) coeffs; the multipliers are functions of w.
struct Arc {
  std::shared_ptr<const MotionPrimitive> primitive;
  VectorXd coeffs;
  double ta = 0.0, tb = 0.0;

  VectorXd w(double t) const;
  /// order-th time derivative of w.
  VectorXd w_derivative(double t, int order) const;
  VectorXd z(double t) const { return primitive->ham.Z * w(t); }
  VectorXd multipliers(double t) const { return primitive->ham.Eta * w(t); }
};

struct SolvedJunction {
  JunctionSpec spec;
  MatrixXd N;         // tangency rows on the state
  VectorXd offsets;
  VectorXd pi;        // interior-point multipliers
  double hamiltonian_jump = 0.0;
};

struct Trajectory {
  std::shared_ptr<const BrunovskyForm> form;
  std::vector<Arc> arcs;
  std::vector<SolvedJunction> junctions;
  double condition = 0.0;  // of the equilibrated linear solve

  double horizon() const { return form->T; }
  /// Index of the arc containing t, right-continuous at junctions.
  int arc_index(double t) const;
  std::vector<std::vector<int>> active_sets() const;
};

/// Evaluated point: stacked z, original-coordinate state and control,
/// costate and multipliers of the containing arc.
struct StackedPoint {
  VectorXd z;
  VectorXd x;
  VectorXd u;
  VectorXd lambda;
  VectorXd eta;
  int arc = 0;
};

struct EquationCount {
  std::string category;
  int count = 0;
};

struct SystemCounts {
  int unknowns = 0;
  int equations = 0;
  std::vector<EquationCount> unknown_breakdown;
  std::vector<EquationCount> equation_breakdown;
  /// Per junction: unknowns added (2n + rows + 1) and equations added
  /// (n state + n costate + rows + 1 Hamiltonian).
  std::vector<std::pair<int, int>> per_junction;
};

/// Layout of the junction system: arc coefficients (2n+1 each, the last
/// fixed by normalisation), interior-point multipliers per junction and the
/// junction times. For fixed times the system is linear; the Hamiltonian
/// condition at each junction closes it.
struct JunctionSystem {
  std::shared_ptr<const BrunovskyForm> form;
  std::vector<JunctionSpec> specs;
  std::vector<std::shared_ptr<const MotionPrimitive>> arc_primitives;
  std::vector<MatrixXd> N;  // per junction, over the state
  std::vector<VectorXd> offsets;
  std::vector<int> coeff_offset;
  std::vector<int> pi_offset;
  int num_linear = 0;
  SystemCounts counts;

  int num_junctions() const { return static_cast<int>(specs.size()); }
};

/// Builds the system for an ordered list of junctions. Throws InvalidInput
/// for malformed sequences and CountMismatch if the bookkeeping fails.
JunctionSystem assemble(const std::vector<JunctionSpec>& sequence, PrimitiveLibrary& library);

/// Exact linear solve for fixed junction times. Throws IllConditioned when
/// the equilibrated condition number exceeds 1e12.
Trajectory solve_fixed_times(const JunctionSystem& system, const std::vector<double>& times);

/// H(t+) - H(t-) at every junction.
VectorXd hamiltonian_jumps(const Trajectory& trajectory);

struct JunctionSolveOptions {
  int scan_points = 200;
  double tolerance = 1e-8;
  int max_newton_iterations = 60;
  /// Violation tolerance for preferring feasible roots.
  double feasibility_tolerance = 1e-7;
  int feasibility_samples = 2000;
};

struct JunctionRoot {
  std::vector<double> times;
  double energy = 0.0;
  double violation = 0.0;
};

/// Solves for the junction times. One junction: scan plus bracketed Brent
/// refinement. Several: damped Newton from the initial guesses (spec times)
/// and then a coarse grid. Among the roots a feasible one of least energy is
/// returned. Throws NoRoot.
Trajectory solve_junctions(const JunctionSystem& system, const JunctionSolveOptions& options = {},
                           std::vector<JunctionRoot>* roots = nullptr);

Trajectory solve_unconstrained(PrimitiveLibrary& library);

/// Throws OutOfHorizon outside [0, T]. `left` takes the left limit at a
/// junction instead of the right-continuous value.
StackedPoint evaluate(const Trajectory& trajectory, double t, bool left = false);

/// Costate of chain/order by the partial sums of signed gradient derivatives.
double costate(const Arc& arc, const BrunovskyForm& form, double t, int chain, int j);

double hamiltonian(const Arc& arc, const BrunovskyForm& form, double t);

/// Integral of z'Kz by adaptive Gauss-Kronrod per arc, abs tolerance 1e-6 T.
double energy(const Trajectory& trajectory);

/// Largest L z - e over a uniform grid (both one-sided limits at junctions).
double max_violation(const Trajectory& trajectory, int samples);

struct OptimalityReport {
  double euler_lagrange = 0.0;        // relative to the size of the gradient terms
  double euler_lagrange_abs = 0.0;
  double hamiltonian_drift = 0.0;     // max |H(t) - H(ta)| per arc
  double state_continuity = 0.0;
  double costate_jump = 0.0;          // |lambda- - lambda+ - N'pi|
  double hamiltonian_jump = 0.0;
  double costate_formula = 0.0;       // partial sums vs Hamiltonian costate
  double min_multiplier = 0.0;        // min over constrained arcs of (-1)^q eta^(q)
  double boundary = 0.0;
};

OptimalityReport check_optimality(const Trajectory& trajectory, int samples_per_arc = 200);

}  // namespace lqmp
