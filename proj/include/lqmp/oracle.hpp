#pragma once

#include <string>
#include <vector>

#include "lqmp/model.hpp"
#include "lqmp/qp.hpp"

namespace lqmp {

/// Contiguous run of grid nodes on which a constraint row binds.
struct BindingInterval {
  int row = -1;
  double start = 0.0;
  double end = 0.0;
  double peak_multiplier = 0.0;  // max of the multiplier density over the run
};

struct CollocationResult {
  int nodes = 0;  // intervals; the grid holds nodes + 1 points
  double h = 0.0;
  double cost = 0.0;
  Eigen::VectorXd t;
  MatrixXd x;        // (nodes+1) x n
  MatrixXd u;        // (nodes+1) x m
  MatrixXd costate;  // nodes x n, at interval midpoints
  MatrixXd multipliers;  // (nodes+1) x c, densities (per unit time)
  std::vector<BindingInterval> binding;
  bool convexified = false;
  double boundary_offset = 0.0;  // x(T)'Px(T) - x(0)'Px(0)
  int iterations = 0;
};

struct CollocationOptions {
  QpOptions qp;
  /// Multiplier density above which a node counts as binding.
  double binding_threshold = 1e-6;
};

/// Equivalent cost with a positive semidefinite weight: finds symmetric P
/// with PA + A'P = 0 so that K - [[0, PB], [B'P, 0]] is PSD. The cost
/// changes by x(T)'Px(T) - x(0)'Px(0). Returns P (zero when K is already
/// PSD). Throws NonConvex when no such P exists.
MatrixXd convexifying_shift(const LqProblem& problem);

/// Trapezoidal direct collocation of the problem on a uniform grid with
/// `nodes` intervals, solved as a sparse QP. Throws QpInfeasible, NonConvex.
CollocationResult collocate(const LqProblem& problem, int nodes, const CollocationOptions& options = {});

/// Trapezoidal cost of sampled state and control rows on a uniform grid.
double trapezoid_cost(const LqProblem& problem, const MatrixXd& x, const MatrixXd& u, double h);

/// Largest trapezoidal defect |x_{k+1} - x_k - h/2 (f_k + f_{k+1})|.
double max_defect(const LqProblem& problem, const MatrixXd& x, const MatrixXd& u, double h);

}  // namespace lqmp
