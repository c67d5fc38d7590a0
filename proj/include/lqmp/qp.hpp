#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lqmp {

using SparseMatrixXd = Eigen::SparseMatrix<double>;

/// minimize 1/2 y'Hy + f'y  subject to  E y = b,  G y <= h.
/// H must be positive semidefinite (only its lower triangle is read).
struct QpProblem {
  SparseMatrixXd H;
  Eigen::VectorXd f;
  SparseMatrixXd E;
  Eigen::VectorXd b;
  SparseMatrixXd G;
  Eigen::VectorXd h;
};

struct QpOptions {
  int max_iterations = 100;
  double tolerance = 1e-10;  // relative residuals and duality measure
  double regularization = 1e-8;
  int refinement_steps = 8;
};

struct QpSolution {
  Eigen::VectorXd y;
  Eigen::VectorXd nu;     // equality multipliers
  Eigen::VectorXd z;      // inequality multipliers, >= 0
  Eigen::VectorXd slack;  // h - G y
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

/// Mehrotra predictor-corrector interior point method on the sparse
/// quasi-definite KKT system. Throws QpInfeasible when the iterates diverge
/// or the residuals fail to converge.
QpSolution solve_qp(const QpProblem& problem, const QpOptions& options = {});

}  // namespace lqmp
