#pragma once

#include <cstdint>
#include <vector>

#include "lqmp/model.hpp"

namespace lqmp {

/// LQR cost x'Qx + u'Ru + 2x'Nu.
struct LqrWeights {
  MatrixXd Q, R, N;
};

struct RiccatiSolution {
  MatrixXd P;
  MatrixXd K;               // u = -K x
  double residual = 0.0;    // Frobenius norm of the ARE residual
  double max_real_closed_loop = 0.0;
};

/// Stabilizing solution of A'P + PA - (PB + N) R^-1 (B'P + N') + Q = 0 by
/// the matrix sign function, polished with Newton-Kleinman steps. Throws
/// RiccatiFailure when R is not positive definite, Q - N R^-1 N' is not
/// positive semidefinite, or no stabilizing solution exists.
RiccatiSolution solve_riccati(const MatrixXd& A, const MatrixXd& B, const LqrWeights& weights);

struct LqrEvaluation {
  MatrixXd gain;
  double energy = 0.0;           // z'Kz of the closed loop with the problem's cost
  double terminal_error = 0.0;   // |s(T) - sT|
  double max_violation = 0.0;    // of the checked constraint rows
  bool feasible = false;
  double fitness = 0.0;
  Eigen::VectorXd t;             // filled when trajectories are requested
  MatrixXd z;                    // rows are stacked points
};

struct SimulationOptions {
  double dt = 0.1;
  double terminal_penalty = 1e3;
  /// Constraint rows checked for feasibility; empty means every row that
  /// does not involve the control.
  std::vector<int> checked_rows;
  bool keep_trajectory = false;
};

/// Closed loop a = -gain (s - sT) from s0 in the chain coordinates,
/// discretized exactly; energy over each step by the Van Loan integral.
LqrEvaluation simulate(const BrunovskyForm& form, const MatrixXd& gain, const SimulationOptions& options = {});

/// Riccati solve plus simulation; infeasible (infinite fitness) on
/// RiccatiFailure.
LqrEvaluation evaluate_weights(const BrunovskyForm& form, const LqrWeights& weights,
                               const SimulationOptions& options = {});

/// Genes: upper triangle of Q (row major), upper triangle of R, then N row
/// major.
int gene_count(int n, int m);
LqrWeights decode(const Eigen::VectorXd& genes, int n, int m);
Eigen::VectorXd encode(const LqrWeights& weights);

struct GaOptions {
  int population = 200;
  int elites = 10;
  int max_generations = 2800;
  int stall_generations = 50;
  double stall_tolerance = 1e-6;   // relative improvement of the best fitness
  double crossover_fraction = 0.8;
  int tournament_size = 4;
  double mutation_scale = 0.5;     // shrinks linearly to zero at max_generations
  std::uint64_t seed = 1;
  int threads = 0;                 // 0: hardware concurrency
  SimulationOptions simulation;
};

struct GaGeneration {
  int generation = 0;
  double best_fitness = 0.0;
  double mean_feasible_fitness = 0.0;
  int infeasible = 0;
};

struct GaResult {
  LqrWeights best_weights;
  LqrEvaluation best;
  std::vector<GaGeneration> history;
  long evaluations = 0;
  long infeasible_evaluations = 0;
  int generations = 0;
  bool stalled = false;

  double infeasible_fraction() const {
    return evaluations ? static_cast<double>(infeasible_evaluations) / static_cast<double>(evaluations) : 0.0;
  }
};

/// Genetic search over LQR weights minimizing energy plus terminal penalty.
/// `initial` (optional) replaces the random initial population.
GaResult optimize_weights(const BrunovskyForm& form, const GaOptions& options = {},
                          const std::vector<Eigen::VectorXd>& initial = {});

}  // namespace lqmp
