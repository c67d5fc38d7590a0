#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lqmp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Coordinates { kOriginal, kBrunovsky };

/// Linear dynamics x' = A x + B u, constraints C x + D u <= e, running cost
/// x'Qx + u'Ru + 2x'Nu over the fixed horizon [0, T] with both boundary
/// states given.
struct LqProblem {
  MatrixXd A, B, C, D;
  VectorXd e;
  MatrixXd Q, R, N;
  VectorXd x0, xT;
  double T = 0.0;
  Coordinates coordinates = Coordinates::kOriginal;
  std::vector<std::string> state_names;
  std::vector<std::string> control_names;
  std::vector<std::string> constraint_names;

  int num_states() const { return static_cast<int>(A.rows()); }
  int num_controls() const { return static_cast<int>(B.cols()); }
  int num_constraints() const { return static_cast<int>(C.rows()); }
};

struct AssumptionCheck {
  std::string name;
  bool pass = false;
  double measured = 0.0;  // rank, min singular value or asymmetry norm
  std::string detail;
};

struct ValidationReport {
  AssumptionCheck controllable;   // measured: rank of the controllability matrix
  AssumptionCheck q_symmetric;    // measured: max |Q - Q'|
  AssumptionCheck r_full_rank;    // measured: smallest singular value of R
  AssumptionCheck horizon;        // measured: T

  bool all_pass() const {
    return controllable.pass && q_symmetric.pass && r_full_rank.pass && horizon.pass;
  }
  std::vector<AssumptionCheck> checks() const {
    return {controllable, q_symmetric, r_full_rank, horizon};
  }
};

/// Throws DimensionMismatch when shapes disagree; otherwise reports every
/// assumption with its measured quantity.
ValidationReport validate(const LqProblem& problem);

/// Same as validate() but throws on the first failed assumption.
void require_valid(const LqProblem& problem);

/// Stacked point z = [s_1 .. s_m, a_1 .. a_m]: all chain states in chain
/// order, followed by one input per chain. Chain i, derivative order j maps
/// to column state_offset(i) + j for j < k_i and to n + i for j == k_i.
class StackedIndex {
 public:
  StackedIndex() = default;
  explicit StackedIndex(std::vector<int> chain_lengths);

  int num_chains() const { return static_cast<int>(lengths_.size()); }
  int num_states() const { return n_; }
  int size() const { return n_ + num_chains(); }
  int chain_length(int chain) const { return lengths_[chain]; }
  const std::vector<int>& chain_lengths() const { return lengths_; }
  int state_offset(int chain) const { return offsets_[chain]; }
  /// Column of z holding the order-th derivative of chain's base state.
  int column(int chain, int order) const;
  /// Inverse of column(): (chain, order).
  std::pair<int, int> locate(int column) const;

 private:
  std::vector<int> lengths_;
  std::vector<int> offsets_;
  int n_ = 0;
};

/// Controllable system in integrator-chain coordinates. The state map is
/// s = Tx x and the input map a = F x + G u.
struct BrunovskyForm {
  StackedIndex index;
  MatrixXd Tx;    // n x n
  MatrixXd F;     // m x n
  MatrixXd G;     // m x m, invertible
  MatrixXd Kmat;  // (n+m) x (n+m), cost z'Kz
  MatrixXd Lmat;  // c x (n+m), constraints Lz <= e
  VectorXd eVec;
  VectorXd s0, sT;
  double T = 0.0;
  std::vector<std::string> state_names;    // in z order, states only
  std::vector<std::string> control_names;  // one per chain
  std::vector<std::string> constraint_names;
  std::vector<std::string> original_state_names;
  std::vector<std::string> original_control_names;

  int num_chains() const { return index.num_chains(); }
  int num_states() const { return index.num_states(); }
  int num_constraints() const { return static_cast<int>(Lmat.rows()); }

  /// Canonical A (shifted identity blocks) and B (unit input per chain).
  MatrixXd canonical_A() const;
  MatrixXd canonical_B() const;

  /// Original-coordinate state and control from a stacked point.
  VectorXd original_state(const VectorXd& z) const;
  VectorXd original_control(const VectorXd& z) const;
  /// Stacked point from original-coordinate state and control.
  VectorXd stacked(const VectorXd& x, const VectorXd& u) const;
};

/// Controllability indices and state/input transform by the Luenberger
/// construction. Rank decisions use singular values relative to the largest
/// one with threshold 1e-10. Throws NotControllable.
BrunovskyForm to_brunovsky(const LqProblem& problem);

/// Constraint row by name or decimal index; -1 when unknown.
int constraint_index(const BrunovskyForm& form, const std::string& name);

/// Columns of z belonging to each chain (states then input), 0-based.
std::vector<std::vector<int>> chain_slices(const BrunovskyForm& form);

/// Numerical rank by singular values relative to the largest.
int numerical_rank(const MatrixXd& m, double rel_tol = 1e-10);

/// Stacked cost matrix [[Q, N], [N', R]].
MatrixXd cost_matrix(const LqProblem& problem);

}  // namespace lqmp
