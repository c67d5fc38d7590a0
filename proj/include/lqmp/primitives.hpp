#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lqmp/model.hpp"
#include "lqmp/polynomial.hpp"
#include "lqmp/tangency.hpp"

namespace lqmp {

using Poly = Polynomial<double>;

/// Coefficients (+1, -1, +1, ...) of sum_n (-1)^n d^n/dt^n, length k+1.
VectorXd derivative_operator(int k);

/// Optimality ODE of one chain for a fixed active set, on the chain's pivot
/// y = s_i^0 (z column (i, n) is y^(n)):
///
///   lhs(d) y + sum_j coupling[j](d) y_j + sum_c multiplier[c](d) eta_c = 0
///
/// where eta_c multiplies the reduced (q-th derivative) constraint row.
struct PrimitiveOde {
  int chain = 0;
  int chain_length = 0;
  std::vector<int> active_set;
  Poly lhs;
  std::vector<std::pair<int, Poly>> coupling;   // (other chain, polynomial)
  std::vector<Poly> multiplier;                 // one per active row
  std::vector<std::pair<int, double>> pinned;   // (z column, value)

  int order() const { return poly_degree(lhs); }
  bool homogeneous() const { return active_set.empty(); }
};

/// Basis function t^power e^(sigma t) cos(omega t) (and the sine partner when
/// omega > 0).
struct Mode {
  double sigma = 0.0;
  double omega = 0.0;
  int power = 0;
};

struct SolutionBasis {
  Poly characteristic;           // ODE on the lowest derivative order that keeps it polynomial
  int shift = 0;                 // derivative order of that variable
  std::vector<RootCluster<double>> roots;
  std::vector<Mode> modes;
  int dimension = 0;
  double max_root_residual = 0.0;
};

/// Affine Hamiltonian system of one arc over w = [s; lambda; 1]:
/// w' = M w, z = Z w, eta = Eta w.
struct HamiltonianSystem {
  MatrixXd M;
  MatrixXd Z;
  MatrixXd Eta;
  MatrixXd Lambda;  // costate rows of w, n x (2n+1)
};

/// Real invariant subspace V of M with restricted matrix J (M V = V J),
/// evaluated as V exp(J (t - anchor)). `at_end` anchors the group at the
/// arc's end time, used for modes that grow forward in time.
struct ModalGroup {
  MatrixXd V;
  MatrixXd J;
  bool at_end = false;
  std::string name;
};

struct ArcBasis {
  std::vector<ModalGroup> groups;
  int dimension = 0;

  /// Fundamental matrix at t for an arc on [ta, tb]: w(t) = Phi(t) c.
  MatrixXd fundamental(double t, double ta, double tb) const;
};

struct MotionPrimitive {
  std::vector<int> active_set;
  std::vector<TangencyStack> stacks;
  MatrixXd reduced_rows;  // |S| x (n+m)
  VectorXd reduced_offsets;
  std::vector<PrimitiveOde> odes;  // per chain
  Poly characteristic;             // determinant of the arc operator, degree 2n
  HamiltonianSystem ham;
  ArcBasis basis;
  std::string label;
};

struct MultiplierMap {
  std::vector<int> active_set;
  MatrixXd Eta;  // |S| x (2n+1), eta = Eta w
};

/// Pivot-polynomial ODE of one chain. Throws DependentActiveSet,
/// InfeasibleActiveSet or NoControlAuthority for bad active sets.
PrimitiveOde derive_ode(const BrunovskyForm& form, int chain, const std::vector<int>& active_set);

/// Roots and real mode basis of the homogeneous part. Throws DegenerateOde.
SolutionBasis characteristic_roots(const PrimitiveOde& ode);

/// Full primitive for an active set: ODEs, arc operator determinant,
/// Hamiltonian system and modal basis.
MotionPrimitive make_primitive(const BrunovskyForm& form, std::vector<int> active_set);

struct PrunedSet {
  std::vector<int> active_set;
  std::string reason;
};

struct PrimitiveEnumeration {
  std::vector<MotionPrimitive> primitives;
  std::vector<PrunedSet> pruned;
};

/// All subsets of constraint rows that survive the dependence and
/// contradiction checks, ordered by subset size then lexicographically.
PrimitiveEnumeration enumerate_primitives(const BrunovskyForm& form);

/// Multiplier functions of a primitive expressed on the arc state w.
MultiplierMap eliminate_multipliers(const MotionPrimitive& primitive, const BrunovskyForm& form);

/// Per-chain residual of sum_n (-1)^n d^n/dt^n [2Kz + L'eta]_(i,n) at a point
/// w of the arc, using exact derivatives w^(k) = M^k w.
VectorXd euler_lagrange_residual(const MotionPrimitive& primitive, const BrunovskyForm& form,
                                 const VectorXd& w);

/// Checks the active set: stacked tangency and reduced rows must be
/// independent and consistent. Throws DependentActiveSet or
/// InfeasibleActiveSet.
std::vector<TangencyStack> check_active_set(const BrunovskyForm& form,
                                            const std::vector<int>& active_set);

std::string active_set_label(const std::vector<int>& active_set);

}  // namespace lqmp
