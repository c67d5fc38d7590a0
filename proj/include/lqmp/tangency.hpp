#pragma once

#include <Eigen/Dense>

#include "lqmp/model.hpp"

namespace lqmp {

/// Relative degree and tangency rows of one constraint row L_c z <= e_c.
///
/// For q >= 1, rows(j) = c'A^j padded with zero control entries (j < q), the
/// offset e_c sits in row 0 only, and `reduced` is the q-th time derivative
/// [c'A^q, c'A^(q-1)B] with zero right-hand side. For q = 0 the single row is
/// the constraint itself and `reduced` equals it with offset e_c.
struct TangencyStack {
  int constraint = -1;
  int q = 0;
  MatrixXd rows;      // over z, (max(q,1)) x (n+m)
  VectorXd offsets;
  Eigen::RowVectorXd reduced;  // over z
  double reduced_offset = 0.0;
  Eigen::RowVectorXd control_row;  // control part of `reduced`, 1 x m

  /// Rows imposed on the state at a junction (q >= 1 only); over the state.
  MatrixXd state_rows() const;
  int num_junction_rows() const { return q == 0 ? 0 : static_cast<int>(rows.rows()); }
};

/// Differentiates the row along the canonical dynamics until the control
/// coefficient exceeds 1e-10 relative to the row's largest entry.
/// Throws NoControlAuthority when no such order <= n exists.
TangencyStack derive_tangency(const BrunovskyForm& form, int row);

/// Row 0 only, used for instantaneous touches. q = 0 stacks are unchanged.
TangencyStack instantaneous_stack(const TangencyStack& stack);

}  // namespace lqmp
