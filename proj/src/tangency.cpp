#include "lqmp/tangency.hpp"

#include "lqmp/error.hpp"

namespace lqmp {

MatrixXd TangencyStack::state_rows() const {
  if (q == 0) return MatrixXd(0, rows.cols());
  const Eigen::Index n = rows.cols() - control_row.size();
  return rows.leftCols(n);
}

TangencyStack derive_tangency(const BrunovskyForm& form, int row) {
  if (row < 0 || row >= form.num_constraints())
    throw Error(ErrorCode::kInvalidInput, "constraint row " + std::to_string(row) + " out of range");
  const int n = form.num_states(), m = form.num_chains();
  const Eigen::RowVectorXd full = form.Lmat.row(row);
  const double scale = full.cwiseAbs().maxCoeff();

  TangencyStack stack;
  stack.constraint = row;
  if (scale == 0.0) throw Error(ErrorCode::kNoControlAuthority, "constraint row is zero");

  if (full.tail(m).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    stack.q = 0;
    stack.rows = full;
    stack.offsets = VectorXd::Constant(1, form.eVec[row]);
    stack.reduced = full;
    stack.reduced_offset = form.eVec[row];
    stack.control_row = full.tail(m);
    return stack;
  }

  const MatrixXd A = form.canonical_A();
  const MatrixXd B = form.canonical_B();
  Eigen::RowVectorXd v = full.head(n);
  std::vector<Eigen::RowVectorXd> rows;
  for (int j = 0; j < n; ++j) {
    rows.push_back(v);
    const Eigen::RowVectorXd cb = v * B;
    if (cb.cwiseAbs().maxCoeff() > 1e-10 * scale) {
      stack.q = j + 1;
      stack.rows = MatrixXd::Zero(stack.q, n + m);
      for (int r = 0; r < stack.q; ++r) stack.rows.row(r).head(n) = rows[r];
      stack.offsets = VectorXd::Zero(stack.q);
      stack.offsets[0] = form.eVec[row];
      stack.reduced.resize(n + m);
      stack.reduced << v * A, cb;
      stack.reduced_offset = 0.0;
      stack.control_row = cb;
      return stack;
    }
    v = v * A;
  }
  throw Error(ErrorCode::kNoControlAuthority,
              "control never appears in derivatives of row " + std::to_string(row));
}

TangencyStack instantaneous_stack(const TangencyStack& stack) {
  if (stack.q == 0) return stack;
  TangencyStack out = stack;
  out.rows = stack.rows.topRows(1);
  out.offsets = stack.offsets.head(1);
  return out;
}

}  // namespace lqmp
