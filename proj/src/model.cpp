#include "lqmp/model.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "lqmp/error.hpp"

namespace lqmp {

namespace {

void require_shape(const MatrixXd& m, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream msg;
    msg << name << " is " << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
    throw Error(ErrorCode::kDimensionMismatch, msg.str());
  }
}

void require_length(const VectorXd& v, Eigen::Index size, const char* name) {
  if (v.size() != size) {
    std::ostringstream msg;
    msg << name << " has length " << v.size() << ", expected " << size;
    throw Error(ErrorCode::kDimensionMismatch, msg.str());
  }
}

MatrixXd controllability_matrix(const MatrixXd& A, const MatrixXd& B) {
  const Eigen::Index n = A.rows(), m = B.cols();
  MatrixXd ctrb(n, n * m);
  MatrixXd block = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * m, m) = block;
    block = A * block;
  }
  return ctrb;
}

}  // namespace

int numerical_rank(const MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > rel_tol * sv[0]) ++rank;
  return rank;
}

MatrixXd cost_matrix(const LqProblem& p) {
  const int n = p.num_states(), m = p.num_controls();
  MatrixXd K(n + m, n + m);
  K << p.Q, p.N, p.N.transpose(), p.R;
  return K;
}

ValidationReport validate(const LqProblem& p) {
  const Eigen::Index n = p.A.rows();
  const Eigen::Index m = p.B.cols();
  const Eigen::Index c = p.C.rows();
  require_shape(p.A, n, n, "A");
  require_shape(p.B, n, m, "B");
  require_shape(p.C, c, n, "C");
  require_shape(p.D, c, m, "D");
  require_length(p.e, c, "e");
  require_shape(p.Q, n, n, "Q");
  require_shape(p.R, m, m, "R");
  require_shape(p.N, n, m, "N");
  require_length(p.x0, n, "x0");
  require_length(p.xT, n, "xT");
  if (n == 0 || m == 0) throw Error(ErrorCode::kDimensionMismatch, "empty state or input");

  ValidationReport report;
  const int rank = numerical_rank(controllability_matrix(p.A, p.B));
  report.controllable = {"controllable", rank == n, static_cast<double>(rank),
                         "rank of [B AB ... A^(n-1)B] = " + std::to_string(rank) + " of " +
                             std::to_string(n)};

  const double asym = (p.Q - p.Q.transpose()).cwiseAbs().maxCoeff();
  report.q_symmetric = {"q_symmetric", asym <= 1e-12, asym, "max |Q - Q'|"};

  Eigen::JacobiSVD<MatrixXd> svd(p.R);
  const double smin = svd.singularValues().minCoeff();
  report.r_full_rank = {"r_full_rank", smin > 1e-10, smin, "smallest singular value of R"};

  report.horizon = {"horizon", p.T > 0.0 && std::isfinite(p.T), p.T, "T > 0"};
  return report;
}

void require_valid(const LqProblem& problem) {
  const ValidationReport report = validate(problem);
  if (!report.controllable.pass)
    throw Error(ErrorCode::kNotControllable, report.controllable.detail);
  if (!report.q_symmetric.pass) {
    std::ostringstream msg;
    msg << "Q is not symmetric (max |Q - Q'| = " << report.q_symmetric.measured << ")";
    throw Error(ErrorCode::kInvalidInput, msg.str());
  }
  if (!report.r_full_rank.pass) {
    std::ostringstream msg;
    msg << "R is rank deficient (smallest singular value " << report.r_full_rank.measured << ")";
    throw Error(ErrorCode::kInvalidInput, msg.str());
  }
  if (!report.horizon.pass) throw Error(ErrorCode::kInvalidInput, "horizon T must be positive");
}

StackedIndex::StackedIndex(std::vector<int> chain_lengths) : lengths_(std::move(chain_lengths)) {
  offsets_.reserve(lengths_.size());
  for (int k : lengths_) {
    offsets_.push_back(n_);
    n_ += k;
  }
}

int StackedIndex::column(int chain, int order) const {
  if (order == lengths_[chain]) return n_ + chain;
  return offsets_[chain] + order;
}

std::pair<int, int> StackedIndex::locate(int col) const {
  if (col >= n_) return {col - n_, lengths_[col - n_]};
  for (int i = num_chains() - 1; i >= 0; --i)
    if (col >= offsets_[i]) return {i, col - offsets_[i]};
  return {0, col};
}

MatrixXd BrunovskyForm::canonical_A() const {
  const int n = num_states();
  MatrixXd A = MatrixXd::Zero(n, n);
  for (int i = 0; i < num_chains(); ++i)
    for (int j = 0; j + 1 < index.chain_length(i); ++j)
      A(index.state_offset(i) + j, index.state_offset(i) + j + 1) = 1.0;
  return A;
}

MatrixXd BrunovskyForm::canonical_B() const {
  MatrixXd B = MatrixXd::Zero(num_states(), num_chains());
  for (int i = 0; i < num_chains(); ++i)
    B(index.state_offset(i) + index.chain_length(i) - 1, i) = 1.0;
  return B;
}

VectorXd BrunovskyForm::original_state(const VectorXd& z) const {
  return Tx.partialPivLu().solve(z.head(num_states()));
}

VectorXd BrunovskyForm::original_control(const VectorXd& z) const {
  const VectorXd x = original_state(z);
  return G.partialPivLu().solve(z.tail(num_chains()) - F * x);
}

VectorXd BrunovskyForm::stacked(const VectorXd& x, const VectorXd& u) const {
  VectorXd z(num_states() + num_chains());
  z << Tx * x, F * x + G * u;
  return z;
}

BrunovskyForm to_brunovsky(const LqProblem& p) {
  const int n = p.num_states(), m = p.num_controls();
  BrunovskyForm form;
  form.T = p.T;

  if (p.coordinates == Coordinates::kBrunovsky) {
    // Authored in canonical form: recover the chain lengths from B and check
    // that A matches the shifted-identity pattern exactly.
    std::vector<int> lengths(m, 0);
    int row = 0;
    for (int i = 0; i < m; ++i) {
      int top = -1;
      for (int r = 0; r < n; ++r)
        if (p.B(r, i) != 0.0) {
          if (top >= 0 || p.B(r, i) != 1.0)
            throw Error(ErrorCode::kInvalidInput, "B is not in integrator-chain form");
          top = r;
        }
      if (top < row) throw Error(ErrorCode::kInvalidInput, "B is not in integrator-chain form");
      lengths[i] = top - row + 1;
      row = top + 1;
    }
    if (row != n) throw Error(ErrorCode::kInvalidInput, "chains do not cover the state");
    form.index = StackedIndex(lengths);
    if ((p.A - form.canonical_A()).cwiseAbs().maxCoeff() != 0.0)
      throw Error(ErrorCode::kInvalidInput, "A is not in integrator-chain form");
    form.Tx = MatrixXd::Identity(n, n);
    form.F = MatrixXd::Zero(m, n);
    form.G = MatrixXd::Identity(m, m);
  } else {
    if (numerical_rank(p.B) < m)
      throw Error(ErrorCode::kNotControllable, "B does not have full column rank");
    // Select columns of [B AB A^2B ...] input by input, keeping the ones that
    // are independent of everything kept so far. Once A^j b_i is dependent,
    // all higher powers for that input are dependent as well.
    std::vector<int> lengths(m, 0);
    std::vector<bool> active(m, true);
    MatrixXd kept(n, 0);
    std::vector<MatrixXd> powers{p.B};
    for (int j = 0; j < n && kept.cols() < n; ++j) {
      if (j > 0) powers.push_back(p.A * powers.back());
      for (int i = 0; i < m; ++i) {
        if (!active[i]) continue;
        MatrixXd trial(n, kept.cols() + 1);
        trial << kept, powers[j].col(i);
        if (numerical_rank(trial) == trial.cols()) {
          kept = trial;
          ++lengths[i];
        } else {
          active[i] = false;
        }
      }
    }
    if (kept.cols() < n)
      throw Error(ErrorCode::kNotControllable,
                  "controllability matrix has rank " + std::to_string(kept.cols()));
    form.index = StackedIndex(lengths);

    // Luenberger ordering: [b_1, A b_1, ..., A^{k_1-1} b_1, b_2, ...].
    MatrixXd M(n, n);
    int col = 0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < lengths[i]; ++j) M.col(col++) = powers[j].col(i);
    const MatrixXd Minv = M.fullPivLu().inverse();

    form.Tx.resize(n, n);
    form.F.resize(m, n);
    form.G.resize(m, m);
    int last = -1;
    for (int i = 0; i < m; ++i) {
      last += lengths[i];
      Eigen::RowVectorXd q = Minv.row(last);
      const int offset = form.index.state_offset(i);
      for (int j = 0; j < lengths[i]; ++j) {
        form.Tx.row(offset + j) = q;
        if (j + 1 < lengths[i]) q = q * p.A;
      }
      form.G.row(i) = q * p.B;
      form.F.row(i) = q * p.A;
    }
  }

  // z = [s; a] maps to [x; u] through W = [[Tx^-1, 0], [-G^-1 F Tx^-1, G^-1]].
  const MatrixXd Txinv = form.Tx.fullPivLu().inverse();
  const MatrixXd Ginv = form.G.fullPivLu().inverse();
  MatrixXd W = MatrixXd::Zero(n + m, n + m);
  W.topLeftCorner(n, n) = Txinv;
  W.bottomLeftCorner(m, n) = -Ginv * form.F * Txinv;
  W.bottomRightCorner(m, m) = Ginv;

  const MatrixXd K = cost_matrix(p);
  MatrixXd Ks = W.transpose() * K * W;
  form.Kmat = 0.5 * (Ks + Ks.transpose());
  MatrixXd CD(p.num_constraints(), n + m);
  CD << p.C, p.D;
  form.Lmat = CD * W;
  form.eVec = p.e;
  form.s0 = form.Tx * p.x0;
  form.sT = form.Tx * p.xT;

  if (p.coordinates == Coordinates::kBrunovsky) {
    form.state_names = p.state_names;
    form.control_names = p.control_names;
  }
  if (form.state_names.size() != static_cast<std::size_t>(n)) {
    form.state_names.clear();
    for (int i = 0; i < form.num_chains(); ++i)
      for (int j = 0; j < form.index.chain_length(i); ++j)
        form.state_names.push_back("s" + std::to_string(i + 1) + "_" + std::to_string(j));
  }
  if (form.control_names.size() != static_cast<std::size_t>(m)) {
    form.control_names.clear();
    for (int i = 0; i < m; ++i) form.control_names.push_back("a" + std::to_string(i + 1));
  }
  form.original_state_names = p.state_names;
  if (form.original_state_names.size() != static_cast<std::size_t>(n)) {
    form.original_state_names.clear();
    for (int i = 0; i < n; ++i) form.original_state_names.push_back("x" + std::to_string(i + 1));
  }
  form.original_control_names = p.control_names;
  if (form.original_control_names.size() != static_cast<std::size_t>(m)) {
    form.original_control_names.clear();
    for (int i = 0; i < m; ++i) form.original_control_names.push_back("u" + std::to_string(i + 1));
  }
  form.constraint_names = p.constraint_names;
  if (form.constraint_names.size() != static_cast<std::size_t>(p.num_constraints())) {
    form.constraint_names.clear();
    for (int i = 0; i < p.num_constraints(); ++i) form.constraint_names.push_back("c" + std::to_string(i));
  }
  return form;
}

int constraint_index(const BrunovskyForm& form, const std::string& name) {
  for (std::size_t i = 0; i < form.constraint_names.size(); ++i)
    if (form.constraint_names[i] == name) return static_cast<int>(i);
  if (!name.empty() && name.find_first_not_of("0123456789") == std::string::npos) {
    const int idx = std::stoi(name);
    if (idx < form.num_constraints()) return idx;
  }
  return -1;
}

std::vector<std::vector<int>> chain_slices(const BrunovskyForm& form) {
  std::vector<std::vector<int>> slices(form.num_chains());
  for (int i = 0; i < form.num_chains(); ++i)
    for (int j = 0; j <= form.index.chain_length(i); ++j)
      slices[i].push_back(form.index.column(i, j));
  return slices;
}

}  // namespace lqmp
