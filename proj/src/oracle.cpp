#include "lqmp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lqmp/error.hpp"

namespace lqmp {

namespace {

using Triplet = Eigen::Triplet<double>;

double min_eigenvalue(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool psd(const MatrixXd& m) { return min_eigenvalue(m) >= -1e-10 * std::max(1.0, m.norm()); }

}  // namespace

MatrixXd convexifying_shift(const LqProblem& p) {
  const int n = p.num_states(), m = p.num_controls();
  const MatrixXd K = cost_matrix(p);
  if (psd(K)) return MatrixXd::Zero(n, n);

  // Parameterize symmetric P by its upper triangle.
  std::vector<std::pair<int, int>> entries;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) entries.emplace_back(i, j);
  const int np = static_cast<int>(entries.size());
  auto basis = [&](int k) {
    MatrixXd E = MatrixXd::Zero(n, n);
    E(entries[k].first, entries[k].second) = 1.0;
    E(entries[k].second, entries[k].first) = 1.0;
    return E;
  };
  // Constraint PA + A'P = 0 and target PB = N.
  MatrixXd Lyap(n * n, np), Cross(n * m, np);
  for (int k = 0; k < np; ++k) {
    const MatrixXd E = basis(k);
    const MatrixXd L = E * p.A + p.A.transpose() * E;
    const MatrixXd X = E * p.B;
    Lyap.col(k) = Eigen::Map<const VectorXd>(L.data(), n * n);
    Cross.col(k) = Eigen::Map<const VectorXd>(X.data(), n * m);
  }
  Eigen::JacobiSVD<MatrixXd> svd(Lyap, Eigen::ComputeFullV);
  const double tol = 1e-10 * std::max(1.0, svd.singularValues().size() ? svd.singularValues()[0] : 1.0);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()[i] > tol) ++rank;
  const MatrixXd null = svd.matrixV().rightCols(np - rank);
  if (null.cols() == 0) throw Error(ErrorCode::kNonConvex, "cost matrix is indefinite and no boundary shift exists");
  const VectorXd target = Eigen::Map<const VectorXd>(p.N.data(), n * m);
  const VectorXd coeff = (Cross * null).completeOrthogonalDecomposition().solve(target);
  const VectorXd params = null * coeff;
  MatrixXd P = MatrixXd::Zero(n, n);
  for (int k = 0; k < np; ++k) P += params[k] * basis(k);

  MatrixXd Keff = K;
  Keff.topRightCorner(n, m) -= P * p.B;
  Keff.bottomLeftCorner(m, n) -= (P * p.B).transpose();
  if (!psd(Keff))
    throw Error(ErrorCode::kNonConvex, "cost matrix is indefinite even after the boundary shift (min eigenvalue " +
                                           std::to_string(min_eigenvalue(Keff)) + ")");
  return P;
}

CollocationResult collocate(const LqProblem& p, int nodes, const CollocationOptions& options) {
  require_valid(p);
  if (nodes < 2) throw Error(ErrorCode::kInvalidInput, "collocation needs at least 2 intervals");
  const int n = p.num_states(), m = p.num_controls(), c = p.num_constraints();
  const int nz = n + m, N = nodes;
  const double h = p.T / N;

  const MatrixXd P = convexifying_shift(p);
  MatrixXd K = cost_matrix(p);
  K.topRightCorner(n, m) -= P * p.B;
  K.bottomLeftCorner(m, n) -= (P * p.B).transpose();
  K = 0.5 * (K + K.transpose());

  const int nv = (N + 1) * nz;
  auto var = [&](int k, int j) { return k * nz + j; };  // j < n: state, else control

  // Objective: sum_k w_k z_k'Kz_k with trapezoid weights, as 1/2 y'Hy.
  std::vector<Triplet> H;
  for (int k = 0; k <= N; ++k) {
    const double w = (k == 0 || k == N) ? 0.5 * h : h;
    for (int i = 0; i < nz; ++i)
      for (int j = 0; j <= i; ++j)
        if (K(i, j) != 0.0) H.emplace_back(var(k, i), var(k, j), 2.0 * w * K(i, j));
  }

  // Equalities: defects, then both boundary states.
  std::vector<Triplet> E;
  VectorXd b = VectorXd::Zero(N * n + 2 * n);
  for (int k = 0; k < N; ++k) {
    for (int r = 0; r < n; ++r) {
      const int row = k * n + r;
      E.emplace_back(row, var(k + 1, r), 1.0);
      E.emplace_back(row, var(k, r), -1.0);
      for (int j = 0; j < n; ++j)
        if (p.A(r, j) != 0.0) {
          E.emplace_back(row, var(k, j), -0.5 * h * p.A(r, j));
          E.emplace_back(row, var(k + 1, j), -0.5 * h * p.A(r, j));
        }
      for (int j = 0; j < m; ++j)
        if (p.B(r, j) != 0.0) {
          E.emplace_back(row, var(k, n + j), -0.5 * h * p.B(r, j));
          E.emplace_back(row, var(k + 1, n + j), -0.5 * h * p.B(r, j));
        }
    }
  }
  for (int r = 0; r < n; ++r) {
    E.emplace_back(N * n + r, var(0, r), 1.0);
    b[N * n + r] = p.x0[r];
    E.emplace_back(N * n + n + r, var(N, r), 1.0);
    b[N * n + n + r] = p.xT[r];
  }

  std::vector<Triplet> G;
  VectorXd gh((N + 1) * c);
  for (int k = 0; k <= N; ++k)
    for (int r = 0; r < c; ++r) {
      for (int j = 0; j < n; ++j)
        if (p.C(r, j) != 0.0) G.emplace_back(k * c + r, var(k, j), p.C(r, j));
      for (int j = 0; j < m; ++j)
        if (p.D(r, j) != 0.0) G.emplace_back(k * c + r, var(k, n + j), p.D(r, j));
      gh[k * c + r] = p.e[r];
    }

  QpProblem qp;
  qp.H.resize(nv, nv);
  qp.H.setFromTriplets(H.begin(), H.end());
  qp.f = VectorXd::Zero(nv);
  qp.E.resize(b.size(), nv);
  qp.E.setFromTriplets(E.begin(), E.end());
  qp.b = b;
  qp.G.resize(gh.size(), nv);
  qp.G.setFromTriplets(G.begin(), G.end());
  qp.h = gh;
  const QpSolution sol = solve_qp(qp, options.qp);

  CollocationResult out;
  out.nodes = N;
  out.h = h;
  out.iterations = sol.iterations;
  out.convexified = P.norm() > 0.0;
  out.boundary_offset = p.xT.dot(P * p.xT) - p.x0.dot(P * p.x0);
  out.cost = sol.objective + out.boundary_offset;
  out.t = VectorXd::LinSpaced(N + 1, 0.0, p.T);
  out.x.resize(N + 1, n);
  out.u.resize(N + 1, m);
  for (int k = 0; k <= N; ++k) {
    out.x.row(k) = sol.y.segment(var(k, 0), n).transpose();
    out.u.row(k) = sol.y.segment(var(k, n), m).transpose();
  }
  // The defect multipliers approximate minus the costate of the shifted
  // problem; the original costate adds back -2 P x at the midpoint.
  out.costate.resize(N, n);
  for (int k = 0; k < N; ++k) {
    const VectorXd xm = 0.5 * (out.x.row(k) + out.x.row(k + 1)).transpose();
    out.costate.row(k) = (-sol.nu.segment(k * n, n) - 2.0 * P * xm).transpose();
  }
  out.multipliers.resize(N + 1, c);
  for (int k = 0; k <= N; ++k)
    for (int r = 0; r < c; ++r) {
      const double w = (k == 0 || k == N) ? 0.5 * h : h;
      out.multipliers(k, r) = sol.z[k * c + r] / w;
    }
  // A node binds when its multiplier dominates its slack (strict
  // complementarity) and the multiplier density is not negligible.
  auto binds = [&](int k, int r) {
    const double zk = sol.z[k * c + r], sk = sol.slack[k * c + r];
    return zk > sk && out.multipliers(k, r) > options.binding_threshold;
  };
  for (int r = 0; r < c; ++r) {
    int k = 0;
    while (k <= N) {
      if (!binds(k, r)) {
        ++k;
        continue;
      }
      BindingInterval bi;
      bi.row = r;
      bi.start = out.t[k];
      while (k <= N && binds(k, r)) {
        bi.peak_multiplier = std::max(bi.peak_multiplier, out.multipliers(k, r));
        bi.end = out.t[k];
        ++k;
      }
      out.binding.push_back(bi);
    }
  }
  return out;
}

double trapezoid_cost(const LqProblem& p, const MatrixXd& x, const MatrixXd& u, double h) {
  const MatrixXd K = cost_matrix(p);
  const Eigen::Index N = x.rows() - 1;
  double total = 0.0;
  VectorXd z(K.rows());
  for (Eigen::Index k = 0; k <= N; ++k) {
    z << x.row(k).transpose(), u.row(k).transpose();
    const double w = (k == 0 || k == N) ? 0.5 * h : h;
    total += w * z.dot(K * z);
  }
  return total;
}

double max_defect(const LqProblem& p, const MatrixXd& x, const MatrixXd& u, double h) {
  double worst = 0.0;
  for (Eigen::Index k = 0; k + 1 < x.rows(); ++k) {
    const VectorXd f0 = p.A * x.row(k).transpose() + p.B * u.row(k).transpose();
    const VectorXd f1 = p.A * x.row(k + 1).transpose() + p.B * u.row(k + 1).transpose();
    const VectorXd d = x.row(k + 1).transpose() - x.row(k).transpose() - 0.5 * h * (f0 + f1);
    worst = std::max(worst, d.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace lqmp
