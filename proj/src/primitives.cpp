#include "lqmp/primitives.hpp"

#include <algorithm>
#include <complex>
#include <numeric>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "lqmp/error.hpp"

namespace lqmp {

namespace {

using Complex = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;

// Pivot polynomial of Kmat block (i, j): 2 sum_{n,p} (-1)^n K_(i,n),(j,p) s^(n+p).
Poly cost_polynomial(const BrunovskyForm& form, int i, int j) {
  const int ki = form.index.chain_length(i), kj = form.index.chain_length(j);
  Poly p = Poly::Zero(ki + kj + 1);
  for (int n = 0; n <= ki; ++n)
    for (int q = 0; q <= kj; ++q) {
      const double k = form.Kmat(form.index.column(i, n), form.index.column(j, q));
      p[n + q] += ((n % 2 == 0) ? 2.0 : -2.0) * k;
    }
  return p;
}

// Operator of a z-row acting on chain i: sum_n r_(i,n) s^n.
Poly row_polynomial(const BrunovskyForm& form, const Eigen::RowVectorXd& row, int i) {
  const int k = form.index.chain_length(i);
  Poly p(k + 1);
  for (int n = 0; n <= k; ++n) p[n] = row[form.index.column(i, n)];
  return p;
}

bool is_zero(const Poly& p) { return poly_degree(p) < 0; }

// Swaps the adjacent diagonal entries k, k+1 of the upper triangular T,
// updating the unitary U so that A = U T U^H still holds.
void swap_schur(MatrixXc& T, MatrixXc& U, Eigen::Index k) {
  const Complex a = T(k, k), b = T(k + 1, k + 1), x = T(k, k + 1);
  Eigen::Vector2cd v(x, b - a);
  const double norm = v.norm();
  if (norm == 0.0) return;
  v /= norm;
  Eigen::Matrix2cd G;
  G << v[0], -std::conj(v[1]), v[1], std::conj(v[0]);
  T.middleRows(k, 2) = G.adjoint() * T.middleRows(k, 2);
  T.middleCols(k, 2) = T.middleCols(k, 2) * G;
  U.middleCols(k, 2) = U.middleCols(k, 2) * G;
  T(k + 1, k) = 0.0;
}

// Orthonormal real basis of the invariant subspace belonging to the
// selected Schur diagonal positions. The selection must be closed under
// conjugation so that the subspace is real.
MatrixXd invariant_subspace(const Eigen::ComplexSchur<MatrixXd>& schur, std::vector<bool> select) {
  MatrixXc T = schur.matrixT();
  MatrixXc U = schur.matrixU();
  const Eigen::Index size = T.rows();
  Eigen::Index top = 0;
  for (Eigen::Index k = 0; k < size; ++k) {
    if (!select[k]) continue;
    for (Eigen::Index j = k; j > top; --j) {
      swap_schur(T, U, j - 1);
      std::swap(select[j], select[j - 1]);
    }
    ++top;
  }
  if (top == 0) return MatrixXd(size, 0);
  MatrixXd both(size, 2 * top);
  both << U.leftCols(top).real(), U.leftCols(top).imag();
  Eigen::JacobiSVD<MatrixXd> svd(both, Eigen::ComputeThinU);
  return svd.matrixU().leftCols(top);
}

}  // namespace

VectorXd derivative_operator(int k) {
  VectorXd d(k + 1);
  for (int n = 0; n <= k; ++n) d[n] = (n % 2 == 0) ? 1.0 : -1.0;
  return d;
}

std::string active_set_label(const std::vector<int>& active_set) {
  if (active_set.empty()) return "none";
  std::ostringstream out;
  for (std::size_t i = 0; i < active_set.size(); ++i) {
    if (i) out << '+';
    out << 'c' << active_set[i];
  }
  return out.str();
}

std::vector<TangencyStack> check_active_set(const BrunovskyForm& form,
                                            const std::vector<int>& active_set) {
  std::vector<TangencyStack> stacks;
  int rows = 0;
  for (int c : active_set) {
    stacks.push_back(derive_tangency(form, c));
    rows += stacks.back().q == 0 ? 1 : stacks.back().q + 1;
  }
  const int width = form.num_states() + form.num_chains();
  MatrixXd stacked(rows, width);
  VectorXd offsets(rows);
  int r = 0;
  for (const auto& s : stacks) {
    if (s.q > 0) {
      stacked.middleRows(r, s.q) = s.rows;
      offsets.segment(r, s.q) = s.offsets;
      r += s.q;
    }
    stacked.row(r) = s.reduced;
    offsets[r] = s.reduced_offset;
    ++r;
  }
  if (rows == 0) return stacks;
  const int rank = numerical_rank(stacked);
  if (rank < rows) {
    MatrixXd augmented(rows, width + 1);
    augmented << stacked, offsets;
    if (numerical_rank(augmented) > rank)
      throw Error(ErrorCode::kInfeasibleActiveSet,
                  "contradictory equalities in " + active_set_label(active_set));
    throw Error(ErrorCode::kDependentActiveSet,
                "dependent constraint rows in " + active_set_label(active_set));
  }
  return stacks;
}

PrimitiveOde derive_ode(const BrunovskyForm& form, int chain, const std::vector<int>& active_set) {
  const auto stacks = check_active_set(form, active_set);
  PrimitiveOde ode;
  ode.chain = chain;
  ode.chain_length = form.index.chain_length(chain);
  ode.active_set = active_set;
  ode.lhs = poly_trim(cost_polynomial(form, chain, chain));
  for (int j = 0; j < form.num_chains(); ++j) {
    if (j == chain) continue;
    Poly p = cost_polynomial(form, chain, j);
    if (!is_zero(p)) ode.coupling.emplace_back(j, poly_trim(p));
  }
  for (const auto& s : stacks) ode.multiplier.push_back(poly_reflect(row_polynomial(form, s.reduced, chain)));

  // A row touching a single column of this chain pins that derivative and
  // every higher one.
  for (int c : active_set) {
    const Eigen::RowVectorXd row = form.Lmat.row(c);
    int nonzero = 0, col = -1;
    for (Eigen::Index j = 0; j < row.size(); ++j)
      if (row[j] != 0.0) {
        ++nonzero;
        col = static_cast<int>(j);
      }
    if (nonzero != 1) continue;
    const auto [ch, order] = form.index.locate(col);
    if (ch != chain) continue;
    ode.pinned.emplace_back(col, form.eVec[c] / row[col]);
    for (int o = order + 1; o <= ode.chain_length; ++o) ode.pinned.emplace_back(form.index.column(chain, o), 0.0);
  }
  return ode;
}

SolutionBasis characteristic_roots(const PrimitiveOde& ode) {
  const Poly p = poly_trim(ode.lhs);
  if (poly_degree(p) < 0) throw Error(ErrorCode::kDegenerateOde, "all ODE coefficients vanish");
  SolutionBasis basis;
  basis.shift = std::min(ode.chain_length, zero_root_multiplicity(p));
  basis.characteristic = p.tail(p.size() - basis.shift);
  basis.dimension = poly_degree(basis.characteristic);
  basis.roots = root_clusters(basis.characteristic);
  for (const auto& c : basis.roots) {
    basis.max_root_residual = std::max(basis.max_root_residual, root_residual(basis.characteristic, c.value));
    if (c.value.imag() < 0.0) continue;
    for (int k = 0; k < c.multiplicity; ++k) basis.modes.push_back({c.value.real(), c.value.imag(), k});
  }
  return basis;
}

MatrixXd ArcBasis::fundamental(double t, double ta, double tb) const {
  const Eigen::Index rows = groups.empty() ? 0 : groups.front().V.rows();
  MatrixXd phi(rows, dimension);
  Eigen::Index col = 0;
  for (const auto& g : groups) {
    const double tau = t - (g.at_end ? tb : ta);
    const MatrixXd e = (g.J * tau).exp();
    phi.middleCols(col, g.V.cols()) = g.V * e;
    col += g.V.cols();
  }
  return phi;
}

MotionPrimitive make_primitive(const BrunovskyForm& form, std::vector<int> active_set) {
  std::sort(active_set.begin(), active_set.end());
  active_set.erase(std::unique(active_set.begin(), active_set.end()), active_set.end());
  const int n = form.num_states(), m = form.num_chains();
  const int na = static_cast<int>(active_set.size());
  const int nw = 2 * n + 1;

  MotionPrimitive prim;
  prim.active_set = active_set;
  prim.label = active_set_label(active_set);
  prim.stacks = check_active_set(form, active_set);
  prim.reduced_rows.resize(na, n + m);
  prim.reduced_offsets.resize(na);
  for (int c = 0; c < na; ++c) {
    prim.reduced_rows.row(c) = prim.stacks[c].reduced;
    prim.reduced_offsets[c] = prim.stacks[c].reduced_offset;
  }
  for (int i = 0; i < m; ++i) prim.odes.push_back(derive_ode(form, i, active_set));

  // Arc operator on (pivots, multipliers).
  PolynomialMatrix<double> op(m + na);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) op(i, j) = cost_polynomial(form, i, j);
    for (int c = 0; c < na; ++c) {
      const Poly lam = row_polynomial(form, prim.reduced_rows.row(c), i);
      op(i, m + c) = poly_reflect(lam);
      op(m + c, i) = lam;
    }
  }
  prim.characteristic = op.determinant();
  if (poly_degree(prim.characteristic) != 2 * n) {
    std::ostringstream msg;
    msg << "arc operator for " << prim.label << " has order " << poly_degree(prim.characteristic)
        << ", expected " << 2 * n;
    throw Error(ErrorCode::kCountMismatch, msg.str());
  }

  // Stationarity in a and the reduced identities give (a, eta) affinely in w.
  const MatrixXd A = form.canonical_A(), B = form.canonical_B();
  const MatrixXd Kss = form.Kmat.topLeftCorner(n, n);
  const MatrixXd Ksa = form.Kmat.topRightCorner(n, m);
  const MatrixXd Kaa = form.Kmat.bottomRightCorner(m, m);
  const MatrixXd Ls = prim.reduced_rows.leftCols(n);
  const MatrixXd La = prim.reduced_rows.rightCols(m);
  MatrixXd saddle = MatrixXd::Zero(m + na, m + na);
  saddle.topLeftCorner(m, m) = 2.0 * Kaa;
  saddle.topRightCorner(m, na) = La.transpose();
  saddle.bottomLeftCorner(na, m) = La;
  if (numerical_rank(saddle) < m + na)
    throw Error(ErrorCode::kUnderdeterminedMultipliers,
                "multipliers of " + prim.label + " are not determined by the controls");
  MatrixXd rhs = MatrixXd::Zero(m + na, nw);
  rhs.block(0, 0, m, n) = -2.0 * Ksa.transpose();
  rhs.block(0, n, m, n) = -B.transpose();
  rhs.block(m, 0, na, n) = -Ls;
  rhs.block(m, 2 * n, na, 1) = prim.reduced_offsets;
  const MatrixXd sol = saddle.fullPivLu().solve(rhs);
  const MatrixXd Amap = sol.topRows(m);

  MatrixXd S = MatrixXd::Zero(n, nw), Lam = MatrixXd::Zero(n, nw);
  S.leftCols(n).setIdentity();
  Lam.middleCols(n, n).setIdentity();
  auto& ham = prim.ham;
  ham.Eta = sol.bottomRows(na);
  ham.Lambda = Lam;
  ham.Z.resize(n + m, nw);
  ham.Z << S, Amap;
  ham.M = MatrixXd::Zero(nw, nw);
  ham.M.topRows(n) = A * S + B * Amap;
  ham.M.middleRows(n, n) =
      -(2.0 * Kss * S + 2.0 * Ksa * Amap + A.transpose() * Lam + Ls.transpose() * ham.Eta);

  // Group the spectrum of M: modes near the imaginary axis (including the
  // zero root and the constant direction of w), decaying and growing modes.
  const int zeros = zero_root_multiplicity(prim.characteristic);
  int n_central = zeros + 1, n_stable = 0, n_unstable = 0;
  for (const auto& c : root_clusters(prim.characteristic)) {
    if (std::abs(c.value) == 0.0) continue;
    const double re = c.value.real();
    if (std::abs(re) <= 1e-9 * std::max(1.0, std::abs(c.value)))
      n_central += c.multiplicity;
    else if (re < 0)
      n_stable += c.multiplicity;
    else
      n_unstable += c.multiplicity;
  }
  Eigen::ComplexSchur<MatrixXd> schur(ham.M);
  const Eigen::VectorXcd ev = schur.matrixT().diagonal();
  std::vector<int> order(nw);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(ev[a].real()) < std::abs(ev[b].real()); });
  std::vector<bool> central(nw, false), stable(nw, false), unstable(nw, false);
  int s_count = 0, u_count = 0;
  for (int r = 0; r < nw; ++r) {
    const int idx = order[r];
    if (r < n_central) {
      central[idx] = true;
    } else if (ev[idx].real() < 0) {
      stable[idx] = true;
      ++s_count;
    } else {
      unstable[idx] = true;
      ++u_count;
    }
  }
  if (s_count != n_stable || u_count != n_unstable) {
    std::ostringstream msg;
    msg << "spectrum split of " << prim.label << " disagrees with the arc operator (" << s_count << "/"
        << n_stable << " decaying, " << u_count << "/" << n_unstable << " growing)";
    throw Error(ErrorCode::kCountMismatch, msg.str());
  }
  const std::pair<const char*, std::vector<bool>*> groups[] = {
      {"central", &central}, {"decaying", &stable}, {"growing", &unstable}};
  for (const auto& [name, sel] : groups) {
    MatrixXd V = invariant_subspace(schur, *sel);
    if (V.cols() == 0) continue;
    ModalGroup g;
    g.name = name;
    g.J = V.transpose() * ham.M * V;
    g.V = std::move(V);
    g.at_end = (std::string(name) == "growing");
    prim.basis.dimension += static_cast<int>(g.V.cols());
    prim.basis.groups.push_back(std::move(g));
  }
  return prim;
}

PrimitiveEnumeration enumerate_primitives(const BrunovskyForm& form) {
  PrimitiveEnumeration out;
  const int c = form.num_constraints();
  std::vector<std::vector<int>> subsets;
  for (unsigned mask = 0; mask < (1u << c); ++mask) {
    std::vector<int> set;
    for (int r = 0; r < c; ++r)
      if (mask & (1u << r)) set.push_back(r);
    subsets.push_back(set);
  }
  std::stable_sort(subsets.begin(), subsets.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });
  for (const auto& set : subsets) {
    try {
      out.primitives.push_back(make_primitive(form, set));
    } catch (const Error& e) {
      out.pruned.push_back({set, e.what()});
    }
  }
  return out;
}

MultiplierMap eliminate_multipliers(const MotionPrimitive& primitive, const BrunovskyForm&) {
  return {primitive.active_set, primitive.ham.Eta};
}

VectorXd euler_lagrange_residual(const MotionPrimitive& prim, const BrunovskyForm& form,
                                 const VectorXd& w) {
  const int m = form.num_chains();
  int kmax = 0;
  for (int i = 0; i < m; ++i) kmax = std::max(kmax, form.index.chain_length(i));
  VectorXd residual = VectorXd::Zero(m);
  VectorXd dw = w;
  for (int n = 0; n <= kmax; ++n) {
    const VectorXd g = 2.0 * form.Kmat * (prim.ham.Z * dw) +
                       prim.reduced_rows.transpose() * (prim.ham.Eta * dw);
    for (int i = 0; i < m; ++i)
      if (n <= form.index.chain_length(i))
        residual[i] += ((n % 2 == 0) ? 1.0 : -1.0) * g[form.index.column(i, n)];
    dw = prim.ham.M * dw;
  }
  return residual;
}

}  // namespace lqmp
