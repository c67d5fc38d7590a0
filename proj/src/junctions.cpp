#include "lqmp/junctions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "lqmp/error.hpp"
#include "lqmp/quadrature.hpp"

namespace lqmp {

namespace {

// Brent's method on a bracket [a, b] with f(a) f(b) <= 0.
double brent(const std::function<double(double)>& f, double a, double b, double fa, double fb,
             double xtol, double ftol, int max_iter = 200) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if ((fb > 0) == (fc > 0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol = 2.0 * 1e-16 * std::abs(b) + 0.5 * xtol;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || std::abs(fb) <= ftol) return b;
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double p, q, r;
      const double s = fb / fa;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * m * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) q = -q;
      else p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = p / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += (std::abs(d) > tol) ? d : (m > 0 ? tol : -tol);
    fb = f(b);
  }
  return b;
}

struct Canonical {
  MatrixXd A, B;
};

Canonical canonical(const BrunovskyForm& form) { return {form.canonical_A(), form.canonical_B()}; }

double hamiltonian_at(const Arc& arc, const BrunovskyForm& form, const Canonical& cf, const VectorXd& w) {
  const int n = form.num_states(), m = form.num_chains();
  const auto& prim = *arc.primitive;
  const VectorXd z = prim.ham.Z * w;
  const VectorXd lam = prim.ham.Lambda * w;
  const VectorXd eta = prim.ham.Eta * w;
  double h = z.dot(form.Kmat * z) + lam.dot(cf.A * z.head(n) + cf.B * z.tail(m));
  if (eta.size() > 0) h += eta.dot(prim.reduced_rows * z - prim.reduced_offsets);
  return h;
}

}  // namespace

std::string to_string(JunctionKind kind) {
  switch (kind) {
    case JunctionKind::kTouch: return "touch";
    case JunctionKind::kEntry: return "entry";
    case JunctionKind::kExit: return "exit";
  }
  return "unknown";
}

VectorXd Arc::w(double t) const {
  const auto& basis = primitive->basis;
  VectorXd out = VectorXd::Zero(primitive->ham.M.rows());
  Eigen::Index col = 0;
  for (const auto& g : basis.groups) {
    const double tau = t - (g.at_end ? tb : ta);
    const Eigen::Index d = g.V.cols();
    out += g.V * ((g.J * tau).exp() * coeffs.segment(col, d));
    col += d;
  }
  return out;
}

VectorXd Arc::w_derivative(double t, int order) const {
  VectorXd out = w(t);
  for (int k = 0; k < order; ++k) out = primitive->ham.M * out;
  return out;
}

int Trajectory::arc_index(double t) const {
  int idx = 0;
  for (int k = 1; k < static_cast<int>(arcs.size()); ++k)
    if (t >= arcs[k].ta) idx = k;
  return idx;
}

std::vector<std::vector<int>> Trajectory::active_sets() const {
  std::vector<std::vector<int>> out;
  for (const auto& a : arcs) out.push_back(a.primitive->active_set);
  return out;
}

JunctionSystem assemble(const std::vector<JunctionSpec>& sequence, PrimitiveLibrary& library) {
  JunctionSystem sys;
  sys.form = library.form_ptr();
  sys.specs = sequence;
  const BrunovskyForm& form = *sys.form;
  const int n = form.num_states();
  const int nw = 2 * n + 1;

  std::vector<int> active;
  sys.arc_primitives.push_back(library.get(active));
  for (std::size_t j = 0; j < sequence.size(); ++j) {
    const JunctionSpec& spec = sequence[j];
    if (spec.constraints.empty())
      throw Error(ErrorCode::kInvalidInput, "junction " + std::to_string(j) + " names no constraint");
    MatrixXd N(0, n);
    VectorXd off(0);
    auto add_rows = [&](const MatrixXd& rows, const VectorXd& o) {
      MatrixXd N2(N.rows() + rows.rows(), n);
      N2 << N, rows;
      VectorXd off2(off.size() + o.size());
      off2 << off, o;
      N = std::move(N2);
      off = std::move(off2);
    };
    for (int c : spec.constraints) {
      const TangencyStack stack = derive_tangency(form, c);
      const bool is_active = std::find(active.begin(), active.end(), c) != active.end();
      switch (spec.kind) {
        case JunctionKind::kTouch: {
          if (stack.q == 0)
            throw Error(ErrorCode::kInvalidInput,
                        "row " + std::to_string(c) + " contains the control and cannot be touched");
          if (is_active) throw Error(ErrorCode::kInvalidInput, "touch of an active row " + std::to_string(c));
          const TangencyStack touch = instantaneous_stack(stack);
          add_rows(touch.state_rows(), touch.offsets);
          break;
        }
        case JunctionKind::kEntry:
          if (is_active) throw Error(ErrorCode::kInvalidInput, "row " + std::to_string(c) + " is already active");
          if (stack.q > 0) add_rows(stack.state_rows(), stack.offsets);
          active.push_back(c);
          break;
        case JunctionKind::kExit:
          if (!is_active) throw Error(ErrorCode::kInvalidInput, "exit of inactive row " + std::to_string(c));
          active.erase(std::find(active.begin(), active.end(), c));
          break;
      }
    }
    sys.N.push_back(N);
    sys.offsets.push_back(off);
    sys.arc_primitives.push_back(library.get(active));
  }
  if (!active.empty())
    throw Error(ErrorCode::kInvalidInput, "sequence ends with active constraints " + active_set_label(active));

  const int arcs = static_cast<int>(sys.arc_primitives.size());
  int offset = 0;
  for (int k = 0; k < arcs; ++k) {
    sys.coeff_offset.push_back(offset);
    offset += nw;
  }
  int pis = 0;
  for (const auto& N : sys.N) {
    sys.pi_offset.push_back(offset);
    offset += static_cast<int>(N.rows());
    pis += static_cast<int>(N.rows());
  }
  sys.num_linear = offset;

  const int J = static_cast<int>(sequence.size());
  auto& counts = sys.counts;
  counts.unknown_breakdown = {{"arc coefficients", arcs * nw}, {"interior-point multipliers", pis}, {"junction times", J}};
  counts.equation_breakdown = {{"boundary conditions", 2 * n},
                               {"arc normalisation", arcs},
                               {"state continuity", J * n},
                               {"costate jump", J * n},
                               {"tangency rows", pis},
                               {"Hamiltonian condition", J}};
  for (const auto& c : counts.unknown_breakdown) counts.unknowns += c.count;
  for (const auto& c : counts.equation_breakdown) counts.equations += c.count;
  for (const auto& N : sys.N) {
    const int p = static_cast<int>(N.rows());
    counts.per_junction.emplace_back(2 * n + p + 1, n + n + p + 1);
  }
  if (counts.unknowns != counts.equations) {
    std::ostringstream msg;
    msg << "unknowns " << counts.unknowns << " vs equations " << counts.equations;
    throw Error(ErrorCode::kCountMismatch, msg.str());
  }
  return sys;
}

Trajectory solve_fixed_times(const JunctionSystem& sys, const std::vector<double>& times) {
  const BrunovskyForm& form = *sys.form;
  const int n = form.num_states();
  const int nw = 2 * n + 1;
  const int J = sys.num_junctions();
  if (static_cast<int>(times.size()) != J) throw Error(ErrorCode::kInvalidInput, "wrong number of junction times");
  std::vector<double> b{0.0};
  for (double t : times) b.push_back(t);
  b.push_back(form.T);
  for (int k = 0; k + 1 < static_cast<int>(b.size()); ++k)
    if (!(b[k + 1] > b[k])) throw Error(ErrorCode::kInvalidInput, "junction times must be increasing inside (0, T)");

  const int arcs = J + 1;
  std::vector<MatrixXd> phi_a(arcs), phi_b(arcs);
  for (int k = 0; k < arcs; ++k) {
    const auto& basis = sys.arc_primitives[k]->basis;
    phi_a[k] = basis.fundamental(b[k], b[k], b[k + 1]);
    phi_b[k] = basis.fundamental(b[k + 1], b[k], b[k + 1]);
  }

  const int size = sys.num_linear;
  MatrixXd A = MatrixXd::Zero(size, size);
  VectorXd rhs = VectorXd::Zero(size);
  int r = 0;
  A.block(r, sys.coeff_offset[0], n, nw) = phi_a[0].topRows(n);
  rhs.segment(r, n) = form.s0;
  r += n;
  A.block(r, sys.coeff_offset[J], n, nw) = phi_b[J].topRows(n);
  rhs.segment(r, n) = form.sT;
  r += n;
  for (int k = 0; k < arcs; ++k) {
    A.block(r, sys.coeff_offset[k], 1, nw) = phi_a[k].row(2 * n);
    rhs[r] = 1.0;
    ++r;
  }
  for (int j = 0; j < J; ++j) {
    const MatrixXd& L = phi_b[j];
    const MatrixXd& R = phi_a[j + 1];
    const int p = static_cast<int>(sys.N[j].rows());
    A.block(r, sys.coeff_offset[j], n, nw) = L.topRows(n);
    A.block(r, sys.coeff_offset[j + 1], n, nw) = -R.topRows(n);
    r += n;
    A.block(r, sys.coeff_offset[j], n, nw) = L.middleRows(n, n);
    A.block(r, sys.coeff_offset[j + 1], n, nw) = -R.middleRows(n, n);
    if (p > 0) A.block(r, sys.pi_offset[j], n, p) = -sys.N[j].transpose();
    r += n;
    if (p > 0) {
      A.block(r, sys.coeff_offset[j + 1], p, nw) = sys.N[j] * R.topRows(n);
      rhs.segment(r, p) = sys.offsets[j];
      r += p;
    }
  }

  // Row then column equilibration.
  VectorXd row_scale(size), col_scale(size);
  for (int i = 0; i < size; ++i) {
    const double mx = A.row(i).cwiseAbs().maxCoeff();
    row_scale[i] = mx > 0 ? 1.0 / mx : 1.0;
  }
  A = row_scale.asDiagonal() * A;
  rhs = row_scale.asDiagonal() * rhs;
  for (int j = 0; j < size; ++j) {
    const double mx = A.col(j).cwiseAbs().maxCoeff();
    col_scale[j] = mx > 0 ? 1.0 / mx : 1.0;
  }
  A = A * col_scale.asDiagonal();

  Eigen::JacobiSVD<MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
  if (!(cond <= 1e12)) {
    std::ostringstream msg;
    msg << "junction system condition number " << cond;
    throw Error(ErrorCode::kIllConditioned, msg.str());
  }
  const VectorXd y = svd.solve(rhs);
  const VectorXd sol = col_scale.asDiagonal() * y;

  Trajectory traj;
  traj.form = sys.form;
  traj.condition = cond;
  for (int k = 0; k < arcs; ++k) {
    Arc arc;
    arc.primitive = sys.arc_primitives[k];
    arc.coeffs = sol.segment(sys.coeff_offset[k], nw);
    arc.ta = b[k];
    arc.tb = b[k + 1];
    traj.arcs.push_back(std::move(arc));
  }
  const Canonical cf = canonical(form);
  for (int j = 0; j < J; ++j) {
    SolvedJunction sj;
    sj.spec = sys.specs[j];
    sj.spec.time = times[j];
    sj.N = sys.N[j];
    sj.offsets = sys.offsets[j];
    sj.pi = sol.segment(sys.pi_offset.empty() ? 0 : sys.pi_offset[j], sys.N[j].rows());
    const Arc& left = traj.arcs[j];
    const Arc& right = traj.arcs[j + 1];
    sj.hamiltonian_jump = hamiltonian_at(right, form, cf, phi_a[j + 1] * right.coeffs) -
                          hamiltonian_at(left, form, cf, phi_b[j] * left.coeffs);
    traj.junctions.push_back(std::move(sj));
  }
  return traj;
}

VectorXd hamiltonian_jumps(const Trajectory& traj) {
  VectorXd out(traj.junctions.size());
  for (std::size_t j = 0; j < traj.junctions.size(); ++j) out[j] = traj.junctions[j].hamiltonian_jump;
  return out;
}

Trajectory solve_junctions(const JunctionSystem& sys, const JunctionSolveOptions& opt,
                           std::vector<JunctionRoot>* roots_out) {
  const int J = sys.num_junctions();
  if (J == 0) return solve_fixed_times(sys, {});
  const double T = sys.form->T;

  // Jumps are measured against the size of H itself so the tolerance means
  // the same thing for badly scaled problems.
  auto residual = [&](const std::vector<double>& t) -> VectorXd {
    try {
      const Trajectory traj = solve_fixed_times(sys, t);
      double scale = 1.0;
      for (const Arc& arc : traj.arcs) scale = std::max(scale, std::abs(hamiltonian(arc, *sys.form, arc.ta)));
      return hamiltonian_jumps(traj) / scale;
    } catch (const Error&) {
      return VectorXd::Constant(J, std::numeric_limits<double>::quiet_NaN());
    }
  };

  std::vector<std::vector<double>> found;
  auto record = [&](const std::vector<double>& t) {
    for (const auto& f : found) {
      double d = 0;
      for (int i = 0; i < J; ++i) d = std::max(d, std::abs(f[i] - t[i]));
      if (d <= 1e-6 * T) return;
    }
    found.push_back(t);
  };

  if (J == 1) {
    const int N = opt.scan_points;
    std::vector<double> ts(N), rs(N);
    for (int k = 0; k < N; ++k) {
      ts[k] = T * (k + 0.5) / N;
      rs[k] = residual({ts[k]})[0];
    }
    auto f = [&](double t) {
      const double v = residual({t})[0];
      return std::isfinite(v) ? v : 0.0;
    };
    for (int k = 0; k + 1 < N; ++k) {
      if (!std::isfinite(rs[k]) || !std::isfinite(rs[k + 1])) continue;
      if (rs[k] == 0.0) {
        record({ts[k]});
        continue;
      }
      if ((rs[k] > 0) == (rs[k + 1] > 0)) continue;
      const double t = brent(f, ts[k], ts[k + 1], rs[k], rs[k + 1], 1e-13 * T, 1e-4 * opt.tolerance);
      const double v = residual({t})[0];
      if (std::isfinite(v) && std::abs(v) <= opt.tolerance) record({t});
    }
  } else {
    auto inside = [&](const std::vector<double>& t) {
      double prev = 0.0;
      for (double v : t) {
        if (!(v > prev + 1e-9 * T)) return false;
        prev = v;
      }
      return prev < T * (1 - 1e-9);
    };
    // Entry and exit of first-order-smooth arcs make the jump quadratic in
    // the time error, so after reaching the tolerance Newton keeps going
    // while the residual still drops; the times then settle to ~sqrt(eps).
    auto newton = [&](std::vector<double> t) -> bool {
      VectorXd r = residual(t);
      if (!r.allFinite()) return false;
      double last_step = 1e-5 * T;
      int polish = 0;
      for (int it = 0; it < opt.max_newton_iterations + polish; ++it) {
        if (r.cwiseAbs().maxCoeff() <= opt.tolerance) {
          if (polish == 0) polish = 40;
          if (r.norm() == 0.0 || last_step <= 1e-13 * T) break;
        }
        MatrixXd jac = MatrixXd::Constant(J, J, std::numeric_limits<double>::quiet_NaN());
        const double h = std::clamp(0.01 * last_step, 1e-11 * T, 1e-7 * T);
        for (int i = 0; i < J; ++i) {
          std::vector<double> tp = t;
          tp[i] += h;
          const VectorXd rp = residual(tp);
          if (!rp.allFinite()) break;
          jac.col(i) = (rp - r) / h;
        }
        if (!jac.allFinite()) break;
        const VectorXd step = -jac.colPivHouseholderQr().solve(r);
        if (!step.allFinite()) break;
        double alpha = 1.0;
        bool accepted = false;
        while (alpha > 1e-6) {
          std::vector<double> tn = t;
          for (int i = 0; i < J; ++i) tn[i] += alpha * step[i];
          if (inside(tn)) {
            const VectorXd rn = residual(tn);
            if (rn.allFinite() && rn.norm() < (1 - 1e-4 * alpha) * r.norm()) {
              t = tn;
              r = rn;
              accepted = true;
              break;
            }
          }
          alpha *= 0.5;
        }
        if (!accepted) break;
        last_step = alpha * step.cwiseAbs().maxCoeff();
      }
      if (r.cwiseAbs().maxCoeff() <= opt.tolerance) {
        record(t);
        return true;
      }
      return false;
    };

    std::vector<double> guess;
    for (const auto& s : sys.specs) guess.push_back(s.time);
    bool have_guess = std::all_of(guess.begin(), guess.end(), [](double v) { return std::isfinite(v); });
    if (have_guess && inside(guess)) newton(guess);

    if (found.empty()) {
      // Coarse grid of ordered time tuples; Newton from the best few.
      const int G = (J == 2) ? 24 : 10;
      std::vector<std::pair<double, std::vector<double>>> seeds;
      std::vector<int> idx(J);
      std::function<void(int, int)> rec = [&](int depth, int start) {
        if (depth == J) {
          std::vector<double> t(J);
          for (int i = 0; i < J; ++i) t[i] = T * (idx[i] + 0.5) / G;
          const VectorXd r = residual(t);
          if (r.allFinite()) seeds.emplace_back(r.norm(), t);
          return;
        }
        for (int k = start; k < G; ++k) {
          idx[depth] = k;
          rec(depth + 1, k + 1);
        }
      };
      rec(0, 0);
      std::sort(seeds.begin(), seeds.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
      for (std::size_t s = 0; s < std::min<std::size_t>(8, seeds.size()); ++s) newton(seeds[s].second);
    }
  }

  if (found.empty())
    throw Error(ErrorCode::kNoRoot, "Hamiltonian condition has no root inside (0, T)");

  std::vector<JunctionRoot> roots;
  std::vector<Trajectory> trajs;
  for (const auto& t : found) {
    Trajectory traj = solve_fixed_times(sys, t);
    JunctionRoot root{t, energy(traj), max_violation(traj, opt.feasibility_samples)};
    roots.push_back(root);
    trajs.push_back(std::move(traj));
  }
  std::size_t best = 0;
  auto better = [&](std::size_t a, std::size_t b) {
    const bool fa = roots[a].violation <= opt.feasibility_tolerance;
    const bool fb = roots[b].violation <= opt.feasibility_tolerance;
    if (fa != fb) return fa;
    if (fa) return roots[a].energy < roots[b].energy;
    return roots[a].violation < roots[b].violation;
  };
  for (std::size_t k = 1; k < roots.size(); ++k)
    if (better(k, best)) best = k;
  if (roots_out) *roots_out = roots;
  return std::move(trajs[best]);
}

Trajectory solve_unconstrained(PrimitiveLibrary& library) {
  return solve_fixed_times(assemble({}, library), {});
}

StackedPoint evaluate(const Trajectory& traj, double t, bool left) {
  const double T = traj.horizon();
  if (!(t >= 0.0 && t <= T)) {
    std::ostringstream msg;
    msg << "t = " << t << " outside [0, " << T << "]";
    throw Error(ErrorCode::kOutOfHorizon, msg.str());
  }
  int k = traj.arc_index(t);
  if (left && k > 0 && t <= traj.arcs[k].ta) --k;
  const Arc& arc = traj.arcs[k];
  const VectorXd w = arc.w(t);
  StackedPoint p;
  p.arc = k;
  p.z = arc.primitive->ham.Z * w;
  p.lambda = arc.primitive->ham.Lambda * w;
  p.eta = arc.primitive->ham.Eta * w;
  p.x = traj.form->original_state(p.z);
  p.u = traj.form->original_control(p.z);
  return p;
}

double costate(const Arc& arc, const BrunovskyForm& form, double t, int chain, int j) {
  const int k = form.index.chain_length(chain);
  const auto& prim = *arc.primitive;
  double lam = 0.0;
  VectorXd dw = arc.w(t);
  for (int n = 1; n <= k - j; ++n) {
    // dw holds the (n-1)-th derivative.
    const VectorXd g = 2.0 * form.Kmat * (prim.ham.Z * dw) + prim.reduced_rows.transpose() * (prim.ham.Eta * dw);
    lam += ((n % 2 == 0) ? 1.0 : -1.0) * g[form.index.column(chain, j + n)];
    dw = prim.ham.M * dw;
  }
  return lam;
}

double hamiltonian(const Arc& arc, const BrunovskyForm& form, double t) {
  return hamiltonian_at(arc, form, canonical(form), arc.w(t));
}

double energy(const Trajectory& traj) {
  const MatrixXd& K = traj.form->Kmat;
  double total = 0.0;
  for (const Arc& arc : traj.arcs) {
    auto f = [&](double t) {
      const VectorXd z = arc.z(t);
      return z.dot(K * z);
    };
    total += integrate(f, arc.ta, arc.tb, 1e-6 * traj.horizon());
  }
  return total;
}

double max_violation(const Trajectory& traj, int samples) {
  const BrunovskyForm& form = *traj.form;
  if (form.num_constraints() == 0) return -std::numeric_limits<double>::infinity();
  double worst = -std::numeric_limits<double>::infinity();
  auto check = [&](double t, bool left) {
    const StackedPoint p = evaluate(traj, t, left);
    worst = std::max(worst, (form.Lmat * p.z - form.eVec).maxCoeff());
  };
  for (int k = 0; k <= samples; ++k) check(form.T * k / samples, false);
  for (const auto& j : traj.junctions) {
    check(j.spec.time, true);
    check(j.spec.time, false);
  }
  return worst;
}

OptimalityReport check_optimality(const Trajectory& traj, int samples) {
  const BrunovskyForm& form = *traj.form;
  const int n = form.num_states();
  const Canonical cf = canonical(form);
  OptimalityReport rep;
  rep.min_multiplier = std::numeric_limits<double>::infinity();
  int kmax = 0;
  for (int i = 0; i < form.num_chains(); ++i) kmax = std::max(kmax, form.index.chain_length(i));

  for (const Arc& arc : traj.arcs) {
    const auto& prim = *arc.primitive;
    const double h0 = hamiltonian_at(arc, form, cf, arc.w(arc.ta));
    for (int s = 0; s <= samples; ++s) {
      const double t = arc.ta + (arc.tb - arc.ta) * s / samples;
      const VectorXd w = arc.w(t);
      const VectorXd el = euler_lagrange_residual(prim, form, w);
      double scale = 1.0;
      VectorXd dw = w;
      for (int k = 0; k <= kmax; ++k) {
        scale = std::max(scale, (2.0 * form.Kmat * (prim.ham.Z * dw)).cwiseAbs().maxCoeff());
        if (prim.ham.Eta.rows() > 0)
          scale = std::max(scale, (prim.reduced_rows.transpose() * (prim.ham.Eta * dw)).cwiseAbs().maxCoeff());
        dw = prim.ham.M * dw;
      }
      rep.euler_lagrange_abs = std::max(rep.euler_lagrange_abs, el.cwiseAbs().maxCoeff());
      rep.euler_lagrange = std::max(rep.euler_lagrange, el.cwiseAbs().maxCoeff() / scale);
      rep.hamiltonian_drift = std::max(rep.hamiltonian_drift, std::abs(hamiltonian_at(arc, form, cf, w) - h0));
      const VectorXd lam = prim.ham.Lambda * w;
      for (int i = 0; i < form.num_chains(); ++i)
        for (int j = 0; j < form.index.chain_length(i); ++j)
          rep.costate_formula = std::max(
              rep.costate_formula, std::abs(costate(arc, form, t, i, j) - lam[form.index.column(i, j)]));
      for (std::size_t c = 0; c < prim.active_set.size(); ++c) {
        const int q = prim.stacks[c].q;
        VectorXd d = w;
        for (int k = 0; k < q; ++k) d = prim.ham.M * d;
        const double mu = ((q % 2 == 0) ? 1.0 : -1.0) * prim.ham.Eta.row(c).dot(d);
        rep.min_multiplier = std::min(rep.min_multiplier, mu);
      }
    }
  }
  for (std::size_t j = 0; j < traj.junctions.size(); ++j) {
    const auto& sj = traj.junctions[j];
    const double t = sj.spec.time;
    const VectorXd wl = traj.arcs[j].w(t), wr = traj.arcs[j + 1].w(t);
    rep.state_continuity = std::max(rep.state_continuity, (wl.head(n) - wr.head(n)).cwiseAbs().maxCoeff());
    VectorXd jump = wl.segment(n, n) - wr.segment(n, n);
    if (sj.N.rows() > 0) jump -= sj.N.transpose() * sj.pi;
    rep.costate_jump = std::max(rep.costate_jump, jump.cwiseAbs().maxCoeff());
    rep.hamiltonian_jump = std::max(rep.hamiltonian_jump, std::abs(sj.hamiltonian_jump));
  }
  const VectorXd s0 = traj.arcs.front().w(0.0).head(n);
  const VectorXd sT = traj.arcs.back().w(form.T).head(n);
  rep.boundary = std::max((s0 - form.s0).cwiseAbs().maxCoeff(), (sT - form.sT).cwiseAbs().maxCoeff());
  if (!std::isfinite(rep.min_multiplier)) rep.min_multiplier = 0.0;
  return rep;
}

}  // namespace lqmp
