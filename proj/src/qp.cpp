#include "lqmp/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include <Eigen/SparseCholesky>

#include "lqmp/error.hpp"

namespace lqmp {

namespace {

using Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

double max_step(const VectorXd& v, const VectorXd& dv) {
  double alpha = 1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i)
    if (dv[i] < 0) alpha = std::min(alpha, -v[i] / dv[i]);
  return alpha;
}

double inf_norm(const VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

QpSolution solve_qp(const QpProblem& qp, const QpOptions& options) {
  const Eigen::Index nv = qp.f.size(), ne = qp.b.size(), ni = qp.h.size();
  const SparseMatrixXd Hfull = SparseMatrixXd(qp.H.selfadjointView<Eigen::Lower>());
  const SparseMatrixXd Gt = qp.G.transpose();
  const SparseMatrixXd Et = qp.E.transpose();

  VectorXd y = VectorXd::Zero(nv), nu = VectorXd::Zero(ne);
  VectorXd s = VectorXd::Ones(ni), z = VectorXd::Ones(ni);
  if (ni > 0) {
    // Start with slacks clear of zero at the scale of h.
    const double scale = std::max(1.0, inf_norm(qp.h));
    s = (qp.h - qp.G * y).cwiseMax(scale);
    z.setConstant(1.0);
  }

  const double scale_d = 1.0 + inf_norm(qp.f);
  const double scale_p = 1.0 + std::max(inf_norm(qp.b), inf_norm(qp.h));

  // KKT pattern: [[H + G'WG + dI, E'], [E, -dI]]; lower triangle.
  auto assemble = [&](const VectorXd& w, double reg) {
    SparseMatrixXd top = Hfull;
    if (ni > 0) top += SparseMatrixXd(Gt * w.asDiagonal() * qp.G);
    std::vector<Triplet> trip;
    trip.reserve(top.nonZeros() + qp.E.nonZeros() + nv + ne);
    for (int k = 0; k < top.outerSize(); ++k)
      for (SparseMatrixXd::InnerIterator it(top, k); it; ++it)
        if (it.row() >= it.col()) trip.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < qp.E.outerSize(); ++k)
      for (SparseMatrixXd::InnerIterator it(qp.E, k); it; ++it) trip.emplace_back(nv + it.row(), it.col(), it.value());
    for (Eigen::Index i = 0; i < nv; ++i) trip.emplace_back(i, i, reg);
    for (Eigen::Index i = 0; i < ne; ++i) trip.emplace_back(nv + i, nv + i, -reg);
    SparseMatrixXd K(nv + ne, nv + ne);
    K.setFromTriplets(trip.begin(), trip.end());
    return K;
  };

  Eigen::SimplicialLDLT<SparseMatrixXd, Eigen::Lower> ldlt;
  bool analysed = false;
  QpSolution out;
  // Best iterate so far; late iterations can lose accuracy once the slacks
  // reach round-off, so the loop falls back to it.
  struct Snapshot {
    VectorXd y, nu, z;
    double primal = 0.0, dual = 0.0, gap = 0.0, merit = 0.0;
    int iteration = 0;
  };
  Snapshot best;
  best.merit = std::numeric_limits<double>::infinity();
  bool converged = false;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    const VectorXd rd = Hfull * y + qp.f + Et * nu + (ni ? VectorXd(Gt * z) : VectorXd::Zero(nv));
    const VectorXd rp = qp.E * y - qp.b;
    const VectorXd ri = ni ? VectorXd(qp.G * y + s - qp.h) : VectorXd();
    const double mu = ni ? s.dot(z) / static_cast<double>(ni) : 0.0;
    out.primal_residual = std::max(inf_norm(rp), inf_norm(ri)) / scale_p;
    out.dual_residual = inf_norm(rd) / scale_d;
    out.gap = mu;
    out.iterations = iter;
    const double objective = 0.5 * y.dot(Hfull * y) + qp.f.dot(y);
    const double merit =
        std::max({out.primal_residual, out.dual_residual, mu / (1.0 + std::abs(objective))});
    if (!std::isfinite(merit) || merit > 1e4 * best.merit) break;
    if (merit < best.merit) best = {y, nu, z, out.primal_residual, out.dual_residual, mu, merit, iter};
    if (merit < options.tolerance) {
      converged = true;
      break;
    }
    if (ni > 0 && inf_norm(z) > 1e14) throw Error(ErrorCode::kQpInfeasible, "inequality multipliers diverge");

    const VectorXd w = ni ? VectorXd(z.cwiseQuotient(s)) : VectorXd();
    const SparseMatrixXd K = assemble(w, 0.0);
    // Zero pivots from cancellation: retry with stronger regularization,
    // refinement against K recovers the accuracy.
    double reg = options.regularization;
    for (;;) {
      const SparseMatrixXd Kreg = assemble(w, reg);
      if (!analysed) {
        ldlt.analyzePattern(Kreg);
        analysed = true;
      }
      ldlt.factorize(Kreg);
      if (ldlt.info() == Eigen::Success) break;
      reg *= 100.0;
      if (reg > 1e-2) break;
    }
    if (ldlt.info() != Eigen::Success) break;

    // Solve for a given complementarity target rc = s.z - target.
    auto direction = [&](const VectorXd& rc, VectorXd& dy, VectorXd& dnu, VectorXd& ds, VectorXd& dz) {
      VectorXd rhs(nv + ne);
      rhs.head(nv) = -rd;
      if (ni > 0) rhs.head(nv) += Gt * (rc - z.cwiseProduct(ri)).cwiseQuotient(s);
      rhs.tail(ne) = -rp;
      VectorXd sol = ldlt.solve(rhs);
      // Iterative refinement against the unregularized operator.
      const double rhs_norm = std::max(1e-300, inf_norm(rhs));
      for (int r = 0; r < options.refinement_steps; ++r) {
        const VectorXd res = rhs - K.selfadjointView<Eigen::Lower>() * sol;
        if (inf_norm(res) <= 1e-14 * rhs_norm) break;
        sol += ldlt.solve(res);
      }
      dy = sol.head(nv);
      dnu = sol.tail(ne);
      if (ni > 0) {
        ds = -ri - qp.G * dy;
        dz = (-rc - z.cwiseProduct(ds)).cwiseQuotient(s);
      }
    };

    VectorXd dy, dnu, ds, dz;
    if (ni == 0) {
      direction(VectorXd(), dy, dnu, ds, dz);
      y += dy;
      nu += dnu;
      continue;
    }
    // Predictor.
    direction(s.cwiseProduct(z), dy, dnu, ds, dz);
    const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(ni);
    const double sigma = std::pow(mu_aff / mu, 3);
    // Corrector.
    const VectorXd rc = s.cwiseProduct(z) + ds.cwiseProduct(dz) - VectorXd::Constant(ni, sigma * mu);
    direction(rc, dy, dnu, ds, dz);
    const double alpha = std::min(1.0, 0.995 * std::min(max_step(s, ds), max_step(z, dz)));
    y += alpha * dy;
    nu += alpha * dnu;
    s += alpha * ds;
    z += alpha * dz;
  }

  if (!converged) {
    if (!(best.merit < 1e3 * options.tolerance)) {
      std::ostringstream msg;
      msg << "no convergence: primal residual " << best.primal << ", dual residual " << best.dual
          << ", gap " << best.gap;
      throw Error(ErrorCode::kQpInfeasible, msg.str());
    }
  }
  if (!converged || best.iteration != out.iterations) {
    y = best.y;
    nu = best.nu;
    z = best.z;
    out.primal_residual = best.primal;
    out.dual_residual = best.dual;
    out.gap = best.gap;
    out.iterations = best.iteration;
  }
  out.y = y;
  out.nu = nu;
  out.z = z;
  out.slack = ni ? VectorXd(qp.h - qp.G * y) : VectorXd();
  out.objective = 0.5 * y.dot(Hfull * y) + qp.f.dot(y);
  return out;
}

}  // namespace lqmp
