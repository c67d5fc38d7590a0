#include "lqmp/lqr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "lqmp/error.hpp"

namespace lqmp {

namespace {

using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Solves Ac'X + X Ac = -W by the Kronecker form (small n only).
MatrixXd lyapunov(const MatrixXd& Ac, const MatrixXd& W) {
  const Eigen::Index n = Ac.rows();
  const MatrixXd I = MatrixXd::Identity(n, n);
  const MatrixXd L = Eigen::kroneckerProduct(I, Ac.transpose()).eval() + Eigen::kroneckerProduct(Ac.transpose(), I).eval();
  const VectorXd rhs = -Eigen::Map<const VectorXd>(W.data(), n * n);
  const VectorXd x = L.partialPivLu().solve(rhs);
  MatrixXd X = Eigen::Map<const MatrixXd>(x.data(), n, n);
  return 0.5 * (X + X.transpose());
}

double max_real_eigenvalue(const MatrixXd& m) {
  Eigen::EigenSolver<MatrixXd> es(m, false);
  return es.eigenvalues().real().maxCoeff();
}

MatrixXd are_residual(const MatrixXd& A, const MatrixXd& B, const LqrWeights& w, const MatrixXd& P,
                      const MatrixXd& Rinv) {
  const MatrixXd PBN = P * B + w.N;
  return A.transpose() * P + P * A - PBN * Rinv * PBN.transpose() + w.Q;
}

}  // namespace

RiccatiSolution solve_riccati(const MatrixXd& A, const MatrixXd& B, const LqrWeights& w) {
  const Eigen::Index n = A.rows();
  if (w.Q.rows() != n || w.Q.cols() != n || w.R.rows() != B.cols() || w.R.cols() != B.cols() ||
      w.N.rows() != n || w.N.cols() != B.cols())
    throw Error(ErrorCode::kDimensionMismatch, "LQR weights do not match (A, B)");
  const MatrixXd R = 0.5 * (w.R + w.R.transpose());
  Eigen::LLT<MatrixXd> rllt(R);
  if (rllt.info() != Eigen::Success) throw Error(ErrorCode::kRiccatiFailure, "R is not positive definite");
  const MatrixXd Rinv = rllt.solve(MatrixXd::Identity(R.rows(), R.cols()));
  const MatrixXd Qs = 0.5 * (w.Q + w.Q.transpose()) - w.N * Rinv * w.N.transpose();
  {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Qs, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, Qs.norm()))
      throw Error(ErrorCode::kRiccatiFailure, "Q - N R^-1 N' is not positive semidefinite");
  }
  const MatrixXd Ab = A - B * Rinv * w.N.transpose();

  // Hamiltonian matrix and its sign.
  MatrixXd H(2 * n, 2 * n);
  H << Ab, -B * Rinv * B.transpose(), -Qs, -Ab.transpose();
  MatrixXd Z = H;
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    Eigen::PartialPivLU<MatrixXd> lu(Z);
    const double det = std::abs(lu.determinant());
    if (!(det > 0.0) || !std::isfinite(det))
      throw Error(ErrorCode::kRiccatiFailure, "Hamiltonian matrix has eigenvalues on the imaginary axis");
    const double c = std::pow(det, 1.0 / static_cast<double>(2 * n));
    const MatrixXd Zn = 0.5 * (Z / c + c * lu.inverse());
    const double change = (Zn - Z).norm();
    Z = Zn;
    if (change <= 1e-12 * Z.norm()) {
      converged = true;
      break;
    }
  }
  if (!converged) throw Error(ErrorCode::kRiccatiFailure, "sign iteration did not converge");
  const MatrixXd I = MatrixXd::Identity(n, n);
  MatrixXd lhs(2 * n, n), rhs(2 * n, n);
  lhs << Z.topRightCorner(n, n), Z.bottomRightCorner(n, n) + I;
  rhs << Z.topLeftCorner(n, n) + I, Z.bottomLeftCorner(n, n);
  MatrixXd P = lhs.colPivHouseholderQr().solve(-rhs);
  P = 0.5 * (P + P.transpose());
  if (!P.allFinite()) throw Error(ErrorCode::kRiccatiFailure, "no stabilizing solution");

  // Newton-Kleinman polishing while the residual improves.
  double res = are_residual(A, B, w, P, Rinv).norm();
  for (int it = 0; it < 4 && res > 0.0; ++it) {
    const MatrixXd K = Rinv * (B.transpose() * P + w.N.transpose());
    const MatrixXd Ac = A - B * K;
    if (max_real_eigenvalue(Ac) >= 0.0) break;
    const MatrixXd W = w.Q + K.transpose() * R * K - w.N * K - K.transpose() * w.N.transpose();
    const MatrixXd Pn = lyapunov(Ac, W);
    const double rn = are_residual(A, B, w, Pn, Rinv).norm();
    if (!(rn < res)) break;
    P = Pn;
    res = rn;
  }

  RiccatiSolution out;
  out.P = P;
  out.K = Rinv * (B.transpose() * P + w.N.transpose());
  out.residual = res;
  out.max_real_closed_loop = max_real_eigenvalue(A - B * out.K);
  if (!(out.max_real_closed_loop < 0.0))
    throw Error(ErrorCode::kRiccatiFailure, "closed loop is not Hurwitz");
  return out;
}

LqrEvaluation simulate(const BrunovskyForm& form, const MatrixXd& gain, const SimulationOptions& options) {
  const int n = form.num_states(), m = form.num_chains();
  const MatrixXd A = form.canonical_A(), B = form.canonical_B();
  LqrEvaluation ev;
  ev.gain = gain;

  // Error state e = s - sT with augmented constant: xi = [e; 1].
  const int na = n + 1;
  MatrixXd F = MatrixXd::Zero(na, na);
  F.topLeftCorner(n, n) = A - B * gain;
  F.topRightCorner(n, 1) = A * form.sT;
  MatrixXd Mz = MatrixXd::Zero(n + m, na);  // z = Mz xi
  Mz.topLeftCorner(n, n).setIdentity();
  Mz.topRightCorner(n, 1) = form.sT;
  Mz.bottomLeftCorner(m, n) = -gain;
  const MatrixXd W = Mz.transpose() * form.Kmat * Mz;

  const int steps = std::max(1, static_cast<int>(std::lround(form.T / options.dt)));
  const double dt = form.T / steps;
  // Van Loan: exp([[-F', W], [0, F]] dt) = [[., G12], [0, Phi]], step energy
  // xi' Phi' G12 xi.
  MatrixXd VL = MatrixXd::Zero(2 * na, 2 * na);
  VL.topLeftCorner(na, na) = -F.transpose();
  VL.topRightCorner(na, na) = W;
  VL.bottomRightCorner(na, na) = F;
  const MatrixXd E = (VL * dt).exp();
  const MatrixXd Phi = E.bottomRightCorner(na, na);
  MatrixXd Wd = Phi.transpose() * E.topRightCorner(na, na);
  Wd = 0.5 * (Wd + Wd.transpose());

  std::vector<int> rows = options.checked_rows;
  if (rows.empty())
    for (int r = 0; r < form.num_constraints(); ++r)
      if (form.Lmat.row(r).tail(m).cwiseAbs().maxCoeff() == 0.0) rows.push_back(r);

  VectorXd xi(na);
  xi << form.s0 - form.sT, 1.0;
  if (options.keep_trajectory) {
    ev.t.resize(steps + 1);
    ev.z.resize(steps + 1, n + m);
  }
  double energy = 0.0, worst = -kInf;
  bool diverged = false;
  for (int k = 0; k <= steps; ++k) {
    const VectorXd z = Mz * xi;
    for (int r : rows) worst = std::max(worst, form.Lmat.row(r).dot(z) - form.eVec[r]);
    if (options.keep_trajectory) {
      ev.t[k] = k * dt;
      ev.z.row(k) = z.transpose();
    }
    if (k == steps) break;
    energy += xi.dot(Wd * xi);
    xi = Phi * xi;
    if (!xi.allFinite() || xi.cwiseAbs().maxCoeff() > 1e12) {
      diverged = true;
      break;
    }
  }
  ev.energy = energy;
  ev.terminal_error = xi.head(n).norm();
  ev.max_violation = rows.empty() ? 0.0 : worst;
  ev.feasible = !diverged && ev.max_violation <= 1e-9;
  ev.fitness = ev.feasible ? energy + options.terminal_penalty * ev.terminal_error * ev.terminal_error : kInf;
  return ev;
}

LqrEvaluation evaluate_weights(const BrunovskyForm& form, const LqrWeights& weights, const SimulationOptions& options) {
  try {
    const RiccatiSolution ric = solve_riccati(form.canonical_A(), form.canonical_B(), weights);
    return simulate(form, ric.K, options);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kRiccatiFailure) throw;
    LqrEvaluation ev;
    ev.feasible = false;
    ev.fitness = kInf;
    ev.energy = kInf;
    return ev;
  }
}

int gene_count(int n, int m) { return n * (n + 1) / 2 + m * (m + 1) / 2 + n * m; }

LqrWeights decode(const VectorXd& g, int n, int m) {
  LqrWeights w;
  w.Q.resize(n, n);
  w.R.resize(m, m);
  w.N.resize(n, m);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) w.Q(i, j) = w.Q(j, i) = g[k++];
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) w.R(i, j) = w.R(j, i) = g[k++];
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) w.N(i, j) = g[k++];
  return w;
}

VectorXd encode(const LqrWeights& w) {
  const int n = static_cast<int>(w.Q.rows()), m = static_cast<int>(w.R.rows());
  VectorXd g(gene_count(n, m));
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) g[k++] = w.Q(i, j);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) g[k++] = w.R(i, j);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) g[k++] = w.N(i, j);
  return g;
}

GaResult optimize_weights(const BrunovskyForm& form, const GaOptions& opt, const std::vector<VectorXd>& initial) {
  const int n = form.num_states(), m = form.num_chains(), ng = gene_count(n, m);
  const int pop = std::max(2, opt.population);
  const int elites = std::clamp(opt.elites, 0, pop - 1);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Diagonal genes positive and log-uniform, off-diagonal genes small
  // relative to the diagonals.
  std::vector<bool> diagonal(ng, false);
  {
    int k = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) diagonal[k++] = (i == j);
    for (int i = 0; i < m; ++i)
      for (int j = i; j < m; ++j) diagonal[k++] = (i == j);
  }
  auto random_individual = [&]() {
    VectorXd g(ng);
    for (int k = 0; k < ng; ++k)
      g[k] = diagonal[k] ? std::pow(10.0, -3.0 + 5.0 * unit(rng)) : 0.2 * (2.0 * unit(rng) - 1.0);
    return g;
  };

  std::vector<VectorXd> population;
  for (const VectorXd& g : initial)
    if (static_cast<int>(population.size()) < pop && g.size() == ng) population.push_back(g);
  while (static_cast<int>(population.size()) < pop) population.push_back(random_individual());

  const int threads = opt.threads > 0 ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  GaResult result;
  std::vector<LqrEvaluation> evals(pop);
  auto evaluate_all = [&](int from) {
    std::vector<std::thread> pool;
    const int workers = std::min(threads, pop - from);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w]() {
        for (int i = from + w; i < pop; i += workers) evals[i] = evaluate_weights(form, decode(population[i], n, m), opt.simulation);
      });
    for (auto& t : pool) t.join();
    for (int i = from; i < pop; ++i) {
      ++result.evaluations;
      if (!evals[i].feasible) ++result.infeasible_evaluations;
    }
  };
  evaluate_all(0);

  double best_seen = kInf;
  int stall = 0;
  for (int gen = 0; gen < opt.max_generations; ++gen) {
    std::vector<int> order(pop);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return evals[a].fitness < evals[b].fitness; });

    GaGeneration rec;
    rec.generation = gen;
    rec.best_fitness = evals[order[0]].fitness;
    double sum = 0.0;
    int feasible = 0;
    for (const auto& e : evals)
      if (e.feasible) {
        sum += e.fitness;
        ++feasible;
      } else {
        ++rec.infeasible;
      }
    rec.mean_feasible_fitness = feasible ? sum / feasible : kInf;
    result.history.push_back(rec);
    result.generations = gen + 1;

    if (std::isfinite(rec.best_fitness) && best_seen - rec.best_fitness <= opt.stall_tolerance * std::abs(rec.best_fitness)) {
      if (++stall >= opt.stall_generations) {
        result.stalled = true;
        break;
      }
    } else {
      stall = 0;
    }
    best_seen = std::min(best_seen, rec.best_fitness);
    if (gen + 1 == opt.max_generations) break;

    auto tournament = [&]() {
      int best = static_cast<int>(unit(rng) * pop) % pop;
      for (int k = 1; k < opt.tournament_size; ++k) {
        const int c = static_cast<int>(unit(rng) * pop) % pop;
        if (evals[c].fitness < evals[best].fitness) best = c;
      }
      return best;
    };
    const double scale = opt.mutation_scale * (1.0 - static_cast<double>(gen) / opt.max_generations);
    std::vector<VectorXd> next;
    std::vector<LqrEvaluation> next_evals;
    for (int e = 0; e < elites; ++e) {
      next.push_back(population[order[e]]);
      next_evals.push_back(evals[order[e]]);
    }
    const int children = pop - elites;
    const int crossovers = static_cast<int>(std::lround(opt.crossover_fraction * children));
    for (int c = 0; c < children; ++c) {
      VectorXd child;
      if (c < crossovers) {
        // Scattered crossover: each gene from either parent.
        const VectorXd& a = population[tournament()];
        const VectorXd& b = population[tournament()];
        child = a;
        for (int k = 0; k < ng; ++k)
          if (unit(rng) < 0.5) child[k] = b[k];
      } else {
        // Gaussian mutation relative to the gene magnitude.
        child = population[tournament()];
        for (int k = 0; k < ng; ++k) child[k] += scale * (std::abs(child[k]) + 1e-2) * normal(rng);
      }
      next.push_back(std::move(child));
    }
    population = std::move(next);
    evals.assign(pop, LqrEvaluation{});
    for (int e = 0; e < elites; ++e) evals[e] = next_evals[e];
    evaluate_all(elites);
  }

  int best = 0;
  for (int i = 1; i < pop; ++i)
    if (evals[i].fitness < evals[best].fitness) best = i;
  result.best_weights = decode(population[best], n, m);
  result.best = evals[best];
  return result;
}

}  // namespace lqmp
