#pragma once
// Shared fixtures for the test binaries. Everything here is computed
// independently of the library code it is used to check.

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "lqmp/junctions.hpp"
#include "lqmp/model.hpp"
#include "lqmp/primitive_cache.hpp"

namespace lqmp::fixtures {

// Rest-to-rest double integrator p: p0 -> p1, v: v0 -> v1 on [0, T], J = int u^2.
inline LqProblem double_integrator(double p0 = 0, double v0 = 0, double p1 = 1, double v1 = 0, double T = 1) {
  LqProblem p;
  p.A = MatrixXd::Zero(2, 2);
  p.A(0, 1) = 1;
  p.B = MatrixXd::Zero(2, 1);
  p.B(1, 0) = 1;
  p.Q = MatrixXd::Zero(2, 2);
  p.R = MatrixXd::Identity(1, 1);
  p.N = MatrixXd::Zero(2, 1);
  p.C = MatrixXd::Zero(0, 2);
  p.D = MatrixXd::Zero(0, 1);
  p.e.resize(0);
  p.x0 = Eigen::Vector2d(p0, v0);
  p.xT = Eigen::Vector2d(p1, v1);
  p.T = T;
  return p;
}

// Cubic through the boundary data, fitted by hand: p(t) = a0 + a1 t + a2 t^2 + a3 t^3.
struct Cubic {
  double a0, a1, a2, a3;
  double p(double t) const { return a0 + t * (a1 + t * (a2 + t * a3)); }
  double v(double t) const { return a1 + t * (2 * a2 + 3 * a3 * t); }
  double u(double t) const { return 2 * a2 + 6 * a3 * t; }
  // int_0^T u^2 dt, exact for a linear u.
  double cost(double T) const {
    const double u0 = u(0), u1 = u(T);
    return T * (u0 * u0 + u0 * u1 + u1 * u1) / 3.0;
  }
};

inline Cubic min_energy_cubic(double p0, double v0, double p1, double v1, double T) {
  Eigen::Matrix2d M;
  M << T * T, T * T * T, 2 * T, 3 * T * T;
  const Eigen::Vector2d rhs(p1 - p0 - v0 * T, v1 - v0);
  const Eigen::Vector2d a = M.partialPivLu().solve(rhs);
  return {p0, v0, a[0], a[1]};
}

// Random instance family used for oracle comparisons: n = 2 + seed % 4,
// m = 1 + seed % 2, c = 1 + seed % 3 state-only rows. Row 0 cuts into the
// unconstrained solution, the others sit above its range.
inline LqProblem random_instance(int seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N01;
  const int n = 2 + seed % 4, c = 1 + seed % 3;
  int m = 1 + seed % 2;
  if (m > n) m = 1;
  auto draw = [&](int r, int k, double scale) { return MatrixXd(MatrixXd::NullaryExpr(r, k, [&] { return scale * N01(rng); })); };
  LqProblem p;
  p.A = draw(n, n, 0.5);
  p.B = draw(n, m, 1.0);
  const MatrixXd M = draw(n + m, n + m, 1.0);
  const MatrixXd K = M * M.transpose() / (n + m) + 0.1 * MatrixXd::Identity(n + m, n + m);
  p.Q = K.topLeftCorner(n, n);
  p.N = K.topRightCorner(n, m);
  p.R = K.bottomRightCorner(m, m);
  p.x0 = draw(n, 1, 1.0);
  p.xT = draw(n, 1, 1.0);
  p.T = 3;
  p.C = MatrixXd::Zero(0, n);
  p.D = MatrixXd::Zero(0, m);
  p.e.resize(0);

  auto free_form = std::make_shared<BrunovskyForm>(to_brunovsky(p));
  PrimitiveLibrary free_lib(free_form);
  const Trajectory free = solve_unconstrained(free_lib);

  const MatrixXd C = draw(c, n, 1.0);
  VectorXd e(c);
  for (int r = 0; r < c; ++r) {
    double lo = 1e300, hi = -1e300;
    for (int k = 0; k <= 400; ++k) {
      const double v = C.row(r).dot(evaluate(free, p.T * k / 400).x);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double ends = std::max(C.row(r).dot(p.x0), C.row(r).dot(p.xT));
    e[r] = r == 0 ? std::max(ends + 0.02 * (hi - lo), hi - 0.15 * (hi - lo)) : hi + 0.1 * (hi - lo);
  }
  p.C = C;
  p.D = MatrixXd::Zero(c, m);
  p.e = e;
  return p;
}

inline std::shared_ptr<BrunovskyForm> form_of(const LqProblem& p) {
  return std::make_shared<BrunovskyForm>(to_brunovsky(p));
}

}  // namespace lqmp::fixtures
