#include <gtest/gtest.h>

#include <algorithm>
#include <complex>
#include <random>

#include "lqmp/error.hpp"
#include "lqmp/primitive_cache.hpp"
#include "lqmp/primitives.hpp"
#include "lqmp/submersible.hpp"
#include "support.hpp"

using namespace lqmp;

namespace {

const SubmersibleScenario kNominal = submersible_scenario(SubmersibleVariant::kNominal);

BrunovskyForm submersible_form() { return to_brunovsky(build_problem(kNominal)); }

// Real roots of p, from a dense sign scan plus bisection; used to avoid
// trusting the companion matrix on itself.
std::vector<double> real_roots_by_scan(const Poly& p, double lo, double hi) {
  std::vector<double> out;
  const int N = 200000;
  double a = lo, fa = poly_eval(p, a);
  for (int k = 1; k <= N; ++k) {
    const double b = lo + (hi - lo) * k / N, fb = poly_eval(p, b);
    if ((fa > 0) != (fb > 0)) {
      double x0 = a, x1 = b, f0 = fa;
      for (int it = 0; it < 200; ++it) {
        const double xm = 0.5 * (x0 + x1), fm = poly_eval(p, xm);
        if ((fm > 0) == (f0 > 0)) {
          x0 = xm;
          f0 = fm;
        } else {
          x1 = xm;
        }
      }
      out.push_back(0.5 * (x0 + x1));
    }
    a = b;
    fa = fb;
  }
  return out;
}

std::vector<double> real_parts(const SolutionBasis& b) {
  std::vector<double> out;
  for (const auto& c : b.roots)
    for (int k = 0; k < c.multiplicity; ++k) out.push_back(c.value.real());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(DeriveOde, SubmersibleXChain) {
  // Hand expansion of sum (-1)^n d^n [2Kz]_(1,n) with x'' = a_x:
  // -2(c1 bx^2 + k1) y'' + 2 c1 y''''.
  const auto ode = derive_ode(submersible_form(), 0, {});
  Poly expected = Poly::Zero(5);
  expected[2] = -2 * (kNominal.c1 * kNominal.bx * kNominal.bx + kNominal.k1);
  expected[4] = 2 * kNominal.c1;
  ASSERT_EQ(ode.lhs.size(), expected.size());
  EXPECT_LE((ode.lhs - expected).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE(ode.homogeneous());
}

TEST(DeriveOde, SubmersibleYChain) {
  // -2 k2 beta + 2 c2 by^2 beta'' - 2 c2 beta'''' with beta = y''.
  const auto ode = derive_ode(submersible_form(), 1, {});
  Poly expected = Poly::Zero(7);
  expected[2] = -2 * kNominal.k2;
  expected[4] = 2 * kNominal.c2 * kNominal.by * kNominal.by;
  expected[6] = -2 * kNominal.c2;
  ASSERT_EQ(ode.lhs.size(), expected.size());
  EXPECT_LE((ode.lhs - expected).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(DeriveOde, PureEnergyDoubleIntegrator) {
  const auto ode = derive_ode(to_brunovsky(fixtures::double_integrator()), 0, {});
  Poly expected = Poly::Zero(5);
  expected[4] = 2;
  ASSERT_EQ(ode.lhs.size(), expected.size());
  EXPECT_LE((ode.lhs - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CharacteristicRoots, RepeatedZero) {
  const auto basis = characteristic_roots(derive_ode(to_brunovsky(fixtures::double_integrator()), 0, {}));
  EXPECT_EQ(basis.shift, 2);
  ASSERT_EQ(basis.roots.size(), 1u);
  EXPECT_EQ(basis.roots[0].value, std::complex<double>(0, 0));
  EXPECT_EQ(basis.roots[0].multiplicity, 2);
  ASSERT_EQ(basis.modes.size(), 2u);
  EXPECT_EQ(basis.modes[0].power, 0);
  EXPECT_EQ(basis.modes[1].power, 1);
  EXPECT_EQ(basis.modes[0].sigma, 0.0);
}

TEST(CharacteristicRoots, SubmersibleXChain) {
  const auto ode = derive_ode(submersible_form(), 0, {});
  const auto basis = characteristic_roots(ode);
  const double k = std::sqrt(kNominal.bx * kNominal.bx + kNominal.k1 / kNominal.c1);
  EXPECT_NEAR(k, 2.598076, 1e-6);
  const auto roots = real_parts(basis);
  ASSERT_EQ(roots.size(), 2u);
  EXPECT_NEAR(roots[0], -k, 1e-10);
  EXPECT_NEAR(roots[1], k, 1e-10);
  const auto scanned = real_roots_by_scan(basis.characteristic, -10, 10);
  ASSERT_EQ(scanned.size(), 2u);
  EXPECT_NEAR(scanned[1], roots[1], 1e-9);
  EXPECT_LE(basis.max_root_residual, 1e-12);
}

TEST(CharacteristicRoots, SubmersibleYChain) {
  const auto basis = characteristic_roots(derive_ode(submersible_form(), 1, {}));
  // lambda^4 - by^2 lambda^2 + k2/c2 = 0 by the quadratic formula in lambda^2.
  const double b = kNominal.by * kNominal.by, c = kNominal.k2 / kNominal.c2;
  const double big = std::sqrt(0.5 * (b + std::sqrt(b * b - 4 * c)));
  const double small = std::sqrt(0.5 * (b - std::sqrt(b * b - 4 * c)));
  // The quoted values are rounded; 0.12668 is itself off by 2.6e-5.
  EXPECT_NEAR(big, 2.4968, 1e-4);
  EXPECT_NEAR(small, 0.12668, 3e-4 * 0.12668);
  const auto roots = real_parts(basis);
  ASSERT_EQ(roots.size(), 4u);
  EXPECT_NEAR(roots[0], -big, 1e-10);
  EXPECT_NEAR(roots[1], -small, 1e-10);
  EXPECT_NEAR(roots[2], small, 1e-10);
  EXPECT_NEAR(roots[3], big, 1e-10);
  for (double r : roots) EXPECT_NEAR(poly_eval(basis.characteristic, r), 0.0, 1e-9);
}

TEST(Enumerate, SubmersibleSixPrimitives) {
  const auto e = enumerate_primitives(submersible_form());
  std::vector<std::vector<int>> sets;
  for (const auto& p : e.primitives) sets.push_back(p.active_set);
  const std::vector<std::vector<int>> expected = {{}, {0}, {1}, {2}, {0, 2}, {1, 2}};
  EXPECT_EQ(sets, expected);
  EXPECT_EQ(e.pruned.size(), 2u);
}

TEST(Enumerate, NoConstraints) {
  const auto e = enumerate_primitives(to_brunovsky(fixtures::double_integrator()));
  ASSERT_EQ(e.primitives.size(), 1u);
  EXPECT_TRUE(e.primitives[0].active_set.empty());
}

TEST(Enumerate, SingleControlBound) {
  LqProblem p = fixtures::double_integrator();
  p.C = MatrixXd::Zero(1, 2);
  p.D = MatrixXd::Ones(1, 1);
  p.e = VectorXd::Constant(1, 3.0);
  const auto e = enumerate_primitives(to_brunovsky(p));
  EXPECT_EQ(e.primitives.size(), 2u);
  EXPECT_TRUE(e.pruned.empty());
}

TEST(Multipliers, EmptyActiveSet) {
  const BrunovskyForm f = submersible_form();
  const auto map = eliminate_multipliers(make_primitive(f, {}), f);
  EXPECT_EQ(map.Eta.rows(), 0);
}

TEST(Multipliers, ControlBoundStationarity) {
  // On a u = e arc the control stationarity 2(Kz)_a + lambda_top + eta = 0
  // fixes eta; with lambda_top = 0 it is -2(R a + N's).
  LqProblem p = fixtures::double_integrator();
  p.Q = (MatrixXd(2, 2) << 1.0, 0.2, 0.2, 0.5).finished();
  p.N = (MatrixXd(2, 1) << 0.3, -0.4).finished();
  p.R = MatrixXd::Constant(1, 1, 2.0);
  p.C = MatrixXd::Zero(1, 2);
  p.D = MatrixXd::Ones(1, 1);
  p.e = VectorXd::Constant(1, 0.5);
  const BrunovskyForm f = to_brunovsky(p);
  const MotionPrimitive prim = make_primitive(f, {0});
  const auto map = eliminate_multipliers(prim, f);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> N01;
  for (int k = 0; k < 5; ++k) {
    VectorXd w = VectorXd::NullaryExpr(5, [&] { return N01(rng); });
    w[4] = 1.0;
    if (k == 0) w.segment(2, 2).setZero();
    const VectorXd z = prim.ham.Z * w;
    EXPECT_NEAR(z[2], 0.5, 1e-12);
    const double lambda_top = w[3];
    const double kz_a = (f.Kmat * z)[2];
    const double eta = (map.Eta * w)[0];
    EXPECT_NEAR(eta, -(2 * kz_a + lambda_top), 1e-10);
    if (k == 0) {
      const double ns = f.Kmat.block(0, 2, 2, 1).col(0).dot(z.head(2));
      EXPECT_NEAR(eta, -2 * (2.0 * 0.5 + ns), 1e-10);
    }
  }
}

TEST(Primitive, EulerLagrangeOnEveryArcState) {
  const BrunovskyForm f = submersible_form();
  std::mt19937_64 rng(7);
  std::normal_distribution<double> N01;
  for (const auto& prim : enumerate_primitives(f).primitives) {
    EXPECT_LE(validate_primitive(prim, f), 1e-10) << prim.label;
    for (int k = 0; k < 5; ++k) {
      VectorXd w = VectorXd::NullaryExpr(11, [&] { return N01(rng); });
      w[10] = 1.0;
      EXPECT_LE(euler_lagrange_residual(prim, f, w).cwiseAbs().maxCoeff(), 1e-8) << prim.label;
    }
    EXPECT_EQ(poly_degree(prim.characteristic), 10) << prim.label;
    EXPECT_EQ(prim.basis.dimension, 11) << prim.label;
  }
}

TEST(Primitive, FloorArcHoldsControlAtZero) {
  // On the floor arc y = v_y = beta = 0, so u_y = a_y + by beta = a_y = 0.
  const BrunovskyForm f = submersible_form();
  const MotionPrimitive prim = make_primitive(f, {0});
  std::mt19937_64 rng(9);
  std::normal_distribution<double> N01;
  VectorXd w = VectorXd::NullaryExpr(11, [&] { return N01(rng); });
  w[10] = 1.0;
  const VectorXd z = prim.ham.Z * w;
  EXPECT_NEAR(z[6], 0.0, 1e-12);
}

TEST(Primitive, DependentSetRejected) {
  const BrunovskyForm f = submersible_form();
  EXPECT_THROW(make_primitive(f, {0, 1}), Error);
}

TEST(PrimitiveCache, RoundTrip) {
  auto form = std::make_shared<BrunovskyForm>(submersible_form());
  PrimitiveLibrary lib(form);
  lib.get({});
  lib.get({0});
  lib.get({1, 2});
  const std::string path = "cache_roundtrip.json";
  lib.save(path);
  PrimitiveLibrary other(form);
  EXPECT_EQ(other.load(path), 3);
  EXPECT_TRUE(other.contains({0}));
  EXPECT_LE((other.get({0})->ham.M - lib.get({0})->ham.M).cwiseAbs().maxCoeff(), 1e-12);

  auto shifted = std::make_shared<BrunovskyForm>(*form);
  shifted->Kmat(1, 1) += 1.0;
  PrimitiveLibrary wrong(shifted);
  try {
    wrong.load(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCacheMismatch);
  }
}
