#pragma once

#include <cmath>
#include <utility>

namespace lqmp {

namespace detail {

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
inline constexpr double kKronrodNodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <typename F>
std::pair<double, double> kronrod15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kKronrodNodes[i];
    const double sum = f(c - dx) + f(c + dx);
    kronrod += kKronrodWeights[i] * sum;
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * sum;
  }
  return {kronrod * h, std::abs((kronrod - gauss) * h)};
}

template <typename F>
double adaptive(F& f, double a, double b, double tol, int depth, double whole) {
  const auto [value, error] = kronrod15(f, a, b);
  if (error <= tol || depth <= 0 || std::abs(b - a) <= 1e-12 * std::abs(whole)) return value;
  const double mid = 0.5 * (a + b);
  return adaptive(f, a, mid, 0.5 * tol, depth - 1, whole) + adaptive(f, mid, b, 0.5 * tol, depth - 1, whole);
}

}  // namespace detail

/// Adaptive Gauss-Kronrod (7-15) quadrature of f over [a, b] to the given
/// absolute tolerance, bisecting where the embedded error estimate is too
/// large.
template <typename F>
double integrate(F f, double a, double b, double abs_tol, int max_depth = 40) {
  if (b == a) return 0.0;
  return detail::adaptive(f, a, b, abs_tol, max_depth, b - a);
}

}  // namespace lqmp
