#pragma once

// Dense polynomial helpers. Coefficients are stored in ascending order,
// p(s) = c[0] + c[1] s + ... + c[d] s^d, matching the d^0..d^k ordering used
// for differential operators throughout the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <vector>

#include <Eigen/Dense>

namespace lqmp {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Polynomial = VectorX<Scalar>;

template <typename Scalar, typename Arg>
auto poly_eval(const Polynomial<Scalar>& p, const Arg& x) {
  using Result = decltype(Scalar() * x);
  Result acc = Result(0);
  for (Eigen::Index k = p.size() - 1; k >= 0; --k) acc = acc * x + p[k];
  return acc;
}

/// Coefficients of d^order p / ds^order.
template <typename Scalar>
Polynomial<Scalar> poly_derivative(const Polynomial<Scalar>& p, int order = 1) {
  if (order <= 0) return p;
  if (p.size() <= order) return Polynomial<Scalar>::Zero(1);
  Polynomial<Scalar> out(p.size() - order);
  for (Eigen::Index k = 0; k < out.size(); ++k) {
    Scalar factor = Scalar(1);
    for (int j = 0; j < order; ++j) factor *= Scalar(k + order - j);
    out[k] = factor * p[k + order];
  }
  return out;
}

template <typename Scalar>
Polynomial<Scalar> poly_mul(const Polynomial<Scalar>& a, const Polynomial<Scalar>& b) {
  Polynomial<Scalar> out = Polynomial<Scalar>::Zero(a.size() + b.size() - 1);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] == Scalar(0)) continue;
    for (Eigen::Index j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  }
  return out;
}

template <typename Scalar>
Polynomial<Scalar> poly_add(const Polynomial<Scalar>& a, const Polynomial<Scalar>& b,
                            Scalar b_scale = Scalar(1)) {
  Polynomial<Scalar> out = Polynomial<Scalar>::Zero(std::max(a.size(), b.size()));
  out.head(a.size()) += a;
  out.head(b.size()) += b_scale * b;
  return out;
}

/// Drops exactly-zero leading coefficients; the zero polynomial keeps one entry.
template <typename Scalar>
Polynomial<Scalar> poly_trim(const Polynomial<Scalar>& p) {
  Eigen::Index d = p.size() - 1;
  while (d > 0 && p[d] == Scalar(0)) --d;
  return p.head(std::max<Eigen::Index>(d + 1, 1));
}

template <typename Scalar>
int poly_degree(const Polynomial<Scalar>& p) {
  for (Eigen::Index d = p.size() - 1; d >= 0; --d)
    if (p[d] != Scalar(0)) return static_cast<int>(d);
  return -1;
}

/// p(-s): flips the sign of odd coefficients.
template <typename Scalar>
Polynomial<Scalar> poly_reflect(const Polynomial<Scalar>& p) {
  Polynomial<Scalar> out = p;
  for (Eigen::Index k = 1; k < out.size(); k += 2) out[k] = -out[k];
  return out;
}

/// Parlett-Reinsch style balancing by powers of two, in place.
template <typename Scalar>
void balance_companion(MatrixX<Scalar>& c) {
  const Eigen::Index n = c.rows();
  bool changed = true;
  int sweeps = 0;
  while (changed && sweeps++ < 100) {
    changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar row = c.row(i).template lpNorm<1>() - std::abs(c(i, i));
      const Scalar col = c.col(i).template lpNorm<1>() - std::abs(c(i, i));
      if (row == Scalar(0) || col == Scalar(0)) continue;
      int exponent = 0;
      std::frexp(row / col, &exponent);
      exponent /= 2;
      if (exponent == 0) continue;
      const Scalar scaled_col = std::ldexp(col, exponent);
      const Scalar scaled_row = std::ldexp(row, -exponent);
      if (scaled_col + scaled_row < Scalar(0.95) * (col + row)) {
        changed = true;
        c.row(i) *= std::ldexp(Scalar(1), -exponent);
        c.col(i) *= std::ldexp(Scalar(1), exponent);
      }
    }
  }
}

/// Roots of p (degree >= 1 after trimming) as eigenvalues of the balanced
/// companion matrix.
template <typename Scalar>
std::vector<std::complex<Scalar>> companion_roots(const Polynomial<Scalar>& p_in) {
  const Polynomial<Scalar> p = poly_trim(p_in);
  const Eigen::Index degree = p.size() - 1;
  std::vector<std::complex<Scalar>> roots;
  if (degree < 1) return roots;
  if (degree == 1) {
    roots.emplace_back(-p[0] / p[1], Scalar(0));
    return roots;
  }
  MatrixX<Scalar> c = MatrixX<Scalar>::Zero(degree, degree);
  c.diagonal(-1).setOnes();
  c.col(degree - 1) = -p.head(degree) / p[degree];
  balance_companion(c);
  Eigen::EigenSolver<MatrixX<Scalar>> solver(c, false);
  const auto& ev = solver.eigenvalues();
  roots.reserve(degree);
  for (Eigen::Index i = 0; i < ev.size(); ++i) roots.push_back(ev[i]);
  return roots;
}

template <typename Scalar>
struct RootCluster {
  std::complex<Scalar> value;
  int multiplicity = 1;
};

/// Number of trailing (low-order) coefficients treated as zero, i.e. the
/// multiplicity of the root s = 0. Coefficients below `rel_tol` times the
/// largest higher-order coefficient count as zero.
template <typename Scalar>
int zero_root_multiplicity(const Polynomial<Scalar>& p, Scalar rel_tol = Scalar(1e-13)) {
  const int degree = poly_degree(p);
  int k = 0;
  while (k < degree) {
    const Scalar higher = p.tail(p.size() - k - 1).cwiseAbs().maxCoeff();
    if (std::abs(p[k]) > rel_tol * higher) break;
    ++k;
  }
  return k;
}

/// Roots of p grouped into clusters of (numerically) repeated roots. Roots
/// closer than `rel_tol * max(1, |r|)` are merged and replaced by their mean;
/// zero roots are detected from the coefficients directly so their
/// multiplicity is exact. Conjugate pairs are both reported.
template <typename Scalar>
std::vector<RootCluster<Scalar>> root_clusters(const Polynomial<Scalar>& p_in,
                                               Scalar rel_tol = Scalar(1e-7)) {
  const Polynomial<Scalar> p = poly_trim(p_in);
  std::vector<RootCluster<Scalar>> clusters;
  const int degree = poly_degree(p);
  if (degree < 1) return clusters;
  const int zeros = zero_root_multiplicity(p);
  if (zeros > 0) clusters.push_back({std::complex<Scalar>(0, 0), zeros});
  const Polynomial<Scalar> deflated = p.tail(p.size() - zeros);
  auto roots = companion_roots(deflated);
  std::vector<bool> used(roots.size(), false);
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    std::complex<Scalar> sum = roots[i];
    int count = 1;
    used[i] = true;
    const Scalar scale = std::max(Scalar(1), std::abs(roots[i]));
    for (std::size_t j = i + 1; j < roots.size(); ++j) {
      if (!used[j] && std::abs(roots[j] - roots[i]) <= rel_tol * scale) {
        used[j] = true;
        sum += roots[j];
        ++count;
      }
    }
    clusters.push_back({sum / Scalar(count), count});
  }
  for (auto& c : clusters) {
    // Snap tiny imaginary parts produced by the eigen-solver onto the real axis.
    if (std::abs(c.value.imag()) <= rel_tol * std::max(Scalar(1), std::abs(c.value)))
      c.value = std::complex<Scalar>(c.value.real(), Scalar(0));
  }
  std::sort(clusters.begin(), clusters.end(), [](const auto& a, const auto& b) {
    if (a.value.real() != b.value.real()) return a.value.real() < b.value.real();
    return a.value.imag() < b.value.imag();
  });
  return clusters;
}

/// Backward error |p(r)| / sum |c_k| |r|^k, used to certify computed roots.
template <typename Scalar>
Scalar root_residual(const Polynomial<Scalar>& p, std::complex<Scalar> r) {
  Scalar denom = Scalar(0);
  Scalar mag = Scalar(1);
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    denom += std::abs(p[k]) * mag;
    mag *= std::abs(r);
  }
  if (denom == Scalar(0)) return Scalar(0);
  return std::abs(poly_eval(p, r)) / denom;
}

/// Square matrix of polynomials, row-major.
template <typename Scalar>
class PolynomialMatrix {
 public:
  PolynomialMatrix() = default;
  explicit PolynomialMatrix(int size)
      : size_(size), entries_(static_cast<std::size_t>(size) * size, Polynomial<Scalar>::Zero(1)) {}

  int size() const { return size_; }
  Polynomial<Scalar>& operator()(int r, int c) { return entries_[r * size_ + c]; }
  const Polynomial<Scalar>& operator()(int r, int c) const { return entries_[r * size_ + c]; }

  int max_degree() const {
    int d = 0;
    for (const auto& e : entries_) d = std::max(d, poly_degree(e));
    return d;
  }

  /// Matrix of the `order`-th derivative evaluated at x, divided by order!.
  template <typename Arg>
  MatrixX<decltype(Scalar() * Arg())> taylor_coefficient(const Arg& x, int order) const {
    using Result = decltype(Scalar() * Arg());
    MatrixX<Result> out(size_, size_);
    Scalar factorial = Scalar(1);
    for (int k = 2; k <= order; ++k) factorial *= Scalar(k);
    for (int r = 0; r < size_; ++r)
      for (int c = 0; c < size_; ++c)
        out(r, c) = poly_eval(poly_derivative((*this)(r, c), order), x) / factorial;
    return out;
  }

  /// Determinant by Laplace expansion memoised over column subsets, which is
  /// exact in the sense that structurally zero coefficients stay exactly zero.
  Polynomial<Scalar> determinant() const {
    if (size_ == 0) return Polynomial<Scalar>::Ones(1);
    // minors[mask] = det of rows [0, popcount(mask)) restricted to columns in mask.
    std::map<unsigned, Polynomial<Scalar>> minors;
    minors[0u] = Polynomial<Scalar>::Ones(1);
    for (int row = 0; row < size_; ++row) {
      std::map<unsigned, Polynomial<Scalar>> next;
      for (const auto& [mask, minor] : minors) {
        if (poly_degree(minor) < 0) continue;
        for (int col = 0; col < size_; ++col) {
          if (mask & (1u << col)) continue;
          const auto& entry = (*this)(row, col);
          if (poly_degree(entry) < 0) continue;
          // Sign: number of chosen columns greater than col.
          int above = 0;
          for (int k = col + 1; k < size_; ++k)
            if (mask & (1u << k)) ++above;
          const Scalar sign = (above % 2 == 0) ? Scalar(1) : Scalar(-1);
          const unsigned key = mask | (1u << col);
          Polynomial<Scalar> term = poly_mul(entry, minor);
          auto it = next.find(key);
          if (it == next.end())
            next.emplace(key, sign * term);
          else
            it->second = poly_add(it->second, term, sign);
        }
      }
      minors = std::move(next);
    }
    const unsigned full = (size_ >= 32) ? ~0u : ((1u << size_) - 1u);
    auto it = minors.find(full);
    if (it == minors.end()) return Polynomial<Scalar>::Zero(1);
    return poly_trim(it->second);
  }

 private:
  int size_ = 0;
  std::vector<Polynomial<Scalar>> entries_;
};

}  // namespace lqmp
