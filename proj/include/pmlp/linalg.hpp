#pragma once

#include <cmath>
#include <span>

#include "pmlp/matrix.hpp"

namespace pmlp {

/// Ridge specification for solve_spd. `automatic()` resolves to
/// 1e-8 * trace(K) / n at solve time.
struct Ridge {
  double value = 0.0;
  bool automatic_scale = false;

  static Ridge fixed(double v) { return {v, false}; }
  static Ridge automatic() { return {0.0, true}; }

  double resolve(const DenseMatrix& k) const {
    if (!automatic_scale) return value;
    const auto n = static_cast<double>(k.rows());
    return n > 0 ? 1e-8 * trace(k) / n : 0.0;
  }
};

/// Lower-triangular Cholesky factor L with K = L L^T.
class Cholesky {
 public:
  // Throws FactorizationError with the failing row on a non-positive pivot.
  explicit Cholesky(const DenseMatrix& k) : l_(k.rows(), k.rows()) {
    require(k.rows() == k.cols(), ErrorKind::DimensionError, "Cholesky needs a square matrix");
    const std::size_t n = k.rows();
    for (std::size_t j = 0; j < n; ++j) {
      double d = k(j, j);
      for (std::size_t p = 0; p < j; ++p) d -= l_(j, p) * l_(j, p);
      if (!(d > 0.0) || !std::isfinite(d)) throw FactorizationError(j, d);
      const double ljj = std::sqrt(d);
      l_(j, j) = ljj;
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = k(i, j);
        const auto li = l_.row(i);
        const auto lj = l_.row(j);
        for (std::size_t p = 0; p < j; ++p) s -= li[p] * lj[p];
        l_(i, j) = s / ljj;
      }
    }
  }

  const DenseMatrix& factor() const noexcept { return l_; }

  Vector solve(std::span<const double> b) const {
    const std::size_t n = l_.rows();
    require(b.size() == n, ErrorKind::DimensionError, "Cholesky::solve size mismatch");
    Vector z(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
      double s = z[i];
      for (std::size_t p = 0; p < i; ++p) s -= l_(i, p) * z[p];
      z[i] = s / l_(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = z[i];
      for (std::size_t p = i + 1; p < n; ++p) s -= l_(p, i) * z[p];
      z[i] = s / l_(i, i);
    }
    return z;
  }

 private:
  DenseMatrix l_;
};

inline DenseMatrix with_ridge(const DenseMatrix& k, double ridge) {
  DenseMatrix a = k;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += ridge;
  return a;
}

/// Solves (K + ridge I) x = y for symmetric K. One step of iterative
/// refinement is applied, which matters for near-singular kernel matrices.
inline Vector solve_spd(const DenseMatrix& k, std::span<const double> y, Ridge ridge = Ridge::fixed(0.0)) {
  require(k.rows() == k.cols(), ErrorKind::DimensionError, "solve_spd needs a square matrix");
  require(k.rows() == y.size(), ErrorKind::DimensionError, "solve_spd rhs size mismatch");
  const double scale = std::max(1.0, max_abs(k.data()));
  require(is_symmetric(k, 1e-8 * scale), ErrorKind::DimensionError, "solve_spd needs a symmetric matrix");
  const double r = ridge.resolve(k);
  require(r >= 0.0, ErrorKind::DimensionError, "negative ridge");

  const DenseMatrix a = with_ridge(k, r);
  const Cholesky chol(a);
  Vector x = chol.solve(y);
  Vector res = matvec(a, x);
  for (std::size_t i = 0; i < res.size(); ++i) res[i] = y[i] - res[i];
  const Vector dx = chol.solve(res);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
  return x;
}

inline double spd_residual(const DenseMatrix& k, std::span<const double> x, std::span<const double> y,
                           double ridge) {
  const Vector ax = matvec(with_ridge(k, ridge), x);
  double m = 0.0;
  for (std::size_t i = 0; i < ax.size(); ++i) m = std::max(m, std::abs(ax[i] - y[i]));
  return m;
}

}  // namespace pmlp
