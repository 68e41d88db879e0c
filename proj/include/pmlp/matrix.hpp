#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <iomanip>
#include <iostream>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#ifdef PMLP_USE_CBLAS
#include <cblas.h>
#endif

#include "pmlp/error.hpp"
#include "pmlp/rng.hpp"

namespace pmlp {

using Vector = std::vector<double>;

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  DenseMatrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ ? init.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : init) {
      require(r.size() == cols_, ErrorKind::DimensionError, "ragged initializer");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }

  bool same_shape(const DenseMatrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

  DenseMatrix& operator+=(const DenseMatrix& o) {
    check_shape(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  DenseMatrix& operator-=(const DenseMatrix& o) {
    check_shape(o, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  DenseMatrix& operator*=(double s) {
    for (auto& v : data_) v *= s;
    return *this;
  }

  // this += s * o
  void axpy(double s, const DenseMatrix& o) {
    check_shape(o, "axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * o.data_[i];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

 private:
  void check_shape(const DenseMatrix& o, const char* op) const {
    require(same_shape(o), ErrorKind::DimensionError,
            std::string("shape mismatch in ") + op + ": " + std::to_string(rows_) + "x" +
                std::to_string(cols_) + " vs " + std::to_string(o.rows_) + "x" + std::to_string(o.cols_));
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline DenseMatrix operator+(DenseMatrix a, const DenseMatrix& b) { return a += b; }
inline DenseMatrix operator-(DenseMatrix a, const DenseMatrix& b) { return a -= b; }
inline DenseMatrix operator*(double s, DenseMatrix a) { return a *= s; }

#ifdef PMLP_USE_CBLAS
namespace detail {

// Some OpenBLAS builds pick a dgemm kernel that returns wrong results on
// newer CPUs (0.3.20 on AVX-512 parts, for outputs with >= 256 columns).
// Checked once against plain loops; on a mismatch every product falls back
// to the loops and a single warning goes to stderr.
inline bool cblas_verified() {
  static const bool ok = [] {
    const int shapes[][3] = {{256, 256, 256}, {32, 16, 300}, {300, 64, 8}};
    for (const auto& sh : shapes) {
      const int m = sh[0], k = sh[1], n = sh[2];
      std::vector<double> a(static_cast<std::size_t>(m) * k), b(static_cast<std::size_t>(k) * n);
      std::vector<double> c(static_cast<std::size_t>(m) * n, 0.0);
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::sin(0.37 * static_cast<double>(i) + 0.1);
      for (std::size_t i = 0; i < b.size(); ++i) b[i] = std::cos(0.53 * static_cast<double>(i) + 0.2);
      cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, m, n, k, 1.0, a.data(), k, b.data(), n, 0.0, c.data(), n);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double ref = 0.0;
          for (int p = 0; p < k; ++p) ref += a[static_cast<std::size_t>(i) * k + p] * b[static_cast<std::size_t>(p) * n + j];
          if (!(std::abs(ref - c[static_cast<std::size_t>(i) * n + j]) <= 1e-9 * k)) {
            std::cerr << "pmlp: warning: CBLAS dgemm failed its self-check (" << m << "x" << k << "x" << n
                      << "); using built-in loops. OPENBLAS_CORETYPE=Haswell usually avoids this.\n";
            return false;
          }
        }
    }
    return true;
  }();
  return ok;
}

}  // namespace detail
#endif

// True when dense products go through CBLAS (compiled in and self-checked).
inline bool blas_in_use() {
#ifdef PMLP_USE_CBLAS
  return detail::cblas_verified();
#else
  return false;
#endif
}

// C = A * B
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), ErrorKind::DimensionError,
          "matmul " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
              std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  DenseMatrix c(a.rows(), b.cols());
#ifdef PMLP_USE_CBLAS
  if (!c.empty() && a.cols() > 0 && detail::cblas_verified()) {
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(a.rows()), static_cast<int>(b.cols()),
                static_cast<int>(a.cols()), 1.0, a.data().data(), static_cast<int>(a.cols()), b.data().data(),
                static_cast<int>(b.cols()), 0.0, c.data().data(), static_cast<int>(c.cols()));
    return c;
  }
#endif
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* ci = c.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* bk = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

// C = A^T * B
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows(), ErrorKind::DimensionError, "matmul_tn row mismatch");
  DenseMatrix c(a.cols(), b.cols());
#ifdef PMLP_USE_CBLAS
  if (!c.empty() && a.rows() > 0 && detail::cblas_verified()) {
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(a.cols()), static_cast<int>(b.cols()),
                static_cast<int>(a.rows()), 1.0, a.data().data(), static_cast<int>(a.cols()), b.data().data(),
                static_cast<int>(b.cols()), 0.0, c.data().data(), static_cast<int>(c.cols()));
    return c;
  }
#endif
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* bk = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* ci = c.row(i).data();
      for (std::size_t j = 0; j < n; ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

// C = A * B^T
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.cols(), ErrorKind::DimensionError, "matmul_nt col mismatch");
  DenseMatrix c(a.rows(), b.rows());
#ifdef PMLP_USE_CBLAS
  if (!c.empty() && a.cols() > 0 && detail::cblas_verified()) {
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(a.rows()), static_cast<int>(b.rows()),
                static_cast<int>(a.cols()), 1.0, a.data().data(), static_cast<int>(a.cols()), b.data().data(),
                static_cast<int>(b.cols()), 0.0, c.data().data(), static_cast<int>(c.cols()));
    return c;
  }
#endif
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto bj = b.row(j);
      double s = 0.0;
      for (std::size_t k = 0; k < ai.size(); ++k) s += ai[k] * bj[k];
      c(i, j) = s;
    }
  }
  return c;
}

inline Vector matvec(const DenseMatrix& a, std::span<const double> x) {
  require(a.cols() == x.size(), ErrorKind::DimensionError, "matvec size mismatch");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto ai = a.row(i);
    double s = 0.0;
    for (std::size_t k = 0; k < ai.size(); ++k) s += ai[k] * x[k];
    y[i] = s;
  }
  return y;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::DimensionError, "dot size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.same_shape(b), ErrorKind::DimensionError, "max_abs_diff shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

inline double trace(const DenseMatrix& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

inline double squared_norm(const DenseMatrix& a) {
  double s = 0.0;
  for (double v : a.data()) s += v * v;
  return s;
}

inline bool is_symmetric(const DenseMatrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

/// Xavier/Glorot uniform initialization: entries i.i.d. on [-a, a] with
/// a = sqrt(6 / (fan_in + fan_out)). Returned shape is fan_in x fan_out.
inline DenseMatrix xavier_init(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  require(fan_in >= 1 && fan_out >= 1, ErrorKind::DimensionError, "xavier_init needs positive fans");
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  DenseMatrix w(fan_in, fan_out);
  for (auto& v : w.data()) v = rng.uniform(-a, a);
  return w;
}

// Text format: "rows cols" header, then row-major values. 17 significant
// digits so that write -> read is exact.
inline void write_matrix(std::ostream& os, const DenseMatrix& m) {
  const auto old_prec = os.precision(std::numeric_limits<double>::max_digits10);
  os << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) {
      if (c) os << ' ';
      os << m(r, c);
    }
    os << '\n';
  }
  os.precision(old_prec);
}

inline DenseMatrix read_matrix(std::istream& is) {
  long long rows = -1, cols = -1;
  if (!(is >> rows >> cols) || rows < 0 || cols < 0) fail(ErrorKind::ParseError, "bad matrix header");
  DenseMatrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (auto& v : m.data()) {
    if (!(is >> v)) fail(ErrorKind::ParseError, "truncated matrix body");
    if (!std::isfinite(v)) fail(ErrorKind::ParseError, "non-finite matrix entry");
  }
  return m;
}

}  // namespace pmlp
