#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "pmlp/pmlp.hpp"

namespace pmlp::testing {

// Erdos-Renyi graph; every pair independently with probability p.
inline Graph random_graph(std::size_t n, double p, Rng& rng) {
  std::vector<std::pair<std::int64_t, std::int64_t>> e;
  for (std::size_t u = 0; u < n; ++u)
    for (std::size_t v = u + 1; v < n; ++v)
      if (rng.uniform() < p) e.emplace_back(u, v);
  return build_graph(n, e);
}

inline DenseMatrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double scale = 1.0) {
  DenseMatrix m(r, c);
  for (double& v : m.data()) v = scale * rng.normal();
  return m;
}

inline DenseMatrix dense_adjacency(const Graph& g) {
  DenseMatrix a(g.num_nodes(), g.num_nodes());
  for (const auto& [u, v] : g.edges()) a(u, v) = a(v, u) = 1.0;
  return a;
}

// Dense brute-force operators straight from the matrix formulas.
inline DenseMatrix dense_rw(const Graph& g) {
  DenseMatrix a = dense_adjacency(g);
  const std::size_t n = g.num_nodes();
  for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += a(i, j);
    for (std::size_t j = 0; j < n; ++j) a(i, j) /= d;
  }
  return a;
}

inline DenseMatrix dense_sym(const Graph& g, bool self_loops) {
  DenseMatrix a = dense_adjacency(g);
  const std::size_t n = g.num_nodes();
  if (self_loops)
    for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  std::vector<double> d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d[i] += a(i, j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      a(i, j) = (d[i] > 0 && d[j] > 0) ? a(i, j) / std::sqrt(d[i] * d[j]) : 0.0;
  return a;
}

// sum_{k<=K} e^{-1}/k! P^k, rows renormalized.
inline DenseMatrix dense_diffusion(const Graph& g, std::size_t order) {
  const DenseMatrix p = dense_rw(g);
  const std::size_t n = g.num_nodes();
  DenseMatrix acc(n, n), pk = DenseMatrix::identity(n);
  double coef = std::exp(-1.0);
  for (std::size_t k = 0; k <= order; ++k) {
    if (k > 0) {
      pk = matmul(pk, p);
      coef /= static_cast<double>(k);
    }
    acc.axpy(coef, pk);
  }
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += acc(i, j);
    for (std::size_t j = 0; j < n; ++j) acc(i, j) /= s;
  }
  return acc;
}

inline std::vector<NodeId> iota_ids(std::size_t n) {
  std::vector<NodeId> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<NodeId>(i);
  return ids;
}

// Cyclic Jacobi rotations, independent of the Cholesky path in the library.
inline double min_eigenvalue(DenseMatrix a) {
  const std::size_t n = a.rows();
  if (n == 0) return 0.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a(i, i) * a(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
    }
    if (off <= 1e-30 * diag || off == 0.0) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (a(p, q) == 0.0) continue;
        const double tau = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  double lo = a(0, 0);
  for (std::size_t i = 1; i < n; ++i) lo = std::min(lo, a(i, i));
  return lo;
}

// KernelMatrix invariant: smallest eigenvalue >= -1e-8 trace/m.
inline bool eigen_psd(const DenseMatrix& k, double rel = 1e-8) {
  if (k.rows() == 0) return true;
  double tr = 0.0;
  for (std::size_t i = 0; i < k.rows(); ++i) tr += k(i, i);
  return min_eigenvalue(k) >= -rel * tr / static_cast<double>(k.rows());
}

}  // namespace pmlp::testing
