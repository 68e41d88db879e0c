#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "pmlp/graph.hpp"
#include "pmlp/matrix.hpp"

namespace pmlp {

enum class Scheme { Sym, NoLoop, Rw, Diff };

inline const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::Sym: return "SYM";
    case Scheme::NoLoop: return "NO_LOOP";
    case Scheme::Rw: return "RW";
    case Scheme::Diff: return "DIFF";
  }
  return "?";
}

inline Scheme parse_scheme(const std::string& s) {
  if (s == "SYM" || s == "sym") return Scheme::Sym;
  if (s == "NO_LOOP" || s == "no_loop" || s == "noloop") return Scheme::NoLoop;
  if (s == "RW" || s == "rw") return Scheme::Rw;
  if (s == "DIFF" || s == "diff") return Scheme::Diff;
  fail(ErrorKind::ParseError, "unknown scheme '" + s + "'");
}

inline constexpr std::size_t kDefaultDiffusionOrder = 10;

/// Sparse row operator for one message-passing step. The transpose is stored
/// alongside for reverse-mode gradients.
class TransitionMatrix {
 public:
  struct Entry {
    NodeId col;
    double weight;
  };

  Scheme scheme() const noexcept { return scheme_; }
  std::size_t diffusion_order() const noexcept { return order_; }
  std::size_t size() const noexcept { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t nnz() const noexcept { return entries_.size(); }

  std::span<const Entry> row(NodeId u) const {
    return {entries_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
  }

  double weight(NodeId u, NodeId v) const {
    for (const auto& e : row(u))
      if (e.col == v) return e.weight;
    return 0.0;
  }

  // Nodes whose row is identically zero (isolated nodes under NO_LOOP).
  const std::vector<NodeId>& zero_rows() const noexcept { return zero_rows_; }
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }

  DenseMatrix to_dense() const {
    DenseMatrix d(size(), size());
    for (NodeId u = 0; u < size(); ++u)
      for (const auto& e : row(u)) d(u, e.col) += e.weight;
    return d;
  }

  // out = P * H
  DenseMatrix apply(const DenseMatrix& h) const { return apply_impl(h, offsets_, entries_); }
  // out = P^T * H
  DenseMatrix apply_transpose(const DenseMatrix& h) const { return apply_impl(h, t_offsets_, t_entries_); }

  static TransitionMatrix from_rows(Scheme scheme, std::size_t order, std::vector<std::vector<Entry>> rows,
                                    std::vector<NodeId> zero_rows = {}, std::vector<std::string> warnings = {}) {
    TransitionMatrix t;
    t.scheme_ = scheme;
    t.order_ = order;
    t.zero_rows_ = std::move(zero_rows);
    t.warnings_ = std::move(warnings);
    const std::size_t n = rows.size();
    t.offsets_.assign(n + 1, 0);
    for (std::size_t u = 0; u < n; ++u) t.offsets_[u + 1] = t.offsets_[u] + rows[u].size();
    t.entries_.reserve(t.offsets_[n]);
    std::vector<std::size_t> tcount(n + 1, 0);
    for (auto& r : rows) {
      std::sort(r.begin(), r.end(), [](const Entry& a, const Entry& b) { return a.col < b.col; });
      for (const auto& e : r) {
        t.entries_.push_back(e);
        ++tcount[e.col + 1];
      }
    }
    t.t_offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) t.t_offsets_[i + 1] = t.t_offsets_[i] + tcount[i + 1];
    t.t_entries_.resize(t.entries_.size());
    std::vector<std::size_t> pos(t.t_offsets_.begin(), t.t_offsets_.end() - 1);
    for (NodeId u = 0; u < n; ++u)
      for (std::size_t k = t.offsets_[u]; k < t.offsets_[u + 1]; ++k) {
        const auto& e = t.entries_[k];
        t.t_entries_[pos[e.col]++] = Entry{u, e.weight};
      }
    return t;
  }

 private:
  static DenseMatrix apply_impl(const DenseMatrix& h, const std::vector<std::size_t>& offsets,
                                const std::vector<Entry>& entries) {
    const std::size_t n = offsets.size() - 1;
    require(h.rows() == n, ErrorKind::DimensionError,
            "propagate: H has " + std::to_string(h.rows()) + " rows, operator has " + std::to_string(n));
    const std::size_t d = h.cols();
    DenseMatrix out(n, d);
    for (std::size_t u = 0; u < n; ++u) {
      double* o = out.row(u).data();
      for (std::size_t k = offsets[u]; k < offsets[u + 1]; ++k) {
        const double w = entries[k].weight;
        const double* src = h.row(entries[k].col).data();
        for (std::size_t j = 0; j < d; ++j) o[j] += w * src[j];
      }
    }
    return out;
  }

  Scheme scheme_ = Scheme::Sym;
  std::size_t order_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<Entry> entries_;
  std::vector<std::size_t> t_offsets_{0};
  std::vector<Entry> t_entries_;
  std::vector<NodeId> zero_rows_;
  std::vector<std::string> warnings_;
};

namespace detail {

// Row u of the truncated heat-kernel diffusion sum_{k<=K} e^{-1}/k! P_rw^k,
// renormalized to sum 1.
inline std::vector<TransitionMatrix::Entry> diffusion_row(const TransitionMatrix& rw, NodeId u, std::size_t order,
                                                          std::vector<double>& acc, std::vector<double>& cur,
                                                          std::vector<double>& next, std::vector<NodeId>& touched,
                                                          std::vector<std::uint8_t>& mark) {
  const std::size_t n = rw.size();
  std::vector<NodeId> frontier{u};
  cur[u] = 1.0;
  auto touch = [&](NodeId v) {
    if (!mark[v]) {
      mark[v] = 1;
      touched.push_back(v);
    }
  };
  double coeff = std::exp(-1.0);  // k = 0
  acc[u] += coeff;
  touch(u);
  for (std::size_t k = 1; k <= order; ++k) {
    coeff /= static_cast<double>(k);
    // next = cur * P_rw (row vector times operator)
    std::vector<NodeId> next_frontier;
    for (NodeId v : frontier) {
      const double cv = cur[v];
      for (const auto& e : rw.row(v)) {
        if (next[e.col] == 0.0) next_frontier.push_back(e.col);
        next[e.col] += cv * e.weight;
      }
    }
    for (NodeId v : frontier) cur[v] = 0.0;
    for (NodeId v : next_frontier) {
      cur[v] = next[v];
      next[v] = 0.0;
      acc[v] += coeff * cur[v];
      touch(v);
    }
    frontier = std::move(next_frontier);
  }
  for (NodeId v : frontier) cur[v] = 0.0;
  (void)n;
  std::sort(touched.begin(), touched.end());
  double total = 0.0;
  for (NodeId v : touched) total += acc[v];
  std::vector<TransitionMatrix::Entry> row;
  row.reserve(touched.size());
  for (NodeId v : touched) {
    row.push_back({v, acc[v] / total});
    acc[v] = 0.0;
    mark[v] = 0;
  }
  touched.clear();
  return row;
}

}  // namespace detail

/// Builds the one-step operator for a scheme:
///   SYM      D~^{-1/2} A~ D~^{-1/2}   (A~ = A + I)
///   NO_LOOP  D^{-1/2} A D^{-1/2}      (isolated nodes give a zero row + warning)
///   RW       D~^{-1} A~
///   DIFF     sum_{k=0..K} e^{-1}/k! (D~^{-1} A~)^k, rows renormalized
inline TransitionMatrix transition_matrix(const Graph& g, Scheme scheme,
                                          std::size_t diffusion_order = kDefaultDiffusionOrder) {
  const std::size_t n = g.num_nodes();
  using Entry = TransitionMatrix::Entry;
  std::vector<std::vector<Entry>> rows(n);
  std::vector<NodeId> zero_rows;
  std::vector<std::string> warnings;

  switch (scheme) {
    case Scheme::Sym: {
      std::vector<double> inv_sqrt(n);
      for (NodeId u = 0; u < n; ++u) inv_sqrt[u] = 1.0 / std::sqrt(static_cast<double>(g.degree_with_self(u)));
      for (NodeId u = 0; u < n; ++u) {
        const auto nb = g.neighbors(u);
        rows[u].reserve(nb.size() + 1);
        rows[u].push_back({u, inv_sqrt[u] * inv_sqrt[u]});
        for (NodeId v : nb) rows[u].push_back({v, inv_sqrt[u] * inv_sqrt[v]});
      }
      break;
    }
    case Scheme::NoLoop: {
      for (NodeId u = 0; u < n; ++u) {
        const auto nb = g.neighbors(u);
        if (nb.empty()) {
          zero_rows.push_back(u);
          warnings.push_back("NO_LOOP: node " + std::to_string(u) + " is isolated; its row is zero");
          continue;
        }
        const double du = 1.0 / std::sqrt(static_cast<double>(nb.size()));
        for (NodeId v : nb) rows[u].push_back({v, du / std::sqrt(static_cast<double>(g.degree(v)))});
      }
      break;
    }
    case Scheme::Rw:
    case Scheme::Diff: {
      for (NodeId u = 0; u < n; ++u) {
        const auto nb = g.neighbors(u);
        const double w = 1.0 / static_cast<double>(nb.size() + 1);
        rows[u].push_back({u, w});
        for (NodeId v : nb) rows[u].push_back({v, w});
      }
      if (scheme == Scheme::Diff) {
        require(diffusion_order >= 1, ErrorKind::DimensionError, "DIFF needs diffusion_order >= 1");
        const auto rw = TransitionMatrix::from_rows(Scheme::Rw, 0, std::move(rows));
        std::vector<double> acc(n, 0.0), cur(n, 0.0), next(n, 0.0);
        std::vector<NodeId> touched;
        std::vector<std::uint8_t> mark(n, 0);
        rows.assign(n, {});
        for (NodeId u = 0; u < n; ++u)
          rows[u] = detail::diffusion_row(rw, u, diffusion_order, acc, cur, next, touched, mark);
      }
      break;
    }
  }
  return TransitionMatrix::from_rows(scheme, scheme == Scheme::Diff ? diffusion_order : 0, std::move(rows),
                                     std::move(zero_rows), std::move(warnings));
}

/// One message-passing step with optional residual blending:
///   out = (1 - alpha) * P H + alpha * H0.
/// alpha == 0 and alpha == 1 are exact (no blending arithmetic).
inline DenseMatrix propagate(const TransitionMatrix& t, const DenseMatrix& h, double residual_alpha = 0.0,
                             const DenseMatrix* h0 = nullptr) {
  require(residual_alpha >= 0.0 && residual_alpha <= 1.0, ErrorKind::DimensionError, "residual_alpha outside [0,1]");
  require(h.rows() == t.size(), ErrorKind::DimensionError, "propagate: row count mismatch");
  if (residual_alpha > 0.0) {
    require(h0 != nullptr, ErrorKind::DimensionError, "propagate: residual needs H0");
    require(h0->same_shape(h), ErrorKind::DimensionError, "propagate: H0 shape mismatch");
    if (residual_alpha == 1.0) return *h0;
  }
  DenseMatrix out = t.apply(h);
  if (residual_alpha > 0.0) {
    out *= (1.0 - residual_alpha);
    out.axpy(residual_alpha, *h0);
  }
  return out;
}

}  // namespace pmlp
