#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pmlp/error.hpp"
#include "pmlp/rng.hpp"

namespace pmlp {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;  // canonical form: first < second

/// Undirected simple graph stored as sorted CSR adjacency. Self-loops are
/// never stored; schemes that need them synthesize them in the transition
/// matrix.
///
/// Every adjacency read through neighbors() or edges() bumps an access
/// counter so tests can verify that a code path never touched a graph.
class Graph {
 public:
  Graph() = default;

  Graph(const Graph& o) : n_(o.n_), offsets_(o.offsets_), adj_(o.adj_), edges_(o.edges_) {}
  Graph& operator=(const Graph& o) {
    n_ = o.n_;
    offsets_ = o.offsets_;
    adj_ = o.adj_;
    edges_ = o.edges_;
    reads_.store(0);
    return *this;
  }
  Graph(Graph&& o) noexcept
      : n_(o.n_), offsets_(std::move(o.offsets_)), adj_(std::move(o.adj_)), edges_(std::move(o.edges_)) {}
  Graph& operator=(Graph&& o) noexcept {
    n_ = o.n_;
    offsets_ = std::move(o.offsets_);
    adj_ = std::move(o.adj_);
    edges_ = std::move(o.edges_);
    reads_.store(0);
    return *this;
  }

  std::size_t num_nodes() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }

  std::span<const NodeId> neighbors(NodeId u) const {
    reads_.fetch_add(1, std::memory_order_relaxed);
    return {adj_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
  }

  // Sorted canonical edge list (u < v).
  const std::vector<Edge>& edges() const {
    reads_.fetch_add(1, std::memory_order_relaxed);
    return edges_;
  }

  std::size_t degree(NodeId u) const noexcept { return offsets_[u + 1] - offsets_[u]; }
  // Degree counting the implicit self-loop.
  std::size_t degree_with_self(NodeId u) const noexcept { return degree(u) + 1; }

  bool has_edge(NodeId u, NodeId v) const {
    if (u >= n_ || v >= n_ || u == v) return false;
    const auto first = adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[u]);
    const auto last = adj_.begin() + static_cast<std::ptrdiff_t>(offsets_[u + 1]);
    return std::binary_search(first, last, v);
  }

  std::uint64_t access_count() const noexcept { return reads_.load(); }
  void reset_access_count() const noexcept { reads_.store(0); }

  friend bool operator==(const Graph& a, const Graph& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

  // Construction from already-canonical, sorted, deduplicated edges.
  static Graph from_canonical(std::size_t n, std::vector<Edge> edges) {
    Graph g;
    g.n_ = n;
    g.edges_ = std::move(edges);
    std::vector<std::size_t> deg(n, 0);
    for (const auto& [u, v] : g.edges_) {
      ++deg[u];
      ++deg[v];
    }
    g.offsets_.assign(n + 1, 0);
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + deg[i];
    g.adj_.assign(g.offsets_[n], 0);
    std::vector<std::size_t> pos(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [u, v] : g.edges_) {
      g.adj_[pos[u]++] = v;
      g.adj_[pos[v]++] = u;
    }
    for (std::size_t i = 0; i < n; ++i)
      std::sort(g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i]),
                g.adj_.begin() + static_cast<std::ptrdiff_t>(g.offsets_[i + 1]));
    return g;
  }

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> adj_;
  std::vector<Edge> edges_;
  mutable std::atomic<std::uint64_t> reads_{0};
};

/// Builds a deduplicated undirected graph. Ids must lie in [0, n); u == v
/// is rejected.
inline Graph build_graph(std::size_t n, std::span<const std::pair<std::int64_t, std::int64_t>> edge_list) {
  std::vector<Edge> edges;
  edges.reserve(edge_list.size());
  for (const auto& [u, v] : edge_list) {
    if (u < 0 || v < 0 || static_cast<std::uint64_t>(u) >= n || static_cast<std::uint64_t>(v) >= n)
      fail(ErrorKind::InvalidEdge,
           "edge (" + std::to_string(u) + "," + std::to_string(v) + ") out of range for n=" + std::to_string(n));
    if (u == v) fail(ErrorKind::SelfLoopRejected, "self-loop at node " + std::to_string(u));
    const auto a = static_cast<NodeId>(std::min(u, v));
    const auto b = static_cast<NodeId>(std::max(u, v));
    edges.emplace_back(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return Graph::from_canonical(n, std::move(edges));
}

inline Graph build_graph(std::size_t n, std::initializer_list<std::pair<std::int64_t, std::int64_t>> edge_list) {
  const std::vector<std::pair<std::int64_t, std::int64_t>> v(edge_list);
  return build_graph(n, std::span<const std::pair<std::int64_t, std::int64_t>>(v));
}

inline Graph edgeless_graph(std::size_t n) { return Graph::from_canonical(n, {}); }

inline Graph ring_graph(std::size_t n) {
  std::vector<std::pair<std::int64_t, std::int64_t>> e;
  for (std::size_t i = 0; i < n && n > 2; ++i)
    e.emplace_back(static_cast<std::int64_t>(i), static_cast<std::int64_t>((i + 1) % n));
  if (n == 2) e.emplace_back(0, 1);
  return build_graph(n, e);
}

/// Subgraph induced by `ids`, relabeled so that ids[k] becomes node k.
inline Graph induced_subgraph(const Graph& g, std::span<const NodeId> ids) {
  std::vector<std::int64_t> pos(g.num_nodes(), -1);
  for (std::size_t k = 0; k < ids.size(); ++k) pos[ids[k]] = static_cast<std::int64_t>(k);
  std::vector<Edge> edges;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    for (NodeId v : g.neighbors(ids[k])) {
      const auto pv = pos[v];
      if (pv > static_cast<std::int64_t>(k)) edges.emplace_back(static_cast<NodeId>(k), static_cast<NodeId>(pv));
    }
  }
  std::sort(edges.begin(), edges.end());
  return Graph::from_canonical(ids.size(), std::move(edges));
}

// ---------------------------------------------------------------------------
// Inductive split

struct InductiveSplit {
  std::vector<NodeId> train_ids;
  std::vector<NodeId> valid_ids;
  std::vector<NodeId> test_ids;
  Graph train_graph;  // same id space as full_graph, only train-train edges
  Graph full_graph;
};

/// Restricts the training graph to edges with both endpoints in train_ids.
/// The id sets must be pairwise disjoint and in range.
inline InductiveSplit inductive_split(const Graph& g, std::vector<NodeId> train_ids, std::vector<NodeId> valid_ids,
                                      std::vector<NodeId> test_ids) {
  const std::size_t n = g.num_nodes();
  std::vector<std::uint8_t> owner(n, 0);
  auto mark = [&](const std::vector<NodeId>& ids, std::uint8_t tag, const char* name) {
    for (NodeId id : ids) {
      require(id < n, ErrorKind::SplitOverlap, std::string(name) + " id " + std::to_string(id) + " out of range");
      if (owner[id] != 0)
        fail(ErrorKind::SplitOverlap, "node " + std::to_string(id) + " appears in more than one split set");
      owner[id] = tag;
    }
  };
  mark(train_ids, 1, "train");
  mark(valid_ids, 2, "valid");
  mark(test_ids, 3, "test");

  std::vector<Edge> kept;
  for (const auto& [u, v] : g.edges())
    if (owner[u] == 1 && owner[v] == 1) kept.emplace_back(u, v);

  InductiveSplit s;
  s.train_ids = std::move(train_ids);
  s.valid_ids = std::move(valid_ids);
  s.test_ids = std::move(test_ids);
  s.train_graph = Graph::from_canonical(n, std::move(kept));
  s.full_graph = g;
  return s;
}

// ---------------------------------------------------------------------------
// Structural perturbations

enum class Perturbation { AddNoise, Sparsify };

/// ADD_NOISE adds floor(ratio * |E|) uniformly drawn new edges (saturating
/// at the complete graph). SPARSIFY keeps a uniform sample of
/// ceil(ratio * |E|) edges, ratio being the kept fraction in [0, 1].
inline Graph perturb(const Graph& g, Perturbation op, double ratio, std::uint64_t seed) {
  require(ratio >= 0.0, ErrorKind::DimensionError, "perturbation ratio must be >= 0");
  Rng rng(seed);
  const std::size_t n = g.num_nodes();
  std::vector<Edge> edges = g.edges();
  const std::size_t m = edges.size();

  if (op == Perturbation::Sparsify) {
    require(ratio <= 1.0, ErrorKind::DimensionError, "sparsify ratio must be in [0,1]");
    const auto keep = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(m) - 1e-12));
    if (keep >= m) return g;
    rng.shuffle(edges);
    edges.resize(keep);
    std::sort(edges.begin(), edges.end());
    return Graph::from_canonical(n, std::move(edges));
  }

  const auto wanted = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(m) + 1e-12));
  if (wanted == 0 || n < 2) return g;
  const std::size_t capacity = n * (n - 1) / 2;
  const std::size_t free_slots = capacity - m;
  std::set<Edge> present(edges.begin(), edges.end());
  std::vector<Edge> added;

  if (wanted >= free_slots || wanted * 2 > free_slots) {
    // Dense regime: enumerate the complement and take a random prefix.
    std::vector<Edge> complement;
    complement.reserve(free_slots);
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = u + 1; v < n; ++v)
        if (!present.count({u, v})) complement.emplace_back(u, v);
    rng.shuffle(complement);
    complement.resize(std::min(wanted, complement.size()));
    added = std::move(complement);
  } else {
    while (added.size() < wanted) {
      auto u = static_cast<NodeId>(rng.below(n));
      auto v = static_cast<NodeId>(rng.below(n));
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (present.insert({u, v}).second) added.emplace_back(u, v);
    }
  }
  edges.insert(edges.end(), added.begin(), added.end());
  std::sort(edges.begin(), edges.end());
  return Graph::from_canonical(n, std::move(edges));
}

// ---------------------------------------------------------------------------
// Edge list text format: two whitespace separated 0-based ids per line,
// lines starting with '#' are comments.

inline std::vector<std::pair<std::int64_t, std::int64_t>> read_edge_list(std::istream& is) {
  std::vector<std::pair<std::int64_t, std::int64_t>> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::int64_t u, v;
    if (!(ls >> u >> v)) fail(ErrorKind::ParseError, "edge list line " + std::to_string(lineno) + ": expected two ids");
    out.emplace_back(u, v);
  }
  return out;
}

inline void write_edge_list(std::ostream& os, const Graph& g) {
  for (const auto& [u, v] : g.edges()) os << u << ' ' << v << '\n';
}

inline Graph load_edge_list(const std::string& path, std::size_t n) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::SchemaError, "cannot open edge file " + path);
  const auto edges = read_edge_list(in);
  return build_graph(n, edges);
}

}  // namespace pmlp
