#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pmlp/graph.hpp"
#include "pmlp/linalg.hpp"
#include "pmlp/matrix.hpp"
#include "pmlp/network.hpp"
#include "pmlp/rng.hpp"
#include "pmlp/transition.hpp"

namespace pmlp {

// Scaling constant of the FF covariance step; c = 2 keeps Sigma(x, x) = ||x||^2
// through a ReLU layer.
inline constexpr double kReluScale = 2.0;

struct ReluMoments {
  double sigma = 0.0;      // E[relu(u) relu(v)]
  double sigma_dot = 0.0;  // E[1{u>0} 1{v>0}]
};

/// Arc-cosine closed form of the ReLU Gaussian moments for (u, v) ~ N(0, L):
///   sigma     = s1 s2 / (2 pi) * (sin th + (pi - th) cos th)
///   sigma_dot = (pi - th) / (2 pi)
/// with s_i = sqrt(L_ii) and cos th = L_12 / (s1 s2). A zero variance gives
/// zero for both (strict step derivative).
inline ReluMoments relu_moments_closed(double l11, double l12, double l22) {
  require(l11 >= -1e-12 && l22 >= -1e-12, ErrorKind::DimensionError, "covariance diagonal must be >= 0");
  if (l11 <= 0.0 || l22 <= 0.0) return {};
  const double s1 = std::sqrt(l11), s2 = std::sqrt(l22);
  // sqrt(l11 l22) rather than s1 s2: equal entries then give c == 1 exactly,
  // and acos near 1 turns a one-ulp miss into theta ~ 1e-8.
  double c = l12 / std::sqrt(l11 * l22);
  require(std::abs(c) <= 1.0 + 1e-9, ErrorKind::DimensionError, "covariance block is not PSD");
  c = std::clamp(c, -1.0, 1.0);
  // within a few ulps of +-1 the angle is not resolvable anyway; snapping keeps
  // collinear inputs (1-d features) from leaving a ~1e-8 indefinite residue
  if (1.0 - std::abs(c) < 16.0 * std::numeric_limits<double>::epsilon()) c = c > 0.0 ? 1.0 : -1.0;
  const double theta = std::acos(c);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const double pi = std::numbers::pi;
  return {s1 * s2 / (2.0 * pi) * (s + (pi - theta) * c), (pi - theta) / (2.0 * pi)};
}

inline ReluMoments relu_moments_closed(const DenseMatrix& lambda) {
  require(lambda.rows() == 2 && lambda.cols() == 2, ErrorKind::DimensionError, "Lambda must be 2x2");
  return relu_moments_closed(lambda(0, 0), 0.5 * (lambda(0, 1) + lambda(1, 0)), lambda(1, 1));
}

enum class KernelKind { MlpNtk, Gntk, Cross };

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::MlpNtk: return "MLP_NTK";
    case KernelKind::Gntk: return "GNTK";
    case KernelKind::Cross: return "CROSS";
  }
  return "?";
}

struct KernelMatrix {
  DenseMatrix k;
  KernelKind kind = KernelKind::MlpNtk;
  std::vector<NodeId> node_ids;
  // Depths other than two FF layers are computed by the same recursion but
  // have no closed-form validation behind them.
  bool experimental = false;

  std::size_t size() const noexcept { return k.rows(); }
};

// ---------------------------------------------------------------------------
// Dense recursion over all nodes of a graph

namespace detail {

// B M B^T for the linear MP block B (steps of RW averaging with residual).
inline DenseMatrix mp_congruence(const TransitionMatrix& t, const DenseMatrix& m, std::size_t steps, double alpha) {
  if (steps == 0) return m;
  const DenseMatrix bm = mp_block(t, m, steps, alpha);
  const DenseMatrix bmbt = mp_block(t, bm.transpose(), steps, alpha);
  DenseMatrix out = bmbt.transpose();
  // Symmetrize away round-off.
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = i + 1; j < out.cols(); ++j) {
      const double a = 0.5 * (out(i, j) + out(j, i));
      out(i, j) = out(j, i) = a;
    }
  return out;
}

}  // namespace detail

/// Node-level NTK of an infinitely wide ReLU network with `num_ff_layers`
/// feed-forward layers (last one linear) and MP steps placed per
/// `placement`. MP inside the kernel is random-walk averaging over
/// N(i) + {i}, regardless of placement.scheme. Sigma^(0) = X X^T.
/// Placement NONE gives the plain MLP NTK.
///
/// Returns the kernel restricted to `nodes` (all nodes when empty).
inline KernelMatrix gntk_node(const DenseMatrix& x, const Graph& g, const MpPlacement& placement,
                              std::size_t num_ff_layers = 2, std::span<const NodeId> nodes = {}) {
  require(num_ff_layers >= 1, ErrorKind::Unsupported, "kernel needs at least one FF layer");
  require(x.rows() == g.num_nodes(), ErrorKind::DimensionError, "X rows != node count");
  std::optional<TransitionMatrix> t;
  if (placement.needs_graph()) t = transition_matrix(g, Scheme::Rw);
  const double alpha = placement.residual_alpha;

  DenseMatrix sigma = matmul_nt(x, x);
  DenseMatrix ntk = sigma;
  const std::size_t n = x.rows();
  for (std::size_t l = 0; l + 1 < num_ff_layers; ++l) {
    const std::size_t steps = placement.steps_before(l);
    if (steps > 0) {
      sigma = detail::mp_congruence(*t, sigma, steps, alpha);
      ntk = detail::mp_congruence(*t, ntk, steps, alpha);
    }
    DenseMatrix next_sigma(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        const auto m = relu_moments_closed(sigma(i, i), sigma(i, j), sigma(j, j));
        const double s = kReluScale * m.sigma;
        const double sd = kReluScale * m.sigma_dot;
        next_sigma(i, j) = next_sigma(j, i) = s;
        const double k = ntk(i, j) * sd + s;
        ntk(i, j) = ntk(j, i) = k;
      }
    sigma = std::move(next_sigma);
  }
  const std::size_t last_steps = placement.steps_before(num_ff_layers - 1) + placement.steps_after();
  if (last_steps > 0) {
    // MP in front of the linear head, then any post-head MP; both act on the
    // kernel as congruences by the combined linear map.
    const std::size_t before = placement.steps_before(num_ff_layers - 1);
    if (before > 0) ntk = detail::mp_congruence(*t, ntk, before, alpha);
    if (placement.steps_after() > 0) ntk = detail::mp_congruence(*t, ntk, placement.steps_after(), alpha);
  }

  KernelMatrix km;
  km.kind = placement.needs_graph() ? KernelKind::Gntk : KernelKind::MlpNtk;
  km.experimental = num_ff_layers != 2;
  if (nodes.empty()) {
    km.node_ids.resize(n);
    for (std::size_t i = 0; i < n; ++i) km.node_ids[i] = static_cast<NodeId>(i);
    km.k = std::move(ntk);
  } else {
    km.node_ids.assign(nodes.begin(), nodes.end());
    km.k = DenseMatrix(nodes.size(), nodes.size());
    for (std::size_t a = 0; a < nodes.size(); ++a)
      for (std::size_t b = 0; b < nodes.size(); ++b) km.k(a, b) = ntk(nodes[a], nodes[b]);
  }
  return km;
}

// Plain two-layer MLP NTK over the rows of X.
inline KernelMatrix mlp_ntk(const DenseMatrix& x) {
  return gntk_node(x, edgeless_graph(x.rows()), MpPlacement::none(), 2);
}

// ---------------------------------------------------------------------------
// Two-layer kernel through aggregation descriptors
//
// A node's two-layer feature map is sum_j w_j phi1(b_j): outer weights w_j
// over the nodes j it averages at the second MP step, and b_j the aggregated
// first-layer input of node j. Descriptors let the train and test side use
// different graphs (MLP vs GNN feature maps) in one kernel evaluation.

struct NodeDescriptor {
  std::vector<std::pair<double, Vector>> terms;  // (w_j, b_j)
};

// MLP feature map: no aggregation at either step.
inline NodeDescriptor mlp_descriptor(std::span<const double> x) { return {{{1.0, Vector(x.begin(), x.end())}}}; }

// b_j = (1/d~_j) sum_{k in N(j)+j} x_k
inline Vector aggregate_features(const DenseMatrix& x, const Graph& g, NodeId j) {
  Vector b(x.row(j).begin(), x.row(j).end());
  const auto nb = g.neighbors(j);
  for (NodeId k : nb) {
    const auto xk = x.row(k);
    for (std::size_t c = 0; c < b.size(); ++c) b[c] += xk[c];
  }
  const double inv = 1.0 / static_cast<double>(nb.size() + 1);
  for (auto& v : b) v *= inv;
  return b;
}

// GNN feature map of node i: averages over N(i)+{i} at both MP steps.
inline NodeDescriptor gnn_descriptor(const DenseMatrix& x, const Graph& g, NodeId i) {
  NodeDescriptor d;
  const auto nb = g.neighbors(i);
  const double w = 1.0 / static_cast<double>(nb.size() + 1);
  d.terms.emplace_back(w, aggregate_features(x, g, i));
  for (NodeId j : nb) d.terms.emplace_back(w, aggregate_features(x, g, j));
  return d;
}

// First-layer kernel 2 [ (u.v) E[1 1] + E[relu relu] ] between aggregated inputs.
inline double first_layer_kernel(std::span<const double> u, std::span<const double> v) {
  const double uv = dot(u, v);
  const auto m = relu_moments_closed(dot(u, u), uv, dot(v, v));
  return kReluScale * (uv * m.sigma_dot + m.sigma);
}

inline double two_layer_kernel(const NodeDescriptor& a, const NodeDescriptor& b) {
  double s = 0.0;
  for (const auto& [wa, ba] : a.terms)
    for (const auto& [wb, bb] : b.terms) s += wa * wb * first_layer_kernel(ba, bb);
  return s;
}

/// Cross kernel <phi_mlp(x_i), phi_gnn(x_test)> for every training node i:
/// the training side uses the MLP feature map, the test side the GNN feature
/// map on the full graph. Combined with coefficients fit on the MLP NTK this
/// gives the infinite-width PMLP prediction.
inline Vector cross_kernel_pmlp(const DenseMatrix& x, const Graph& g_full, std::span<const NodeId> train_ids,
                                NodeId test_id) {
  require(test_id < g_full.num_nodes(), ErrorKind::DimensionError, "test id out of range");
  const auto test = gnn_descriptor(x, g_full, test_id);
  Vector out(train_ids.size());
  for (std::size_t k = 0; k < train_ids.size(); ++k) out[k] = two_layer_kernel(mlp_descriptor(x.row(train_ids[k])), test);
  return out;
}

// <phi_mlp(x_i), phi_mlp(x_test)>: the infinite-width MLP prediction kernel.
inline Vector cross_kernel_mlp(const DenseMatrix& x, std::span<const NodeId> train_ids, NodeId test_id) {
  const auto test = mlp_descriptor(x.row(test_id));
  Vector out(train_ids.size());
  for (std::size_t k = 0; k < train_ids.size(); ++k) out[k] = two_layer_kernel(mlp_descriptor(x.row(train_ids[k])), test);
  return out;
}

// <phi_gnn(x_i; g_train), phi_gnn(x_test; g_full)>: the infinite-width GNN
// prediction kernel in the inductive setting.
inline Vector cross_kernel_gnn(const DenseMatrix& x, const Graph& g_train, const Graph& g_full,
                               std::span<const NodeId> train_ids, NodeId test_id) {
  const auto test = gnn_descriptor(x, g_full, test_id);
  Vector out(train_ids.size());
  for (std::size_t k = 0; k < train_ids.size(); ++k)
    out[k] = two_layer_kernel(gnn_descriptor(x, g_train, train_ids[k]), test);
  return out;
}

// ---------------------------------------------------------------------------
// Finite-width Monte-Carlo feature map

/// Explicit width-`width` feature map sum_j w_j phi1(b_j), where phi1 stacks
/// per sample k the block [b * 1{w_k.b > 0}, (w_k.b) 1{w_k.b > 0}] scaled by
/// sqrt(c / width), w_k ~ N(0, I_d). The same seed gives the same w_k for
/// every call, so inner products between maps approximate the kernel.
inline Vector feature_map_mc(const NodeDescriptor& desc, std::size_t width, std::uint64_t seed) {
  require(width >= 1, ErrorKind::DimensionError, "width must be >= 1");
  require(!desc.terms.empty(), ErrorKind::DimensionError, "empty descriptor");
  const std::size_t d = desc.terms.front().second.size();
  const std::size_t block = d + 1;
  Vector phi(width * block, 0.0);
  const double scale = std::sqrt(kReluScale / static_cast<double>(width));
  Rng rng(seed);
  Vector w(d);
  for (std::size_t k = 0; k < width; ++k) {
    for (auto& wi : w) wi = rng.normal();
    double* out = phi.data() + k * block;
    for (const auto& [wj, b] : desc.terms) {
      const double s = dot(w, b);
      if (s <= 0.0) continue;
      const double f = wj * scale;
      for (std::size_t c = 0; c < d; ++c) out[c] += f * b[c];
      out[d] += f * s;
    }
  }
  return phi;
}

/// Finite-width realization of the two-layer GNN feature map of `node_id`:
/// average over N(i)+{i} (c = 1/d~_i) of the first-layer maps of the
/// aggregated features X^T a_j.
inline Vector mc_feature_map(const DenseMatrix& x, const Graph& g, NodeId node_id, std::size_t width,
                                    std::uint64_t seed) {
  require(node_id < g.num_nodes(), ErrorKind::DimensionError, "node id out of range");
  return feature_map_mc(gnn_descriptor(x, g, node_id), width, seed);
}

// ---------------------------------------------------------------------------
// Kernel regression

struct KernelRegressor {
  Vector coefficients;  // (K + ridge I)^{-1} y
  std::vector<NodeId> train_ids;
  double ridge = 0.0;
  KernelKind kind = KernelKind::MlpNtk;
};

/// Min-norm (ridge-stabilized) kernel regression fit.
inline KernelRegressor kernel_fit(const KernelMatrix& k_train, std::span<const double> y, Ridge ridge) {
  require(y.size() == k_train.size(), ErrorKind::DimensionError, "y length != kernel size");
  KernelRegressor reg;
  reg.ridge = ridge.resolve(k_train.k);
  reg.coefficients = solve_spd(k_train.k, y, Ridge::fixed(reg.ridge));
  reg.train_ids = k_train.node_ids;
  reg.kind = k_train.kind;
  return reg;
}

inline double kernel_predict(const KernelRegressor& reg, std::span<const double> cross) {
  require(cross.size() == reg.coefficients.size(), ErrorKind::DimensionError,
          "cross kernel has " + std::to_string(cross.size()) + " entries, expected " +
              std::to_string(reg.coefficients.size()));
  return dot(reg.coefficients, cross);
}

// PSD check by factorization with a tiny relative ridge.
inline bool passes_psd_check(const KernelMatrix& km, double rel_ridge = 1e-10) {
  const auto m = static_cast<double>(km.size());
  if (km.size() == 0) return true;
  const double ridge = rel_ridge * trace(km.k) / m;
  try {
    Cholesky chol(with_ridge(km.k, ridge));
    return true;
  } catch (const FactorizationError&) {
    return false;
  }
}

}  // namespace pmlp
