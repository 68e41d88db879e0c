#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pmlp/gntk.hpp"
#include "pmlp/graph.hpp"
#include "pmlp/matrix.hpp"
#include "pmlp/network.hpp"

namespace pmlp {

// ---------------------------------------------------------------------------
// Probe wiring: how the synthetic test node x_0 = t v is attached.
//   isolated    no neighbors
//   star:k      k neighbors, each connected only to the test node
//   complete:k  test node plus k neighbors forming a clique K_{k+1}

enum class WiringKind { Isolated, Star, Complete };

struct Wiring {
  WiringKind kind = WiringKind::Isolated;
  std::size_t k = 0;

  static Wiring parse(const std::string& s) {
    if (s == "isolated") return {WiringKind::Isolated, 0};
    const auto colon = s.find(':');
    if (colon != std::string::npos) {
      const std::string head = s.substr(0, colon);
      std::size_t k = 0;
      try {
        k = static_cast<std::size_t>(std::stoul(s.substr(colon + 1)));
      } catch (const std::exception&) {
        fail(ErrorKind::ParseError, "bad wiring '" + s + "'");
      }
      if (head == "star") return {WiringKind::Star, k};
      if (head == "complete") return {WiringKind::Complete, k};
    }
    fail(ErrorKind::ParseError, "unknown wiring '" + s + "' (isolated, star:k, complete:k)");
  }

  std::string name() const {
    switch (kind) {
      case WiringKind::Isolated: return "isolated";
      case WiringKind::Star: return "star:" + std::to_string(k);
      case WiringKind::Complete: return "complete:" + std::to_string(k);
    }
    return "?";
  }

  std::size_t num_neighbors() const { return kind == WiringKind::Isolated ? 0 : k; }

  // Graph over the test node (id 0) and its neighbors (ids 1..k).
  Graph graph() const {
    std::vector<std::pair<std::int64_t, std::int64_t>> e;
    const auto m = static_cast<std::int64_t>(num_neighbors());
    for (std::int64_t i = 1; i <= m; ++i) e.emplace_back(0, i);
    if (kind == WiringKind::Complete)
      for (std::int64_t i = 1; i <= m; ++i)
        for (std::int64_t j = i + 1; j <= m; ++j) e.emplace_back(i, j);
    return build_graph(num_neighbors() + 1, e);
  }
};

struct ExtrapolationProbe {
  Vector v;                      // unit direction
  std::vector<double> t_grid;    // strictly increasing, positive
  double delta_t = 1.0;
  Wiring wiring;
  DenseMatrix neighbor_features;  // num_neighbors x d

  void validate() const {
    require(std::abs(norm2(v) - 1.0) <= 1e-12, ErrorKind::DimensionError, "probe direction must be unit length");
    require(!t_grid.empty(), ErrorKind::DimensionError, "empty t grid");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
      require(t_grid[i] > 0.0, ErrorKind::DimensionError, "t grid must be positive");
      if (i) require(t_grid[i] > t_grid[i - 1], ErrorKind::DimensionError, "t grid must be strictly increasing");
    }
    require(delta_t > 0.0, ErrorKind::DimensionError, "delta_t must be > 0");
    require(neighbor_features.rows() == wiring.num_neighbors(), ErrorKind::DimensionError,
            "neighbor feature rows != wiring size");
    if (neighbor_features.rows() > 0)
      require(neighbor_features.cols() == v.size(), ErrorKind::DimensionError, "neighbor feature width != dim");
  }

  // Node features of the probe graph with x_0 = t v in row 0.
  DenseMatrix features_at(double t) const {
    DenseMatrix x(wiring.num_neighbors() + 1, v.size());
    for (std::size_t c = 0; c < v.size(); ++c) x(0, c) = t * v[c];
    for (std::size_t r = 0; r < neighbor_features.rows(); ++r)
      std::copy(neighbor_features.row(r).begin(), neighbor_features.row(r).end(), x.row(r + 1).begin());
    return x;
  }
};

/// Neighbor features at cosine `alpha` to v: alpha v + sqrt(1-alpha^2) u for
/// a fixed unit u orthogonal to v. Rows are unit length.
inline DenseMatrix aligned_neighbor_features(std::span<const double> v, std::span<const double> u, double alpha,
                                             std::size_t k) {
  DenseMatrix x(k, v.size());
  const double s = std::sqrt(std::max(0.0, 1.0 - alpha * alpha));
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < v.size(); ++c) x(r, c) = alpha * v[c] + s * u[c];
  return x;
}

// Prediction at node 0 of the probe graph (row 0 of x holds x_0).
using ProbePredictor = std::function<double(const DenseMatrix& x, const Graph& g)>;

struct SlopeSeries {
  std::vector<double> t_grid;
  std::vector<double> slopes;      // PMLP mode
  std::vector<double> mlp_slopes;  // MLP mode
  double c_v_hat = 0.0;            // MLP slope at the largest t
  double coeff_factor = 1.0;       // sum over N(0)+{0} of 1/(d~_0 d~_i)
  double alpha_min_raw = 1.0;      // unclamped cosine similarity minimum
  double alpha_min = 1.0;          // clamped to [0, 1]
  std::size_t d_max = 1;
};

/// Degree factor of the asymptotic PMLP slope relative to the MLP slope:
/// sum_{i in N(0)+{0}} 1 / (d~_0 d~_i).
inline double degree_coefficient(const Graph& g, NodeId test_node) {
  require(test_node < g.num_nodes(), ErrorKind::DimensionError, "test node out of range");
  const auto d0 = static_cast<double>(g.degree_with_self(test_node));
  double s = 1.0 / (d0 * d0);
  for (NodeId i : g.neighbors(test_node)) s += 1.0 / (d0 * static_cast<double>(g.degree_with_self(i)));
  return s;
}

struct RateBound {
  double bound = 0.0;
  double alpha_min_raw = 1.0;
  double alpha_min = 1.0;
  std::size_t d_max = 1;
};

/// Order bound (1 + (d~_max - 1) sqrt(1 - alpha_min^2)) / t for the PMLP
/// slope deviation. alpha_i is the cosine similarity between x_i and the mean
/// of its neighbors' features over i in N(0)+{0}; nodes without neighbors
/// count as alpha = 1. Negative cosines are clamped to 0 for the bound.
inline RateBound deviation_rate_bound(const Graph& g, NodeId test_node, const DenseMatrix& x, double t) {
  require(test_node < g.num_nodes(), ErrorKind::DimensionError, "test node out of range");
  require(x.rows() == g.num_nodes(), ErrorKind::DimensionError, "feature rows != node count");
  require(t > 0.0, ErrorKind::DimensionError, "t must be > 0");
  RateBound r;
  r.alpha_min_raw = 1.0;
  auto alpha_of = [&](NodeId i) {
    const auto xi = x.row(i);
    const double ni = norm2(xi);
    if (ni == 0.0) fail(ErrorKind::DegenerateFeature, "zero feature at node " + std::to_string(i));
    const auto nb = g.neighbors(i);
    if (nb.empty()) return 1.0;
    Vector mean(x.cols(), 0.0);
    for (NodeId j : nb)
      for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += x(j, c);
    const double nm = norm2(mean);
    if (nm == 0.0) fail(ErrorKind::DegenerateFeature, "neighbor mean of node " + std::to_string(i) + " is zero");
    return dot(xi, mean) / (ni * nm);
  };
  std::vector<NodeId> ego{test_node};
  for (NodeId i : g.neighbors(test_node)) ego.push_back(i);
  for (NodeId i : ego) {
    r.alpha_min_raw = std::min(r.alpha_min_raw, alpha_of(i));
    r.d_max = std::max(r.d_max, g.degree_with_self(i));
  }
  r.alpha_min = std::clamp(r.alpha_min_raw, 0.0, 1.0);
  const double dm = static_cast<double>(r.d_max);
  r.bound = (1.0 + (dm - 1.0) * std::sqrt(1.0 - r.alpha_min * r.alpha_min)) / t;
  return r;
}

/// Finite-difference slopes (f(x_0 + dt v) - f(x_0)) / dt along the probe
/// direction for both modes. The MLP predictor sees the test node alone;
/// the PMLP predictor sees the wired probe graph. c_v is estimated by the
/// MLP slope at the largest t.
inline SlopeSeries probe_slopes(const ProbePredictor& mlp, const ProbePredictor& pmlp,
                                const ExtrapolationProbe& probe) {
  probe.validate();
  const Graph g = probe.wiring.graph();
  const Graph alone = edgeless_graph(1);
  SlopeSeries s;
  s.t_grid = probe.t_grid;
  s.coeff_factor = degree_coefficient(g, 0);

  auto checked = [](double value, double t) {
    if (!std::isfinite(value)) throw NumericalOverflow(t);
    return value;
  };
  for (double t : probe.t_grid) {
    const DenseMatrix x0 = probe.features_at(t);
    const DenseMatrix x1 = probe.features_at(t + probe.delta_t);
    if (!x0.all_finite() || !x1.all_finite()) throw NumericalOverflow(t);
    const double f0 = checked(pmlp(x0, g), t);
    const double f1 = checked(pmlp(x1, g), t);
    s.slopes.push_back(checked((f1 - f0) / probe.delta_t, t));

    DenseMatrix a0(1, probe.v.size()), a1(1, probe.v.size());
    std::copy(x0.row(0).begin(), x0.row(0).end(), a0.row(0).begin());
    std::copy(x1.row(0).begin(), x1.row(0).end(), a1.row(0).begin());
    const double m0 = checked(mlp(a0, alone), t);
    const double m1 = checked(mlp(a1, alone), t);
    s.mlp_slopes.push_back(checked((m1 - m0) / probe.delta_t, t));
  }
  s.c_v_hat = s.mlp_slopes.back();

  const auto rb = deviation_rate_bound(g, 0, probe.features_at(probe.t_grid.front()), probe.t_grid.front());
  s.alpha_min_raw = rb.alpha_min_raw;
  s.alpha_min = rb.alpha_min;
  s.d_max = rb.d_max;
  return s;
}

/// |s(t) / (c_v coeff) - 1| per grid point.
inline std::vector<double> deviation_series(const SlopeSeries& s) {
  require(s.coeff_factor > 0.0, ErrorKind::DimensionError, "coeff_factor must be > 0");
  require(s.c_v_hat != 0.0, ErrorKind::DimensionError, "c_v estimate is zero");
  std::vector<double> out;
  out.reserve(s.slopes.size());
  for (double sl : s.slopes) out.push_back(std::abs(sl / (s.c_v_hat * s.coeff_factor) - 1.0));
  return out;
}

// ---------------------------------------------------------------------------
// Predictors

// Finite network; `mp` selects PER_LAYER random-walk MP (PMLP mode).
inline ProbePredictor network_predictor(const Network& net, bool mp) {
  return [&net, mp](const DenseMatrix& x, const Graph& g) {
    if (!mp) return forward(net, x, static_cast<const TransitionMatrix*>(nullptr), MpPlacement::none(), false).logits(0, 0);
    const auto t = transition_matrix(g, Scheme::Rw);
    return forward(net, x, &t, MpPlacement::per_layer(Scheme::Rw), false).logits(0, 0);
  };
}

/// Infinite-width predictor from a regressor fit on the MLP NTK over
/// `train_x`. With `bias` set, every feature vector gets a trailing constant
/// 1 coordinate (train side and probe side alike).
struct KernelProbeModel {
  DenseMatrix train_x;  // already augmented if bias
  KernelRegressor reg;
  bool bias = false;

  static KernelProbeModel fit(const DenseMatrix& x, std::span<const double> y, Ridge ridge, bool bias) {
    KernelProbeModel m;
    m.bias = bias;
    m.train_x = bias ? augment(x) : x;
    m.reg = kernel_fit(mlp_ntk(m.train_x), y, ridge);
    return m;
  }

  static DenseMatrix augment(const DenseMatrix& x) {
    DenseMatrix a(x.rows(), x.cols() + 1, 1.0);
    for (std::size_t r = 0; r < x.rows(); ++r) std::copy(x.row(r).begin(), x.row(r).end(), a.row(r).begin());
    return a;
  }

  double predict(const NodeDescriptor& test) const {
    Vector cross(train_x.rows());
    for (std::size_t i = 0; i < train_x.rows(); ++i) cross[i] = two_layer_kernel(mlp_descriptor(train_x.row(i)), test);
    return kernel_predict(reg, cross);
  }

  ProbePredictor predictor(bool mp) const {
    return [this, mp](const DenseMatrix& x, const Graph& g) {
      const DenseMatrix xa = bias ? augment(x) : x;
      return predict(mp ? gnn_descriptor(xa, g, 0) : mlp_descriptor(xa.row(0)));
    };
  }
};

}  // namespace pmlp
