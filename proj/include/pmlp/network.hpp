#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pmlp/graph.hpp"
#include "pmlp/matrix.hpp"
#include "pmlp/rng.hpp"
#include "pmlp/transition.hpp"

namespace pmlp {

enum class Activation { Relu, Tanh, Cos, Elu };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Relu: return "RELU";
    case Activation::Tanh: return "TANH";
    case Activation::Cos: return "COS";
    case Activation::Elu: return "ELU";
  }
  return "?";
}

inline Activation parse_activation(const std::string& s) {
  if (s == "RELU" || s == "relu") return Activation::Relu;
  if (s == "TANH" || s == "tanh") return Activation::Tanh;
  if (s == "COS" || s == "cos") return Activation::Cos;
  if (s == "ELU" || s == "elu") return Activation::Elu;
  fail(ErrorKind::ParseError, "unknown activation '" + s + "'");
}

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return z < 0.0 ? 0.0 : z;  // NaN passes through
    case Activation::Tanh: return std::tanh(z);
    case Activation::Cos: return std::cos(z);
    case Activation::Elu: return z > 0.0 ? z : std::expm1(z);
  }
  return z;
}

// Derivative; ReLU uses the strict indicator (derivative 0 at 0).
inline double activate_grad(Activation a, double z) {
  switch (a) {
    case Activation::Relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    case Activation::Cos: return -std::sin(z);
    case Activation::Elu: return z > 0.0 ? 1.0 : std::exp(z);
  }
  return 1.0;
}

struct Layer {
  DenseMatrix w;  // d_in x d_out
  Vector b;       // d_out

  std::size_t in_dim() const noexcept { return w.rows(); }
  std::size_t out_dim() const noexcept { return w.cols(); }
  friend bool operator==(const Layer&, const Layer&) = default;
};

struct NetConfig {
  std::size_t in_dim = 0;
  std::size_t hidden = 64;
  std::size_t out_dim = 0;
  std::size_t num_layers = 2;  // feed-forward layers
  Activation activation = Activation::Relu;
  double dropout_rate = 0.5;

  std::vector<std::size_t> dims() const {
    std::vector<std::size_t> d{in_dim};
    for (std::size_t l = 1; l < num_layers; ++l) d.push_back(hidden);
    d.push_back(out_dim);
    return d;
  }
};

/// Stack of affine layers. Hidden layers apply the activation, the last
/// layer is a linear head. The same weights serve MLP, PMLP and GNN modes.
struct Network {
  std::vector<Layer> layers;
  Activation activation = Activation::Relu;
  double dropout_rate = 0.0;

  std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  friend bool operator==(const Network&, const Network&) = default;

  // Xavier-uniform weights, zero biases.
  static Network init(const NetConfig& cfg, Rng& rng) {
    require(cfg.num_layers >= 1, ErrorKind::DimensionError, "network needs at least one layer");
    require(cfg.in_dim >= 1 && cfg.out_dim >= 1, ErrorKind::DimensionError, "network dims must be positive");
    require(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0, ErrorKind::DimensionError, "dropout outside [0,1)");
    Network net;
    net.activation = cfg.activation;
    net.dropout_rate = cfg.dropout_rate;
    const auto d = cfg.dims();
    for (std::size_t l = 0; l + 1 < d.size(); ++l)
      net.layers.push_back({xavier_init(rng, d[l], d[l + 1]), Vector(d[l + 1], 0.0)});
    return net;
  }

  std::vector<std::span<double>> parameters() {
    std::vector<std::span<double>> p;
    for (auto& l : layers) {
      p.push_back(l.w.data());
      p.emplace_back(l.b);
    }
    return p;
  }

  std::size_t parameter_count() const {
    std::size_t c = 0;
    for (const auto& l : layers) c += l.w.size() + l.b.size();
    return c;
  }
};

// ---------------------------------------------------------------------------
// Message-passing placement

enum class MpMode { None, PerLayer, Pre, Post };

inline const char* to_string(MpMode m) {
  switch (m) {
    case MpMode::None: return "NONE";
    case MpMode::PerLayer: return "PER_LAYER";
    case MpMode::Pre: return "PRE";
    case MpMode::Post: return "POST";
  }
  return "?";
}

/// Where non-parametric MP steps sit relative to the feed-forward stack.
///   NONE       plain MLP
///   PER_LAYER  one MP step before every FF layer (GCN style)
///   PRE        num_mp steps before the first FF layer (SGC style)
///   POST       num_mp steps after the last FF layer (APPNP style)
/// Each step may blend with the block input: (1-a) MP(X) + a X^(0).
struct MpPlacement {
  MpMode mode = MpMode::None;
  std::size_t num_mp = 2;
  Scheme scheme = Scheme::Sym;
  double residual_alpha = 0.0;
  std::size_t diffusion_order = kDefaultDiffusionOrder;

  bool needs_graph() const noexcept { return mode != MpMode::None; }

  static MpPlacement none() { return {}; }
  static MpPlacement per_layer(Scheme s = Scheme::Sym, double alpha = 0.0) {
    return {MpMode::PerLayer, 1, s, alpha, kDefaultDiffusionOrder};
  }
  static MpPlacement pre(std::size_t k, Scheme s = Scheme::Sym, double alpha = 0.0) {
    return {MpMode::Pre, k, s, alpha, kDefaultDiffusionOrder};
  }
  static MpPlacement post(std::size_t k, Scheme s = Scheme::Sym, double alpha = 0.0) {
    return {MpMode::Post, k, s, alpha, kDefaultDiffusionOrder};
  }

  // Number of MP steps in front of FF layer `layer` (0-based).
  std::size_t steps_before(std::size_t layer) const {
    switch (mode) {
      case MpMode::PerLayer: return 1;
      case MpMode::Pre: return layer == 0 ? num_mp : 0;
      default: return 0;
    }
  }
  std::size_t steps_after() const { return mode == MpMode::Post ? num_mp : 0; }

  friend bool operator==(const MpPlacement&, const MpPlacement&) = default;
};

// ---------------------------------------------------------------------------
// Forward pass

struct LayerCache {
  DenseMatrix input;   // after dropout and MP; operand of the affine map
  DenseMatrix pre;     // pre-activation
  // Kept units of the inverted dropout. Recorded for layers > 0 only: the
  // input layer's mask is never needed by the backward pass.
  std::vector<std::uint8_t> keep;
};

struct ForwardCache {
  std::vector<LayerCache> layers;
  MpPlacement placement;
  const TransitionMatrix* transition = nullptr;
};

struct ForwardResult {
  DenseMatrix logits;
  ForwardCache cache;
};

namespace detail {

inline DenseMatrix mp_block(const TransitionMatrix& t, const DenseMatrix& h, std::size_t steps, double alpha) {
  if (steps == 0) return h;
  DenseMatrix cur = propagate(t, h, alpha, &h);
  for (std::size_t k = 1; k < steps; ++k) cur = propagate(t, cur, alpha, &h);
  return cur;
}

// Reverse of mp_block: given dL/dOut returns dL/dH.
inline DenseMatrix mp_block_backward(const TransitionMatrix& t, const DenseMatrix& g_out, std::size_t steps,
                                     double alpha) {
  if (steps == 0) return g_out;
  if (alpha == 1.0) return g_out;
  DenseMatrix g = g_out;
  DenseMatrix acc;
  if (alpha > 0.0) acc = DenseMatrix(g.rows(), g.cols());
  for (std::size_t k = 0; k < steps; ++k) {
    if (alpha > 0.0) acc.axpy(alpha, g);
    g = t.apply_transpose(g);
    if (alpha > 0.0) g *= (1.0 - alpha);
  }
  if (alpha > 0.0) g += acc;
  return g;
}

inline void add_bias(DenseMatrix& z, const Vector& b) {
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b[c];
  }
}

}  // namespace detail

/// Forward pass over all n rows of X. `t` must be the transition operator of
/// the graph the placement should use; it may be null only when the
/// placement is NONE. Dropout is active only when `training` is set and uses
/// inverted scaling so activations keep their expectation.
inline ForwardResult forward(const Network& net, const DenseMatrix& x, const TransitionMatrix* t,
                             const MpPlacement& placement, bool training, Rng* rng = nullptr) {
  require(!net.layers.empty(), ErrorKind::DimensionError, "empty network");
  require(x.cols() == net.in_dim(), ErrorKind::DimensionError,
          "X has " + std::to_string(x.cols()) + " columns, network expects " + std::to_string(net.in_dim()));
  if (placement.needs_graph()) {
    require(t != nullptr, ErrorKind::MissingGraph, "MP placement needs a graph");
    require(t->size() == x.rows(), ErrorKind::DimensionError, "graph size does not match X rows");
  }
  const bool use_dropout = training && net.dropout_rate > 0.0;
  require(!use_dropout || rng != nullptr, ErrorKind::DimensionError, "dropout needs an rng");

  ForwardResult res;
  res.cache.placement = placement;
  res.cache.transition = t;
  res.cache.layers.resize(net.layers.size());
  DenseMatrix h = x;
  const double keep = 1.0 - net.dropout_rate;
  const double scale = 1.0 / keep;

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& lc = res.cache.layers[l];
    const auto& layer = net.layers[l];
    if (use_dropout) {
      if (l > 0) lc.keep.resize(h.size());
      for (std::size_t i = 0; i < h.size(); ++i) {
        const bool kept = rng->uniform() < keep;
        if (l > 0) lc.keep[i] = kept;
        h.data()[i] *= kept ? scale : 0.0;
      }
    }
    const std::size_t steps = placement.steps_before(l);
    if (steps > 0) h = detail::mp_block(*t, h, steps, placement.residual_alpha);
    lc.input = std::move(h);
    DenseMatrix z = matmul(lc.input, layer.w);
    detail::add_bias(z, layer.b);
    const bool last = l + 1 == net.layers.size();
    if (last) {
      lc.pre = z;
      h = std::move(z);
    } else {
      h = DenseMatrix(z.rows(), z.cols());
      for (std::size_t i = 0; i < z.size(); ++i) h.data()[i] = activate(net.activation, z.data()[i]);
      lc.pre = std::move(z);
    }
  }
  if (placement.steps_after() > 0) h = detail::mp_block(*t, h, placement.steps_after(), placement.residual_alpha);
  res.logits = std::move(h);
  return res;
}

// Convenience overload building the operator from a graph (or none).
inline ForwardResult forward(const Network& net, const DenseMatrix& x, const Graph* g, const MpPlacement& placement,
                             bool training, Rng* rng = nullptr) {
  if (!placement.needs_graph()) return forward(net, x, static_cast<const TransitionMatrix*>(nullptr), placement,
                                               training, rng);
  require(g != nullptr, ErrorKind::MissingGraph, "MP placement needs a graph");
  const auto t = transition_matrix(*g, placement.scheme, placement.diffusion_order);
  auto r = forward(net, x, &t, placement, training, rng);
  r.cache.transition = nullptr;  // t dies here; cache is only valid for inference use
  return r;
}

// ---------------------------------------------------------------------------
// Losses and reverse-mode gradients

enum class LossKind { CrossEntropy, Squared };

/// Supervision: either class ids (one-hot for the squared loss) or a dense
/// matrix of real-valued regression targets.
class Targets {
 public:
  static Targets classes(std::vector<int> labels, std::size_t num_classes) {
    Targets t;
    t.labels_ = std::move(labels);
    t.num_classes_ = num_classes;
    return t;
  }
  static Targets values(DenseMatrix v) {
    Targets t;
    t.values_ = std::move(v);
    t.num_classes_ = t.values_.cols();
    return t;
  }

  bool is_classification() const noexcept { return values_.empty(); }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const DenseMatrix& values() const noexcept { return values_; }
  std::size_t size() const noexcept { return is_classification() ? labels_.size() : values_.rows(); }

  double target(std::size_t row, std::size_t col) const {
    if (is_classification()) return labels_[row] == static_cast<int>(col) ? 1.0 : 0.0;
    return values_(row, col);
  }

  // Rows restricted to `ids`, in order.
  Targets subset(std::span<const NodeId> ids) const {
    if (is_classification()) {
      std::vector<int> l;
      l.reserve(ids.size());
      for (NodeId i : ids) l.push_back(labels_.at(i));
      return classes(std::move(l), num_classes_);
    }
    DenseMatrix v(ids.size(), values_.cols());
    for (std::size_t k = 0; k < ids.size(); ++k)
      std::copy(values_.row(ids[k]).begin(), values_.row(ids[k]).end(), v.row(k).begin());
    return values(std::move(v));
  }

 private:
  std::vector<int> labels_;
  DenseMatrix values_;
  std::size_t num_classes_ = 0;
};

struct Gradients {
  std::vector<DenseMatrix> dw;
  std::vector<Vector> db;

  std::vector<std::span<const double>> spans() const {
    std::vector<std::span<const double>> s;
    for (std::size_t l = 0; l < dw.size(); ++l) {
      s.push_back(dw[l].data());
      s.emplace_back(db[l]);
    }
    return s;
  }
};

struct LossAndGrad {
  double loss = 0.0;
  Gradients grads;
};

/// Mean loss over the masked rows plus (weight_decay / 2) * ||theta||^2
/// (all weights and biases), with gradients for every layer.
///   CROSS_ENTROPY  softmax cross-entropy on class ids
///   SQUARED        1/2 ||logits - target||^2 (one-hot for class ids)
inline LossAndGrad loss_and_grad(const Network& net, const DenseMatrix& logits, const ForwardCache& cache,
                                 const Targets& targets, std::span<const NodeId> mask, LossKind kind,
                                 double weight_decay) {
  require(!mask.empty(), ErrorKind::EmptyMask, "loss mask is empty");
  require(cache.layers.size() == net.layers.size(), ErrorKind::DimensionError, "cache does not match network");
  require(logits.cols() == net.out_dim(), ErrorKind::DimensionError, "logit width mismatch");
  require(kind == LossKind::Squared || targets.is_classification(), ErrorKind::DimensionError,
          "cross-entropy needs class targets");

  const std::size_t c = logits.cols();
  const double inv_m = 1.0 / static_cast<double>(mask.size());
  DenseMatrix g(logits.rows(), c);
  double loss = 0.0;
  std::vector<double> p(c);
  for (NodeId u : mask) {
    require(u < logits.rows() && u < targets.size(), ErrorKind::DimensionError, "mask id out of range");
    const auto z = logits.row(u);
    auto gu = g.row(u);
    if (kind == LossKind::CrossEntropy) {
      const int y = targets.labels()[u];
      require(y >= 0 && static_cast<std::size_t>(y) < c, ErrorKind::LabelError, "label out of range");
      double zmax = -std::numeric_limits<double>::infinity();
      for (double v : z) zmax = std::max(zmax, v);
      double s = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        p[k] = std::exp(z[k] - zmax);
        s += p[k];
      }
      loss += -(z[static_cast<std::size_t>(y)] - zmax - std::log(s));
      for (std::size_t k = 0; k < c; ++k)
        gu[k] = (p[k] / s - (static_cast<std::size_t>(y) == k ? 1.0 : 0.0)) * inv_m;
    } else {
      for (std::size_t k = 0; k < c; ++k) {
        const double r = z[k] - targets.target(u, k);
        loss += 0.5 * r * r;
        gu[k] = r * inv_m;
      }
    }
  }
  loss *= inv_m;

  LossAndGrad out;
  const std::size_t L = net.layers.size();
  out.grads.dw.resize(L);
  out.grads.db.resize(L);

  const auto& pl = cache.placement;
  auto mp_back = [&](const DenseMatrix& grad, std::size_t steps) {
    require(cache.transition != nullptr, ErrorKind::MissingGraph, "cache has no transition operator");
    return detail::mp_block_backward(*cache.transition, grad, steps, pl.residual_alpha);
  };
  if (pl.steps_after() > 0) g = mp_back(g, pl.steps_after());

  for (std::size_t l = L; l-- > 0;) {
    const auto& layer = net.layers[l];
    const auto& lc = cache.layers[l];
    if (l + 1 != L) {
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] *= activate_grad(net.activation, lc.pre.data()[i]);
    }
    out.grads.dw[l] = matmul_tn(lc.input, g);
    Vector db(layer.out_dim(), 0.0);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const auto gr = g.row(r);
      for (std::size_t k = 0; k < db.size(); ++k) db[k] += gr[k];
    }
    out.grads.db[l] = std::move(db);
    if (l == 0) break;
    g = matmul_nt(g, layer.w);
    const std::size_t steps = pl.steps_before(l);
    if (steps > 0) g = mp_back(g, steps);
    if (!lc.keep.empty()) {
      const double scale = 1.0 / (1.0 - net.dropout_rate);
      for (std::size_t i = 0; i < g.size(); ++i) g.data()[i] *= lc.keep[i] ? scale : 0.0;
    }
  }

  if (weight_decay > 0.0) {
    double reg = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      const auto& layer = net.layers[l];
      reg += squared_norm(layer.w);
      for (double v : layer.b) reg += v * v;
      out.grads.dw[l].axpy(weight_decay, layer.w);
      for (std::size_t k = 0; k < layer.b.size(); ++k) out.grads.db[l][k] += weight_decay * layer.b[k];
    }
    loss += 0.5 * weight_decay * reg;
  }
  out.loss = loss;
  return out;
}

// Argmax per row; ties go to the smallest class index.
inline std::vector<int> predict_classes(const DenseMatrix& logits) {
  std::vector<int> out(logits.rows());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto z = logits.row(r);
    std::size_t best = 0;
    for (std::size_t k = 1; k < z.size(); ++k)
      if (z[k] > z[best]) best = k;
    out[r] = static_cast<int>(best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint format:
//   pmlp-checkpoint 1
//   <activation> <dropout> <num_layers>
//   <d_0> <d_1> ... <d_L>
// then per layer a weight block and a 1 x d_out bias block in the matrix format.

inline void write_checkpoint(std::ostream& os, const Network& net) {
  os << "pmlp-checkpoint 1\n";
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << to_string(net.activation) << ' ' << net.dropout_rate << ' ' << net.layers.size() << '\n';
  os.precision(old);
  os << net.in_dim();
  for (const auto& l : net.layers) os << ' ' << l.out_dim();
  os << '\n';
  for (const auto& l : net.layers) {
    write_matrix(os, l.w);
    DenseMatrix b(1, l.b.size());
    std::copy(l.b.begin(), l.b.end(), b.data().begin());
    write_matrix(os, b);
  }
}

inline Network read_checkpoint(std::istream& is) {
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != "pmlp-checkpoint" || version != 1)
    fail(ErrorKind::ParseError, "not a pmlp checkpoint");
  std::string act;
  double dropout = 0.0;
  std::size_t layers = 0;
  if (!(is >> act >> dropout >> layers)) fail(ErrorKind::ParseError, "bad checkpoint header");
  std::vector<std::size_t> dims(layers + 1);
  for (auto& d : dims)
    if (!(is >> d)) fail(ErrorKind::ParseError, "bad checkpoint dims");
  Network net;
  net.activation = parse_activation(act);
  net.dropout_rate = dropout;
  for (std::size_t l = 0; l < layers; ++l) {
    DenseMatrix w = read_matrix(is);
    DenseMatrix b = read_matrix(is);
    if (w.rows() != dims[l] || w.cols() != dims[l + 1] || b.rows() != 1 || b.cols() != dims[l + 1])
      fail(ErrorKind::ParseError, "checkpoint block shape mismatch at layer " + std::to_string(l));
    net.layers.push_back({std::move(w), Vector(b.data().begin(), b.data().end())});
  }
  return net;
}

}  // namespace pmlp
