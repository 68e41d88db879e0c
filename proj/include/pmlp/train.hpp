#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pmlp/adam.hpp"
#include "pmlp/graph.hpp"
#include "pmlp/network.hpp"

namespace pmlp {

struct TrainConfig {
  std::size_t epochs = 200;
  double learning_rate = 0.01;
  double weight_decay = 5e-4;
  double dropout_rate = 0.5;
  LossKind loss = LossKind::CrossEntropy;
  std::uint64_t seed = 0;
  std::optional<std::size_t> early_stop_patience = 50;

  void validate() const {
    require(learning_rate > 0.0, ErrorKind::DimensionError, "learning_rate must be > 0");
    require(weight_decay >= 0.0, ErrorKind::DimensionError, "weight_decay must be >= 0");
    require(dropout_rate >= 0.0 && dropout_rate < 1.0, ErrorKind::DimensionError, "dropout_rate outside [0,1)");
  }
};

struct History {
  std::vector<double> train_loss;   // per epoch, measured before the update
  std::vector<double> valid_score;  // accuracy (classes) or -MSE (regression)
  std::size_t best_epoch = 0;       // 1-based; 0 means initial weights
  friend bool operator==(const History&, const History&) = default;
};

struct TrainResult {
  Network net;
  History history;
};

struct TrainData {
  const DenseMatrix& x;
  const Targets& targets;
  const InductiveSplit& split;
};

inline DenseMatrix gather_rows(const DenseMatrix& x, std::span<const NodeId> ids) {
  DenseMatrix out(ids.size(), x.cols());
  for (std::size_t k = 0; k < ids.size(); ++k) std::copy(x.row(ids[k]).begin(), x.row(ids[k]).end(), out.row(k).begin());
  return out;
}

// Accuracy for class targets, negative mean squared error otherwise.
// `rows` index into `out`, `target_ids` into the targets.
inline double score_rows(const DenseMatrix& out, std::span<const NodeId> rows, const Targets& targets,
                         std::span<const NodeId> target_ids) {
  if (rows.empty()) return 0.0;
  if (targets.is_classification()) {
    const auto pred = predict_classes(out);
    std::size_t hit = 0;
    for (std::size_t k = 0; k < rows.size(); ++k)
      if (pred[rows[k]] == targets.labels()[target_ids[k]]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(rows.size());
  }
  double se = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k)
    for (std::size_t c = 0; c < out.cols(); ++c) {
      const double r = out(rows[k], c) - targets.values()(target_ids[k], c);
      se += r * r;
    }
  return -se / static_cast<double>(rows.size());
}

/// Full-batch training with Adam.
///
/// The training forward runs `placement_train` over the subgraph induced by
/// the train ids in split.train_graph; the full graph is never read unless
/// `placement_valid` asks for MP, in which case validation runs on the full
/// graph. Model selection keeps the weights of the best validation epoch.
/// Deterministic given cfg.seed.
inline TrainResult train(const NetConfig& netcfg, const TrainConfig& cfg, const TrainData& data,
                         const MpPlacement& placement_train, const MpPlacement& placement_valid) {
  cfg.validate();
  const auto& split = data.split;
  require(data.x.rows() == split.full_graph.num_nodes(), ErrorKind::DimensionError, "X rows != node count");
  require(!split.train_ids.empty(), ErrorKind::EmptyMask, "no training nodes");

  NetConfig nc = netcfg;
  nc.dropout_rate = cfg.dropout_rate;
  Rng init_rng(cfg.seed);
  Rng dropout_rng = init_rng.derive(1);
  TrainResult result{Network::init(nc, init_rng), {}};
  Network& net = result.net;
  if (cfg.epochs == 0) return result;

  // Compact training problem: train rows only, relabeled.
  const DenseMatrix x_train = gather_rows(data.x, split.train_ids);
  const Targets y_train = data.targets.subset(split.train_ids);
  std::vector<NodeId> mask(split.train_ids.size());
  for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = static_cast<NodeId>(k);
  std::optional<TransitionMatrix> t_train;
  if (placement_train.needs_graph()) {
    const Graph sub = induced_subgraph(split.train_graph, split.train_ids);
    t_train = transition_matrix(sub, placement_train.scheme, placement_train.diffusion_order);
  }

  // Validation operand.
  const bool has_valid = !split.valid_ids.empty();
  DenseMatrix x_valid;
  std::vector<NodeId> valid_rows;
  std::optional<TransitionMatrix> t_valid;
  if (has_valid) {
    if (placement_valid.needs_graph()) {
      t_valid = transition_matrix(split.full_graph, placement_valid.scheme, placement_valid.diffusion_order);
      valid_rows = split.valid_ids;
    } else {
      x_valid = gather_rows(data.x, split.valid_ids);
      valid_rows.resize(split.valid_ids.size());
      for (std::size_t k = 0; k < valid_rows.size(); ++k) valid_rows[k] = static_cast<NodeId>(k);
    }
  }
  auto validate_now = [&]() {
    const auto r = placement_valid.needs_graph()
                       ? forward(net, data.x, &*t_valid, placement_valid, false)
                       : forward(net, x_valid, static_cast<const TransitionMatrix*>(nullptr), placement_valid, false);
    return score_rows(r.logits, valid_rows, data.targets, split.valid_ids);
  };

  auto params = net.parameters();
  AdamState adam = AdamState::for_shapes(params);
  const AdamParams hp{cfg.learning_rate, 0.9, 0.999, 1e-8};

  Network best = net;
  double best_score = -std::numeric_limits<double>::infinity();
  std::size_t best_epoch = 0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto fr = forward(net, x_train, t_train ? &*t_train : nullptr, placement_train, true, &dropout_rng);
    const auto lg = loss_and_grad(net, fr.logits, fr.cache, y_train, mask, cfg.loss, cfg.weight_decay);
    adam_step(adam, params, lg.grads.spans(), hp);
    result.history.train_loss.push_back(lg.loss);
    if (has_valid) {
      const double s = validate_now();
      result.history.valid_score.push_back(s);
      if (s > best_score) {
        best_score = s;
        best_epoch = epoch;
        best = net;
      } else if (cfg.early_stop_patience && epoch - best_epoch >= *cfg.early_stop_patience) {
        break;
      }
    }
  }
  if (has_valid) {
    result.history.best_epoch = best_epoch;
    net = std::move(best);
  } else {
    result.history.best_epoch = result.history.train_loss.size();
  }
  return result;
}

}  // namespace pmlp
