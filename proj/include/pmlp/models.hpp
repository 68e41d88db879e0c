#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pmlp/train.hpp"

namespace pmlp {

enum class ModelName {
  Mlp,
  PmlpGcn,
  PmlpSgc,
  PmlpApp,
  Gcn,
  Sgc,
  Appnp,
  SgcRes,
  SgcResInf,
  AppnpRes,
  PmlpSgcRes,
  PmlpAppRes,
};

inline constexpr std::array<std::pair<ModelName, std::string_view>, 12> kModelNames{{
    {ModelName::Mlp, "MLP"},
    {ModelName::PmlpGcn, "PMLP_GCN"},
    {ModelName::PmlpSgc, "PMLP_SGC"},
    {ModelName::PmlpApp, "PMLP_APP"},
    {ModelName::Gcn, "GCN"},
    {ModelName::Sgc, "SGC"},
    {ModelName::Appnp, "APPNP"},
    {ModelName::SgcRes, "SGC_RES"},
    {ModelName::SgcResInf, "SGC_RESINF"},
    {ModelName::AppnpRes, "APPNP_RES"},
    {ModelName::PmlpSgcRes, "PMLP_SGC_RES"},
    {ModelName::PmlpAppRes, "PMLP_APP_RES"},
}};

inline std::string_view to_string(ModelName m) {
  for (const auto& [k, v] : kModelNames)
    if (k == m) return v;
  return "?";
}

inline ModelName parse_model(std::string_view s) {
  for (const auto& [k, v] : kModelNames)
    if (v == s) return k;
  fail(ErrorKind::UnknownModel, "unknown model '" + std::string(s) + "'");
}

// Residual weight used by the +Res / +ResInf variants unless overridden.
inline constexpr double kDefaultResidualAlpha = 0.1;

/// A named model is a pair of MP placements over one shared Network: the
/// placement used while training and the one used at inference.
struct ModelSpec {
  ModelName name = ModelName::Mlp;
  MpPlacement train_placement;
  MpPlacement infer_placement;
  NetConfig netcfg;

  bool is_pmlp() const {
    return train_placement.mode == MpMode::None && infer_placement.mode != MpMode::None;
  }
  bool is_gnn() const {
    if (train_placement.mode == MpMode::None) return false;
    MpPlacement a = train_placement, b = infer_placement;
    a.residual_alpha = b.residual_alpha = 0.0;
    return a == b;
  }
  // Validation follows the training architecture, so PMLPs validate as MLPs.
  MpPlacement valid_placement() const { return train_placement; }
};

/// GCN-style models use PER_LAYER, SGC-style PRE and APPNP-style POST. APPNP
/// and PMLP_APP run without residual (alpha = 0) unless `alpha` is given;
/// the +Res variants default to alpha = 0.1. SGC_RESINF trains without the
/// residual and adds it only at inference.
inline ModelSpec make_model(ModelName name, const NetConfig& netcfg, std::size_t num_mp = 2,
                            Scheme scheme = Scheme::Sym, std::optional<double> alpha = std::nullopt) {
  const double a_plain = alpha.value_or(0.0);
  const double a_res = alpha.value_or(kDefaultResidualAlpha);
  require(a_plain >= 0.0 && a_plain <= 1.0 && a_res >= 0.0 && a_res <= 1.0, ErrorKind::DimensionError,
          "alpha outside [0,1]");
  if (name != ModelName::Mlp) require(num_mp >= 1, ErrorKind::DimensionError, "num_mp must be >= 1");

  ModelSpec s;
  s.name = name;
  s.netcfg = netcfg;
  const auto none = MpPlacement::none();
  const auto gcn = MpPlacement::per_layer(scheme);
  switch (name) {
    case ModelName::Mlp: s.train_placement = none; s.infer_placement = none; break;
    case ModelName::PmlpGcn: s.train_placement = none; s.infer_placement = gcn; break;
    case ModelName::PmlpSgc: s.train_placement = none; s.infer_placement = MpPlacement::pre(num_mp, scheme); break;
    case ModelName::PmlpApp:
      s.train_placement = none;
      s.infer_placement = MpPlacement::post(num_mp, scheme, a_plain);
      break;
    case ModelName::Gcn: s.train_placement = s.infer_placement = gcn; break;
    case ModelName::Sgc: s.train_placement = s.infer_placement = MpPlacement::pre(num_mp, scheme); break;
    case ModelName::Appnp: s.train_placement = s.infer_placement = MpPlacement::post(num_mp, scheme, a_plain); break;
    case ModelName::SgcRes: s.train_placement = s.infer_placement = MpPlacement::pre(num_mp, scheme, a_res); break;
    case ModelName::SgcResInf:
      s.train_placement = MpPlacement::pre(num_mp, scheme, 0.0);
      s.infer_placement = MpPlacement::pre(num_mp, scheme, a_res);
      break;
    case ModelName::AppnpRes:
      s.train_placement = s.infer_placement = MpPlacement::post(num_mp, scheme, a_res);
      break;
    case ModelName::PmlpSgcRes:
      s.train_placement = none;
      s.infer_placement = MpPlacement::pre(num_mp, scheme, a_res);
      break;
    case ModelName::PmlpAppRes:
      s.train_placement = none;
      s.infer_placement = MpPlacement::post(num_mp, scheme, a_res);
      break;
  }
  return s;
}

inline ModelSpec make_model(std::string_view name, const NetConfig& netcfg, std::size_t num_mp = 2,
                            Scheme scheme = Scheme::Sym, std::optional<double> alpha = std::nullopt) {
  return make_model(parse_model(name), netcfg, num_mp, scheme, alpha);
}

struct Evaluation {
  double accuracy = 0.0;
  std::vector<int> predictions;  // aligned with split.test_ids
};

/// Inference with spec.infer_placement on the full graph; accuracy over the
/// test ids.
inline Evaluation evaluate(const ModelSpec& spec, const Network& net, const DenseMatrix& x,
                           const std::vector<int>& labels, const InductiveSplit& split) {
  for (NodeId u : split.test_ids)
    if (u >= labels.size() || labels[u] < 0)
      fail(ErrorKind::MissingLabels, "test node " + std::to_string(u) + " has no label");
  std::optional<TransitionMatrix> t;
  if (spec.infer_placement.needs_graph())
    t = transition_matrix(split.full_graph, spec.infer_placement.scheme, spec.infer_placement.diffusion_order);
  const auto fr = forward(net, x, t ? &*t : nullptr, spec.infer_placement, false);
  const auto pred = predict_classes(fr.logits);
  Evaluation ev;
  std::size_t hit = 0;
  ev.predictions.reserve(split.test_ids.size());
  for (NodeId u : split.test_ids) {
    ev.predictions.push_back(pred[u]);
    if (pred[u] == labels[u]) ++hit;
  }
  ev.accuracy = split.test_ids.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(split.test_ids.size());
  return ev;
}

/// Trains a network for `spec` (graph-free for MLP/PMLP specs).
inline TrainResult train_model(const ModelSpec& spec, const TrainConfig& cfg, const DenseMatrix& x,
                               const Targets& targets, const InductiveSplit& split) {
  return train(spec.netcfg, cfg, TrainData{x, targets, split}, spec.train_placement, spec.valid_placement());
}

}  // namespace pmlp
