#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace pmlp;
using namespace pmlp::testing;

namespace {

NetConfig small_net(std::size_t in, std::size_t out) {
  NetConfig nc;
  nc.in_dim = in;
  nc.hidden = 8;
  nc.out_dim = out;
  return nc;
}

}  // namespace

TEST(MakeModel, Mlp) {
  const auto s = make_model("MLP", small_net(3, 2));
  EXPECT_EQ(s.train_placement.mode, MpMode::None);
  EXPECT_EQ(s.infer_placement.mode, MpMode::None);
  EXPECT_FALSE(s.is_pmlp());
  EXPECT_FALSE(s.is_gnn());
}

TEST(MakeModel, PmlpGcnTrainsWithoutMp) {
  const auto s = make_model("PMLP_GCN", small_net(3, 2));
  EXPECT_EQ(s.train_placement.mode, MpMode::None);
  EXPECT_EQ(s.infer_placement.mode, MpMode::PerLayer);
  EXPECT_EQ(s.infer_placement.scheme, Scheme::Sym);
  EXPECT_TRUE(s.is_pmlp());
}

TEST(MakeModel, SgcResInfAddsResidualOnlyAtInference) {
  const auto s = make_model("SGC_RESINF", small_net(3, 2), 2, Scheme::Sym, 0.1);
  EXPECT_EQ(s.train_placement.mode, MpMode::Pre);
  EXPECT_EQ(s.train_placement.residual_alpha, 0.0);
  EXPECT_EQ(s.infer_placement.mode, MpMode::Pre);
  EXPECT_EQ(s.infer_placement.residual_alpha, 0.1);
  EXPECT_TRUE(s.is_gnn());
}

TEST(MakeModel, FamiliesAndPlacements) {
  struct Row {
    const char* name;
    MpMode train, infer;
    double train_alpha, infer_alpha;
    bool pmlp, gnn;
  };
  const Row rows[] = {
      {"MLP", MpMode::None, MpMode::None, 0, 0, false, false},
      {"PMLP_GCN", MpMode::None, MpMode::PerLayer, 0, 0, true, false},
      {"PMLP_SGC", MpMode::None, MpMode::Pre, 0, 0, true, false},
      {"PMLP_APP", MpMode::None, MpMode::Post, 0, 0, true, false},
      {"GCN", MpMode::PerLayer, MpMode::PerLayer, 0, 0, false, true},
      {"SGC", MpMode::Pre, MpMode::Pre, 0, 0, false, true},
      {"APPNP", MpMode::Post, MpMode::Post, 0, 0, false, true},
      {"SGC_RES", MpMode::Pre, MpMode::Pre, 0.1, 0.1, false, true},
      {"SGC_RESINF", MpMode::Pre, MpMode::Pre, 0, 0.1, false, true},
      {"APPNP_RES", MpMode::Post, MpMode::Post, 0.1, 0.1, false, true},
      {"PMLP_SGC_RES", MpMode::None, MpMode::Pre, 0, 0.1, true, false},
      {"PMLP_APP_RES", MpMode::None, MpMode::Post, 0, 0.1, true, false},
  };
  for (const auto& r : rows) {
    const auto s = make_model(r.name, small_net(3, 2), 3, Scheme::Rw);
    EXPECT_EQ(to_string(s.name), r.name);
    EXPECT_EQ(s.train_placement.mode, r.train) << r.name;
    EXPECT_EQ(s.infer_placement.mode, r.infer) << r.name;
    EXPECT_DOUBLE_EQ(s.train_placement.residual_alpha, r.train_alpha) << r.name;
    EXPECT_DOUBLE_EQ(s.infer_placement.residual_alpha, r.infer_alpha) << r.name;
    EXPECT_EQ(s.is_pmlp(), r.pmlp) << r.name;
    EXPECT_EQ(s.is_gnn(), r.gnn) << r.name;
    if (r.infer == MpMode::Pre || r.infer == MpMode::Post) {
      EXPECT_EQ(s.infer_placement.num_mp, 3u);
    }
    if (r.infer != MpMode::None) {
      EXPECT_EQ(s.infer_placement.scheme, Scheme::Rw);
    }
    EXPECT_EQ(s.valid_placement(), s.train_placement);
  }
}

TEST(MakeModel, Errors) {
  try {
    make_model("GAT", small_net(3, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownModel);
  }
  EXPECT_THROW(make_model("GCN", small_net(3, 2), 0), Error);
  EXPECT_THROW(make_model("APPNP", small_net(3, 2), 2, Scheme::Sym, 1.5), Error);
  EXPECT_NO_THROW(make_model("MLP", small_net(3, 2), 0));
}

TEST(Evaluate, EdgelessGraphPmlpEqualsMlp) {
  Rng rng(1);
  const std::size_t n = 30;
  const DenseMatrix x = random_matrix(n, 3, rng);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(rng.below(3));
  const auto split = inductive_split(edgeless_graph(n), {0, 1, 2, 3, 4, 5}, {}, {6, 7, 8, 9, 10, 11, 12, 13, 14});
  NetConfig nc = small_net(3, 3);
  nc.dropout_rate = 0.0;
  const Network net = Network::init(nc, rng);
  const auto mlp = evaluate(make_model("MLP", nc), net, x, labels, split);
  for (const char* name : {"PMLP_GCN", "PMLP_SGC", "PMLP_APP", "PMLP_SGC_RES", "PMLP_APP_RES"}) {
    const auto pm = evaluate(make_model(name, nc), net, x, labels, split);
    EXPECT_EQ(pm.predictions, mlp.predictions) << name;
    EXPECT_EQ(pm.accuracy, mlp.accuracy) << name;
  }
}

TEST(Evaluate, PerfectLogitsStub) {
  const std::size_t n = 6;
  const std::vector<int> labels{0, 1, 2, 2, 1, 0};
  DenseMatrix x(n, 3);
  for (std::size_t i = 0; i < n; ++i) x(i, labels[i]) = 1.0;
  Network net;
  net.layers.push_back({DenseMatrix::identity(3), Vector(3, 0.0)});
  const auto split = inductive_split(edgeless_graph(n), {}, {}, iota_ids(n));
  const auto ev = evaluate(make_model("MLP", small_net(3, 3)), net, x, labels, split);
  EXPECT_EQ(ev.accuracy, 1.0);
  EXPECT_EQ(ev.predictions, labels);
}

TEST(Evaluate, MissingTestLabels) {
  Network net;
  net.layers.push_back({DenseMatrix::identity(2), Vector(2, 0.0)});
  const auto split = inductive_split(edgeless_graph(3), {0}, {}, {1, 2});
  try {
    evaluate(make_model("MLP", small_net(2, 2)), net, DenseMatrix(3, 2), {0, 1, -1}, split);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingLabels);
  }
}

TEST(Evaluate, UsesFullGraphAtInference) {
  // Two nodes joined only in the full graph: node 1 has zero features, so
  // with MP its prediction must follow node 0.
  Network net;
  net.layers.push_back({DenseMatrix::identity(2), Vector(2, 0.0)});
  const DenseMatrix x{{0, 1}, {0, 0}};
  const Graph g = build_graph(2, {{0, 1}});
  const auto split = inductive_split(g, {0}, {}, {1});
  EXPECT_EQ(split.train_graph.num_edges(), 0u);
  const auto pm = evaluate(make_model("PMLP_GCN", small_net(2, 2)), net, x, {1, 1}, split);
  const auto mlp = evaluate(make_model("MLP", small_net(2, 2)), net, x, {1, 1}, split);
  EXPECT_EQ(pm.predictions, std::vector<int>{1});
  EXPECT_EQ(mlp.predictions, std::vector<int>{0});
}

TEST(ArgmaxProperty, ConstantShiftKeepsPredictions) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(20), c = 1 + rng.below(6);
    // Multiples of 1/8 keep every shifted value exact, so ties survive.
    DenseMatrix logits(n, c);
    for (double& v : logits.data()) v = static_cast<double>(static_cast<int>(rng.below(17)) - 8) / 8.0;
    const auto base = predict_classes(logits);
    DenseMatrix shifted = logits;
    for (std::size_t r = 0; r < n; ++r) {
      const double shift = static_cast<double>(static_cast<int>(rng.below(201)) - 100) / 4.0;
      for (double& v : shifted.row(r)) v += shift;
    }
    ASSERT_EQ(predict_classes(shifted), base);
  }
}

TEST(WeightSharing, OneNetworkServesEveryInferenceMode) {
  Rng rng(3);
  const std::size_t n = 40;
  const Graph g = random_graph(n, 0.1, rng);
  const DenseMatrix x = random_matrix(n, 4, rng);
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng.below(2));
  std::vector<NodeId> tr, te;
  for (NodeId i = 0; i < n; ++i) (i < 15 ? tr : te).push_back(i);
  const auto split = inductive_split(g, tr, {}, te);
  TrainConfig cfg;
  cfg.epochs = 20;
  const NetConfig nc = small_net(4, 2);
  const auto trained = train_model(make_model("MLP", nc), cfg, x, Targets::classes(labels, 2), split);
  const Network before = trained.net;
  for (const char* name : {"MLP", "PMLP_GCN", "PMLP_SGC", "PMLP_APP"})
    (void)evaluate(make_model(name, nc), trained.net, x, labels, split);
  EXPECT_EQ(trained.net, before);
  // PMLP_GCN inference is exactly the GCN forward with the MLP weights.
  const auto pm = evaluate(make_model("PMLP_GCN", nc), trained.net, x, labels, split);
  const auto fr = forward(trained.net, x, &g, MpPlacement::per_layer(), false);
  const auto pred = predict_classes(fr.logits);
  for (std::size_t k = 0; k < te.size(); ++k) EXPECT_EQ(pm.predictions[k], pred[te[k]]);
}
