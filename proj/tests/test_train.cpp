#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace pmlp;
using namespace pmlp::testing;

namespace {

struct Problem {
  Graph g;
  DenseMatrix x;
  std::vector<int> labels;
  InductiveSplit split;
};

// Two Gaussian blobs on a homophilous random graph.
Problem blobs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Problem p;
  p.x = DenseMatrix(n, 4);
  p.labels.resize(n);
  std::vector<std::pair<std::int64_t, std::int64_t>> e;
  for (std::size_t i = 0; i < n; ++i) {
    p.labels[i] = static_cast<int>(i % 2);
    for (std::size_t c = 0; c < 4; ++c) p.x(i, c) = rng.normal() + (p.labels[i] ? 0.7 : -0.7);
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rng.uniform() < (p.labels[i] == p.labels[j] ? 0.15 : 0.02)) e.emplace_back(i, j);
  p.g = build_graph(n, e);
  std::vector<NodeId> ids = iota_ids(n);
  rng.shuffle(ids);
  const std::size_t a = n / 3, b = 2 * n / 3;
  p.split = inductive_split(p.g, {ids.begin(), ids.begin() + a}, {ids.begin() + a, ids.begin() + b},
                            {ids.begin() + b, ids.end()});
  return p;
}

NetConfig net_config(std::size_t in, std::size_t out) {
  NetConfig nc;
  nc.in_dim = in;
  nc.hidden = 16;
  nc.out_dim = out;
  return nc;
}

// Perceptron oracle: returns true once a full pass makes no mistake.
bool perceptron_separable(const DenseMatrix& x, const std::vector<int>& y, std::size_t max_passes) {
  Vector w(x.cols() + 1, 0.0);
  for (std::size_t pass = 0; pass < max_passes; ++pass) {
    bool clean = true;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const double s = y[i] ? 1.0 : -1.0;
      double z = w.back();
      for (std::size_t c = 0; c < x.cols(); ++c) z += w[c] * x(i, c);
      if (s * z <= 0.0) {
        clean = false;
        for (std::size_t c = 0; c < x.cols(); ++c) w[c] += s * x(i, c);
        w.back() += s;
      }
    }
    if (clean) return true;
  }
  return false;
}

}  // namespace

TEST(Train, ConfigValidation) {
  TrainConfig c;
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.weight_decay = -1.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Train, PmlpAndMlpTrainingAreBitIdentical) {
  const Problem p = blobs(60, 1);
  const auto targets = Targets::classes(p.labels, 2);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.seed = 5;
  const NetConfig nc = net_config(4, 2);
  for (const char* pmlp_name : {"PMLP_GCN", "PMLP_SGC", "PMLP_APP", "PMLP_SGC_RES", "PMLP_APP_RES"}) {
    const auto mlp = train_model(make_model("MLP", nc), cfg, p.x, targets, p.split);
    const auto pm = train_model(make_model(pmlp_name, nc), cfg, p.x, targets, p.split);
    EXPECT_EQ(mlp.net, pm.net) << pmlp_name;
    EXPECT_EQ(mlp.history, pm.history) << pmlp_name;
  }
}

TEST(Train, ZeroEpochsReturnsInitialWeights) {
  const Problem p = blobs(30, 2);
  const auto targets = Targets::classes(p.labels, 2);
  TrainConfig cfg;
  cfg.epochs = 0;
  cfg.seed = 9;
  const auto r = train(net_config(4, 2), cfg, {p.x, targets, p.split}, MpPlacement::none(), MpPlacement::none());
  NetConfig nc = net_config(4, 2);
  nc.dropout_rate = cfg.dropout_rate;
  Rng rng(9);
  EXPECT_EQ(r.net, Network::init(nc, rng));
  EXPECT_TRUE(r.history.train_loss.empty());
}

TEST(Train, DeterministicGivenSeed) {
  const Problem p = blobs(60, 3);
  const auto targets = Targets::classes(p.labels, 2);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 1;
  const auto spec = make_model("GCN", net_config(4, 2));
  const auto a = train_model(spec, cfg, p.x, targets, p.split);
  const auto b = train_model(spec, cfg, p.x, targets, p.split);
  EXPECT_EQ(a.net, b.net);
  EXPECT_EQ(a.history, b.history);
  cfg.seed = 2;
  EXPECT_FALSE(train_model(spec, cfg, p.x, targets, p.split).net == a.net);
}

TEST(Train, SeparableDataReachesPerfectTrainAccuracy) {
  Rng rng(4);
  const std::size_t n = 40;
  DenseMatrix x(n, 2);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 2);
    x(i, 0) = rng.uniform(-1, 1);
    x(i, 1) = (y[i] ? 0.3 : -0.3) + 0.5 * x(i, 0) + 0.2 * rng.uniform(-1, 1);
  }
  ASSERT_TRUE(perceptron_separable(x, y, 10000));
  const auto s = inductive_split(edgeless_graph(n), iota_ids(n), {}, {});
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.dropout_rate = 0.0;
  cfg.weight_decay = 0.0;
  cfg.learning_rate = 0.05;
  const auto targets = Targets::classes(y, 2);
  const auto r = train(net_config(2, 2), cfg, {x, targets, s}, MpPlacement::none(), MpPlacement::none());
  const auto pred = predict_classes(forward(r.net, x, static_cast<const Graph*>(nullptr), MpPlacement::none(), false).logits);
  EXPECT_EQ(pred, y);
  EXPECT_EQ(r.history.train_loss.size(), 200u);
}

TEST(Train, EarlyStoppingKeepsBestEpoch) {
  const Problem p = blobs(60, 5);
  const auto targets = Targets::classes(p.labels, 2);
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.early_stop_patience = 5;
  const auto r = train(net_config(4, 2), cfg, {p.x, targets, p.split}, MpPlacement::none(), MpPlacement::none());
  ASSERT_FALSE(r.history.valid_score.empty());
  EXPECT_LT(r.history.train_loss.size(), 500u);
  const auto best = std::max_element(r.history.valid_score.begin(), r.history.valid_score.end());
  EXPECT_EQ(r.history.best_epoch, static_cast<std::size_t>(best - r.history.valid_score.begin()) + 1);
  EXPECT_EQ(r.history.train_loss.size() - r.history.best_epoch, 5u);
}

TEST(Train, GraphFreeTrainingNeverReadsGraphs) {
  const Problem p = blobs(60, 6);
  const auto targets = Targets::classes(p.labels, 2);
  TrainConfig cfg;
  cfg.epochs = 10;
  for (const char* name : {"MLP", "PMLP_GCN", "PMLP_SGC", "PMLP_APP"}) {
    p.split.full_graph.reset_access_count();
    p.split.train_graph.reset_access_count();
    train_model(make_model(name, net_config(4, 2)), cfg, p.x, targets, p.split);
    EXPECT_EQ(p.split.full_graph.access_count(), 0u) << name;
    EXPECT_EQ(p.split.train_graph.access_count(), 0u) << name;
  }
  // A GNN reads the train graph for training and the full graph for validation.
  p.split.full_graph.reset_access_count();
  p.split.train_graph.reset_access_count();
  train_model(make_model("GCN", net_config(4, 2)), cfg, p.x, targets, p.split);
  EXPECT_GT(p.split.train_graph.access_count(), 0u);
  EXPECT_GT(p.split.full_graph.access_count(), 0u);
}

TEST(Train, GnnTrainingOnlySeesTrainEdges) {
  // Edges that touch a non-train node must not influence GNN training.
  const Problem p = blobs(45, 7);
  const auto targets = Targets::classes(p.labels, 2);
  std::vector<std::pair<std::int64_t, std::int64_t>> extra;
  for (const auto& [u, v] : p.g.edges()) extra.emplace_back(u, v);
  const auto& tr = p.split.train_ids;
  for (NodeId u : p.split.test_ids) extra.emplace_back(u, tr[u % tr.size()]);
  const Graph denser = build_graph(45, extra);
  ASSERT_GT(denser.num_edges(), p.g.num_edges());
  const auto a_split = inductive_split(p.g, tr, {}, p.split.test_ids);
  const auto b_split = inductive_split(denser, tr, {}, p.split.test_ids);
  TrainConfig cfg;
  cfg.epochs = 15;
  const auto a = train(net_config(4, 2), cfg, {p.x, targets, a_split}, MpPlacement::per_layer(), MpPlacement::none());
  const auto b = train(net_config(4, 2), cfg, {p.x, targets, b_split}, MpPlacement::per_layer(), MpPlacement::none());
  EXPECT_EQ(a.net, b.net);
}
