#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "test_support.hpp"

using namespace pmlp;
using pmlp::testing::random_graph;

namespace {

std::vector<NodeId> nbrs(const Graph& g, NodeId u) {
  const auto s = g.neighbors(u);
  return {s.begin(), s.end()};
}

}  // namespace

TEST(BuildGraph, TwoNodePath) {
  const Graph g = build_graph(2, {{0, 1}});
  EXPECT_EQ(nbrs(g, 0), std::vector<NodeId>{1});
  EXPECT_EQ(nbrs(g, 1), std::vector<NodeId>{0});
  EXPECT_EQ(g.degree_with_self(0), 2u);
  EXPECT_EQ(g.degree_with_self(1), 2u);
}

TEST(BuildGraph, DuplicatesCollapse) {
  const Graph g = build_graph(3, {{0, 1}, {1, 0}, {1, 2}});
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_TRUE(g.has_edge(1, 0));
  EXPECT_TRUE(g.has_edge(2, 1));
  EXPECT_FALSE(g.has_edge(0, 2));
}

TEST(BuildGraph, SingleIsolatedNode) {
  const Graph g = build_graph(1, {});
  EXPECT_EQ(g.num_edges(), 0u);
  EXPECT_EQ(g.degree_with_self(0), 1u);
}

TEST(BuildGraph, RejectsBadEdges) {
  try {
    build_graph(3, {{0, 3}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidEdge);
  }
  try {
    build_graph(3, {{-1, 2}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidEdge);
  }
  try {
    build_graph(3, {{1, 1}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SelfLoopRejected);
  }
}

TEST(BuildGraph, RandomInstancesKeepInvariants) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<std::pair<std::int64_t, std::int64_t>> raw;
    const std::size_t m = rng.below(3 * n + 1);
    for (std::size_t k = 0; k < m; ++k) {
      const auto u = static_cast<std::int64_t>(rng.below(n));
      const auto v = static_cast<std::int64_t>(rng.below(n));
      if (u != v) raw.emplace_back(u, v);
    }
    const Graph g = build_graph(n, raw);
    std::set<std::pair<NodeId, NodeId>> expect;
    for (auto [u, v] : raw) expect.insert({static_cast<NodeId>(std::min(u, v)), static_cast<NodeId>(std::max(u, v))});
    ASSERT_EQ(g.num_edges(), expect.size());
    std::size_t deg_sum = 0;
    for (NodeId u = 0; u < n; ++u) {
      const auto nb = nbrs(g, u);
      ASSERT_TRUE(std::is_sorted(nb.begin(), nb.end()));
      ASSERT_TRUE(std::adjacent_find(nb.begin(), nb.end()) == nb.end());
      for (NodeId v : nb) {
        ASSERT_NE(u, v);
        ASSERT_TRUE(g.has_edge(v, u));
      }
      ASSERT_GE(g.degree_with_self(u), 1u);
      deg_sum += nb.size();
    }
    ASSERT_EQ(deg_sum, 2 * g.num_edges());
  }
}

TEST(InductiveSplit, PathKeepsTrainEdge) {
  const Graph g = build_graph(3, {{0, 1}, {1, 2}});
  const auto s = inductive_split(g, {0, 1}, {}, {2});
  ASSERT_EQ(s.train_graph.num_edges(), 1u);
  EXPECT_EQ(s.train_graph.edges()[0], (Edge{0, 1}));
  EXPECT_EQ(s.full_graph, g);
}

TEST(InductiveSplit, EmptyTrainSet) {
  const Graph g = build_graph(3, {{0, 1}, {1, 2}});
  const auto s = inductive_split(g, {}, {0}, {1, 2});
  EXPECT_EQ(s.train_graph.num_edges(), 0u);
}

TEST(InductiveSplit, RingEvensHaveNoEdges) {
  const Graph g = ring_graph(10);
  std::vector<NodeId> evens, odds;
  for (NodeId i = 0; i < 10; ++i) (i % 2 ? odds : evens).push_back(i);
  // Oracle: count ring edges whose endpoints are both even.
  std::size_t expected = 0;
  for (const auto& [u, v] : g.edges()) expected += (u % 2 == 0 && v % 2 == 0);
  const auto s = inductive_split(g, evens, {}, odds);
  EXPECT_EQ(s.train_graph.num_edges(), expected);
  EXPECT_EQ(expected, 0u);
}

TEST(InductiveSplit, OverlapAndRangeRejected) {
  const Graph g = ring_graph(5);
  try {
    inductive_split(g, {0, 1}, {1}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SplitOverlap);
  }
  EXPECT_THROW(inductive_split(g, {0}, {}, {7}), Error);
}

TEST(InductiveSplit, RandomInstancesKeepInvariants) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(50);
    const Graph g = random_graph(n, rng.uniform(0.02, 0.5), rng);
    std::vector<NodeId> ids = pmlp::testing::iota_ids(n);
    rng.shuffle(ids);
    const std::size_t a = rng.below(n + 1), b = a + rng.below(n - a + 1);
    std::vector<NodeId> tr(ids.begin(), ids.begin() + a), va(ids.begin() + a, ids.begin() + b),
        te(ids.begin() + b, ids.end());
    const auto s = inductive_split(g, tr, va, te);
    const std::set<NodeId> train_set(tr.begin(), tr.end());
    std::size_t expected = 0;
    for (const auto& [u, v] : g.edges()) expected += train_set.count(u) && train_set.count(v);
    ASSERT_EQ(s.train_graph.num_edges(), expected);
    for (const auto& [u, v] : s.train_graph.edges()) {
      ASSERT_TRUE(g.has_edge(u, v));
      ASSERT_TRUE(train_set.count(u) && train_set.count(v));
    }
  }
}

TEST(InducedSubgraph, RelabelsInIdOrder) {
  const Graph g = build_graph(5, {{0, 4}, {4, 2}, {1, 3}});
  const std::vector<NodeId> ids{4, 2, 0};
  const Graph sub = induced_subgraph(g, ids);
  EXPECT_EQ(sub.num_nodes(), 3u);
  EXPECT_EQ(sub.num_edges(), 2u);
  EXPECT_TRUE(sub.has_edge(0, 1));
  EXPECT_TRUE(sub.has_edge(0, 2));
}

TEST(Perturb, RatioZeroAndSparsifyOneAreIdentity) {
  Rng rng(3);
  const Graph g = random_graph(30, 0.2, rng);
  EXPECT_EQ(perturb(g, Perturbation::AddNoise, 0.0, 1), g);
  EXPECT_EQ(perturb(g, Perturbation::Sparsify, 1.0, 1), g);
}

TEST(Perturb, RingAddNoiseIsReproducible) {
  const Graph g = ring_graph(6);
  const Graph a = perturb(g, Perturbation::AddNoise, 0.5, 42);
  const Graph b = perturb(g, Perturbation::AddNoise, 0.5, 42);
  EXPECT_EQ(a.num_edges(), 9u);
  EXPECT_EQ(a.edges(), b.edges());
  for (const auto& [u, v] : g.edges()) EXPECT_TRUE(a.has_edge(u, v));
}

TEST(Perturb, SparsifyKeepsCeilFraction) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Graph g = random_graph(25, 0.3, rng);
    const double ratio = rng.uniform();
    const Graph s = perturb(g, Perturbation::Sparsify, ratio, trial);
    ASSERT_EQ(s.num_edges(), static_cast<std::size_t>(std::ceil(ratio * g.num_edges() - 1e-12)));
    for (const auto& [u, v] : s.edges()) ASSERT_TRUE(g.has_edge(u, v));
  }
}

TEST(Perturb, AddNoiseSaturatesAtCompleteGraph) {
  const Graph g = build_graph(4, {{0, 1}, {1, 2}});
  const Graph p = perturb(g, Perturbation::AddNoise, 10.0, 5);
  EXPECT_EQ(p.num_edges(), 6u);
}

TEST(EdgeList, RoundTripWithComments) {
  std::istringstream in("# header\n0 1\n\n  1 2\n# trailing\n");
  const Graph g = build_graph(3, read_edge_list(in));
  std::ostringstream out;
  write_edge_list(out, g);
  EXPECT_EQ(out.str(), "0 1\n1 2\n");
  std::istringstream bad("0 x\n");
  EXPECT_THROW(read_edge_list(bad), Error);
}

TEST(AccessAudit, CountsAdjacencyReads) {
  const Graph g = ring_graph(4);
  EXPECT_EQ(g.access_count(), 0u);
  (void)g.neighbors(0);
  (void)g.edges();
  EXPECT_EQ(g.access_count(), 2u);
  const Graph copy = g;
  EXPECT_EQ(copy.access_count(), 0u);
}
