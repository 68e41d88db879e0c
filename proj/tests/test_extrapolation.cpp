#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_support.hpp"

using namespace pmlp;
using namespace pmlp::testing;

namespace {

ExtrapolationProbe make_probe(const std::string& wiring, double alpha, std::vector<double> grid) {
  ExtrapolationProbe p;
  p.v = {0.6, 0.8, 0.0};
  p.t_grid = std::move(grid);
  p.wiring = Wiring::parse(wiring);
  const Vector u{0.0, 0.0, 1.0};
  p.neighbor_features = aligned_neighbor_features(p.v, u, alpha, p.wiring.num_neighbors());
  return p;
}

Network small_relu_net(std::uint64_t seed) {
  Rng rng(seed);
  NetConfig nc;
  nc.in_dim = 3;
  nc.hidden = 32;
  nc.out_dim = 1;
  nc.num_layers = 2;
  nc.dropout_rate = 0.0;
  Network net = Network::init(nc, rng);
  for (auto& l : net.layers)
    for (double& b : l.b) b = 0.1 * rng.normal();
  return net;
}

KernelProbeModel kernel_model(std::uint64_t seed) {
  Rng rng(seed);
  DenseMatrix x(24, 3), y(24, 1);
  for (std::size_t i = 0; i < 24; ++i) {
    for (double& v : x.row(i)) v = rng.normal();
    y(i, 0) = x(i, 0) + std::sin(2.0 * x(i, 1));
  }
  Vector yy(y.data().begin(), y.data().end());
  return KernelProbeModel::fit(x, yy, Ridge::fixed(1e-6), false);
}

}  // namespace

TEST(Wiring, ParseAndName) {
  for (const char* s : {"isolated", "star:2", "complete:3", "star:0"}) EXPECT_EQ(Wiring::parse(s).name(), s);
  EXPECT_EQ(Wiring::parse("star:5").num_neighbors(), 5u);
  EXPECT_EQ(Wiring::parse("complete:3").graph().num_edges(), 6u);
  EXPECT_EQ(Wiring::parse("star:4").graph().num_edges(), 4u);
  for (const char* s : {"", "ring:3", "star:", "star:x", "isolated:1"}) {
    try {
      Wiring::parse(s);
      ADD_FAILURE() << s;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::ParseError) << s;
    }
  }
}

TEST(DegreeCoefficient, HandWorkedValues) {
  EXPECT_DOUBLE_EQ(degree_coefficient(Wiring::parse("isolated").graph(), 0), 1.0);
  EXPECT_NEAR(degree_coefficient(Wiring::parse("star:2").graph(), 0), 4.0 / 9.0, 1e-15);
  EXPECT_NEAR(degree_coefficient(Wiring::parse("complete:3").graph(), 0), 0.25, 1e-15);
  EXPECT_THROW(degree_coefficient(edgeless_graph(2), 5), Error);
}

TEST(DegreeCoefficient, EqualsTwoStepReturnProbability) {
  // sum_i 1/(d0 di) is the (0,0) entry of the squared random-walk matrix.
  Rng rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    const Graph g = random_graph(2 + rng.below(10), 0.35, rng);
    const DenseMatrix p = dense_rw(g);
    const DenseMatrix p2 = matmul(p, p);
    for (NodeId u = 0; u < g.num_nodes(); ++u) {
      const double c = degree_coefficient(g, u);
      ASSERT_NEAR(c, p2(u, u), 1e-14);
      ASSERT_GT(c, 0.0);
      ASSERT_LE(c, 1.0 + 1e-15);
    }
  }
}

TEST(RateBound, HandWorkedValue) {
  // star:2 with every cosine at 0.6: d~_max = 3, sqrt(1 - 0.36) = 0.8.
  const Graph g = Wiring::parse("star:2").graph();
  DenseMatrix x(3, 2);
  x(0, 0) = 1.0;
  for (std::size_t r = 1; r < 3; ++r) {
    x(r, 0) = 0.6;
    x(r, 1) = 0.8;
  }
  const auto rb = deviation_rate_bound(g, 0, x, 10.0);
  EXPECT_NEAR(rb.alpha_min, 0.6, 1e-15);
  EXPECT_EQ(rb.d_max, 3u);
  EXPECT_NEAR(rb.bound, 0.26, 1e-15);
}

TEST(RateBound, DegeneratesToMlpRate) {
  const DenseMatrix one{{0.3, 0.4}};
  EXPECT_DOUBLE_EQ(deviation_rate_bound(edgeless_graph(1), 0, one, 7.0).bound, 1.0 / 7.0);
  const Graph k4 = Wiring::parse("complete:3").graph();
  const DenseMatrix same{{1, 2}, {1, 2}, {1, 2}, {1, 2}};
  const auto rb = deviation_rate_bound(k4, 0, same, 4.0);
  EXPECT_NEAR(rb.alpha_min, 1.0, 1e-15);
  EXPECT_EQ(rb.d_max, 4u);
  EXPECT_NEAR(rb.bound, 0.25, 1e-7);
}

TEST(RateBound, NegativeCosineIsClampedButRecorded) {
  const Graph g = Wiring::parse("star:1").graph();
  const DenseMatrix x{{1, 0}, {-1, 0}};
  const auto rb = deviation_rate_bound(g, 0, x, 2.0);
  EXPECT_NEAR(rb.alpha_min_raw, -1.0, 1e-15);
  EXPECT_EQ(rb.alpha_min, 0.0);
  EXPECT_NEAR(rb.bound, (1.0 + 1.0) / 2.0, 1e-15);
}

TEST(RateBound, ZeroFeatureIsDegenerate) {
  const Graph g = Wiring::parse("star:2").graph();
  const DenseMatrix x{{1, 0}, {0, 0}, {0, 1}};
  try {
    deviation_rate_bound(g, 0, x, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateFeature);
  }
  EXPECT_THROW(deviation_rate_bound(g, 0, x, 0.0), Error);
}

TEST(RateBound, MonotoneInAlphaAndT) {
  const Graph g = Wiring::parse("star:3").graph();
  const Vector v{1, 0, 0}, u{0, 1, 0};
  double last = std::numeric_limits<double>::infinity();
  for (double alpha : {0.0, 0.3, 0.6, 0.9, 1.0}) {
    DenseMatrix x(4, 3);
    x(0, 0) = 1.0;
    const DenseMatrix nb = aligned_neighbor_features(v, u, alpha, 3);
    for (std::size_t r = 0; r < 3; ++r) std::copy(nb.row(r).begin(), nb.row(r).end(), x.row(r + 1).begin());
    const double b = deviation_rate_bound(g, 0, x, 5.0).bound;
    EXPECT_LE(b, last + 1e-15);
    last = b;
    EXPECT_NEAR(deviation_rate_bound(g, 0, x, 10.0).bound, b / 2.0, 1e-15);
  }
}

TEST(Probe, Validation) {
  auto p = make_probe("star:2", 0.5, {1, 2, 3});
  EXPECT_NO_THROW(p.validate());
  auto bad = p;
  bad.v = {1, 1, 0};
  EXPECT_THROW(bad.validate(), Error);
  bad = p;
  bad.t_grid = {1, 1};
  EXPECT_THROW(bad.validate(), Error);
  bad = p;
  bad.t_grid = {};
  EXPECT_THROW(bad.validate(), Error);
  bad = p;
  bad.delta_t = 0.0;
  EXPECT_THROW(bad.validate(), Error);
  bad = p;
  bad.neighbor_features = DenseMatrix(3, 3);
  EXPECT_THROW(bad.validate(), Error);
  const DenseMatrix x = p.features_at(10.0);
  EXPECT_NEAR(x(0, 0), 6.0, 1e-15);
  EXPECT_NEAR(x(0, 1), 8.0, 1e-15);
  EXPECT_NEAR(norm2(x.row(1)), 1.0, 1e-15);
  EXPECT_NEAR(dot(x.row(1), p.v), 0.5, 1e-15);
}

TEST(Probe, IsolatedPmlpMatchesMlp) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Network net = small_relu_net(seed);
    const auto s = probe_slopes(network_predictor(net, false), network_predictor(net, true),
                                make_probe("isolated", 0.5, {1, 10, 100, 1000}));
    ASSERT_EQ(s.slopes.size(), 4u);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(s.slopes[k], s.mlp_slopes[k], 1e-9);
    EXPECT_EQ(s.coeff_factor, 1.0);
    EXPECT_EQ(s.d_max, 1u);
    // Deviation series collapses to the MLP one.
    const auto dev = deviation_series(s);
    for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(dev[k], std::abs(s.mlp_slopes[k] / s.c_v_hat - 1.0), 1e-9);
  }
}

TEST(Probe, MlpSlopesSettle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Network net = small_relu_net(seed + 10);
    const auto s = probe_slopes(network_predictor(net, false), network_predictor(net, true),
                                make_probe("star:2", 0.5, {10, 100, 1000}));
    if (s.mlp_slopes[1] == 0.0 || s.mlp_slopes[0] == 0.0) continue;
    const double late = std::abs(s.mlp_slopes[2] / s.mlp_slopes[1] - 1.0);
    const double early = std::abs(s.mlp_slopes[1] / s.mlp_slopes[0] - 1.0);
    EXPECT_LE(late, early + 1e-3) << "seed " << seed;
  }
}

TEST(Probe, NonFinitePredictionReportsT) {
  const ProbePredictor ok = [](const DenseMatrix& x, const Graph&) { return x(0, 0); };
  const ProbePredictor blowup = [](const DenseMatrix& x, const Graph&) {
    return x(0, 0) > 50 ? std::numeric_limits<double>::infinity() : x(0, 0);
  };
  try {
    probe_slopes(ok, blowup, make_probe("star:1", 0.5, {10, 100}));
    FAIL();
  } catch (const NumericalOverflow& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NumericalOverflow);
    EXPECT_EQ(e.t(), 100.0);
  }
}

TEST(Probe, OverflowingProbeInputIsReported) {
  const Network net = small_relu_net(1);
  auto p = make_probe("isolated", 0.5, {1e308});
  p.delta_t = 1e308;
  try {
    probe_slopes(network_predictor(net, false), network_predictor(net, true), p);
    FAIL();
  } catch (const NumericalOverflow& e) {
    EXPECT_EQ(e.t(), 1e308);
  }
}

TEST(Probe, LinearPredictorsGiveExactSlopes) {
  // f = mean over the closed neighborhood of the first coordinate: slope of
  // the PMLP-mode stub is v0 / d~_0.
  const ProbePredictor mlp = [](const DenseMatrix& x, const Graph&) { return 2.0 * x(0, 0); };
  const ProbePredictor mean = [](const DenseMatrix& x, const Graph& g) {
    double s = x(0, 0);
    for (NodeId j : g.neighbors(0)) s += x(j, 0);
    return 2.0 * s / static_cast<double>(g.degree_with_self(0));
  };
  const auto s = probe_slopes(mlp, mean, make_probe("star:3", 0.2, {1, 2}));
  EXPECT_NEAR(s.c_v_hat, 1.2, 1e-12);
  for (double sl : s.slopes) EXPECT_NEAR(sl, 0.3, 1e-12);
  EXPECT_NEAR(s.alpha_min, 0.2, 1e-12);
  EXPECT_EQ(s.d_max, 4u);
}

TEST(Probe, DeviationSeriesErrors) {
  SlopeSeries s;
  s.slopes = {1.0};
  s.c_v_hat = 0.0;
  EXPECT_THROW(deviation_series(s), Error);
  s.c_v_hat = 2.0;
  s.coeff_factor = 0.0;
  EXPECT_THROW(deviation_series(s), Error);
  s.coeff_factor = 0.5;
  EXPECT_NEAR(deviation_series(s)[0], 0.0, 1e-15);
}

TEST(KernelProbe, MlpKernelPredictorIsExactlyLinearAlongRays) {
  const auto m = kernel_model(3);
  const auto s = probe_slopes(m.predictor(false), m.predictor(true), make_probe("isolated", 0.5, {10, 100, 1000}));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(s.mlp_slopes[k], s.mlp_slopes[2], 1e-8 * std::abs(s.c_v_hat));
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(s.slopes[k], s.mlp_slopes[k], 1e-9);
}

TEST(KernelProbe, InfiniteWidthSlopeRatioApproachesDegreeFactor) {
  for (const char* w : {"star:2", "complete:3", "star:5"}) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const auto m = kernel_model(seed);
      const auto s = probe_slopes(m.predictor(false), m.predictor(true), make_probe(w, 0.5, {10, 100, 1e4, 1e6}));
      const auto dev = deviation_series(s);
      EXPECT_LT(dev.back(), 1e-3) << w << " seed " << seed;
      EXPECT_LT(dev[2], dev[0]) << w << " seed " << seed;
    }
  }
}

TEST(KernelProbe, BiasAugmentedModelStillLinearizes) {
  const auto m = [] {
    Rng rng(5);
    DenseMatrix x(16, 3);
    Vector y(16);
    for (std::size_t i = 0; i < 16; ++i) {
      for (double& v : x.row(i)) v = rng.normal();
      y[i] = x(i, 0) - x(i, 2);
    }
    return KernelProbeModel::fit(x, y, Ridge::fixed(1e-6), true);
  }();
  const auto s = probe_slopes(m.predictor(false), m.predictor(true), make_probe("star:2", 0.5, {10, 1e3, 1e5}));
  const auto dev = deviation_series(s);
  EXPECT_LT(dev.back(), dev.front());
  EXPECT_LT(std::abs(s.mlp_slopes[2] - s.mlp_slopes[1]), 1e-2 * std::abs(s.c_v_hat));
}
