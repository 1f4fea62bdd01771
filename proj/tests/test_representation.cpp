#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "sgcn/errors.hpp"
#include "sgcn/model.hpp"
#include "sgcn/representation.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace sgcn;
using ad::Tensor;
using fixtures::values;

namespace {

Tensor identity_slices(std::size_t b, std::size_t m) {
  std::vector<double> v(b * m * m, 0.0);
  for (std::size_t k = 0; k < b; ++k)
    for (std::size_t i = 0; i < m; ++i) v[(k * m + i) * m + i] = 1.0;
  return Tensor::from({b, m, m}, v);
}

// Row-stochastic random slices, upper triangular when `upper` is set.
Tensor random_adjacency(std::size_t b, std::size_t m, Rng& rng, bool upper = false) {
  std::vector<double> v(b * m * m, 0.0);
  for (std::size_t k = 0; k < b; ++k)
    for (std::size_t i = 0; i < m; ++i) {
      double row = 0.0;
      for (std::size_t j = upper ? i : 0; j < m; ++j) row += v[(k * m + i) * m + j] = rng.uniform(0.1, 1.0);
      for (std::size_t j = 0; j < m; ++j) v[(k * m + i) * m + j] /= row;
    }
  return Tensor::from({b, m, m}, v);
}

oracle::Branches as_oracle(const repr::BranchWeights& w) {
  return {values(w.spa1), values(w.tmp1), values(w.tmp2), values(w.spa2),
          w.slope_spa1.item(), w.slope_tmp1.item(), w.slope_tmp2.item(), w.slope_spa2.item()};
}

repr::BiGaussianParams constant_params(std::size_t t, std::size_t n, double mx, double my, double sx, double sy,
                                       double rho) {
  repr::BiGaussianParams p;
  std::vector<double> mu, sigma;
  for (std::size_t k = 0; k < t * n; ++k) {
    mu.insert(mu.end(), {mx, my});
    sigma.insert(sigma.end(), {sx, sy});
  }
  p.mu = Tensor::from({t, n, 2}, mu);
  p.sigma = Tensor::from({t, n, 2}, sigma);
  p.rho = Tensor::full({t, n}, rho);
  return p;
}

}  // namespace

TEST(Gcn, IdentityPropagation) {
  Rng rng(1);
  auto h = fixtures::random_tensor({2, 3, 4}, rng, 0, 1);
  auto w = Tensor::from({4, 4}, {1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1});
  EXPECT_EQ(values(repr::gcn_layer(identity_slices(2, 3), h, w, prelu_slope())), values(h));
}

TEST(Gcn, ReceiverCopiesItsSingleInfluencer) {
  // Entry (i, j) is the influence of i on j: node 2 listens only to node 0.
  Rng rng(2);
  auto h = fixtures::random_tensor({1, 3, 2}, rng, 0, 1);
  auto a = Tensor::from({1, 3, 3}, {1, 0, 1, 0, 1, 0, 0, 0, 0});
  auto out = values(repr::gcn_layer(a, h, Tensor::from({2, 2}, {1, 0, 0, 1}), prelu_slope()));
  auto in = values(h);
  EXPECT_EQ(out[4], in[0]);
  EXPECT_EQ(out[5], in[1]);
}

TEST(Gcn, MatchesLoopOracle) {
  Rng rng(3);
  auto a = random_adjacency(2, 4, rng);
  auto h = fixtures::random_tensor({2, 4, 3}, rng);
  auto w = fixtures::random_tensor({3, 3}, rng);
  auto got = values(repr::gcn_layer(a, h, w, prelu_slope(0.3)));
  for (std::size_t b = 0; b < 2; ++b) {
    auto av = values(a), hv = values(h);
    auto ref = oracle::gcn({av.begin() + b * 16, av.begin() + (b + 1) * 16},
                           {hv.begin() + b * 12, hv.begin() + (b + 1) * 12}, values(w), 4, 3, 3, 0.3);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_NEAR(got[b * 12 + i], ref[i], 1e-14);
  }
}

TEST(Gcn, ShapeMismatch) {
  EXPECT_THROW(repr::gcn_layer(Tensor::zeros({1, 3, 3}), Tensor::zeros({1, 2, 4}), Tensor::zeros({4, 4}),
                               prelu_slope()),
               DimensionError);
}

TEST(Branches, SingleNodeSingleStepIsTwoPreluMaps) {
  Rng rng(4);
  auto w = repr::BranchWeights::init(3, rng);
  auto h = fixtures::random_tensor({1, 1, 3}, rng);
  auto one = Tensor::from({1, 1, 1}, {1.0});
  auto got = values(repr::interaction_tendency_branch(one, one, h, w));
  auto hv = values(h), s1 = values(w.spa1), t1 = values(w.tmp1);
  std::vector<double> mid(3, 0.0), want(3, 0.0);
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t e = 0; e < 3; ++e) mid[c] += hv[e] * s1[e * 3 + c];
    mid[c] = oracle::prelu(mid[c], w.slope_spa1.item());
  }
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t e = 0; e < 3; ++e) want[c] += mid[e] * t1[e * 3 + c];
    EXPECT_NEAR(got[c], oracle::prelu(want[c], w.slope_tmp1.item()), 1e-15);
  }
}

TEST(Branches, IdentitySpatialGraphDoesNotMixPedestrians) {
  Rng rng(5);
  auto w = repr::BranchWeights::init(4, rng);
  auto a_tmp = random_adjacency(3, 5, rng, true);
  auto h = fixtures::random_tensor({5, 3, 4}, rng);
  auto base = values(repr::interaction_tendency_branch(identity_slices(5, 3), a_tmp, h, w));
  auto hv = values(h);
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t e = 0; e < 4; ++e) hv[(t * 3 + 2) * 4 + e] += 1.0;  // perturb pedestrian 2
  auto moved = values(repr::interaction_tendency_branch(identity_slices(5, 3), a_tmp, Tensor::from({5, 3, 4}, hv), w));
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t p = 0; p < 2; ++p)
      for (std::size_t e = 0; e < 4; ++e) EXPECT_EQ(base[(t * 3 + p) * 4 + e], moved[(t * 3 + p) * 4 + e]);
}

TEST(Branches, MatchLoopOracles) {
  Rng rng(6);
  const std::size_t t = 4, n = 3, f = 5;
  auto w = repr::BranchWeights::init(f, rng);
  auto a_spa = random_adjacency(t, n, rng), a_tmp = random_adjacency(n, t, rng, true);
  auto h_spa = fixtures::random_tensor({t, n, f}, rng), h_tmp = fixtures::random_tensor({n, t, f}, rng);
  auto itf = values(repr::interaction_tendency_branch(a_spa, a_tmp, h_spa, w));
  auto tif = values(repr::tendency_interaction_branch(a_spa, a_tmp, h_tmp, w));
  auto ref_itf = oracle::interaction_tendency(values(a_spa), values(a_tmp), values(h_spa), t, n, f, as_oracle(w));
  auto ref_tif = oracle::tendency_interaction(values(a_spa), values(a_tmp), values(h_tmp), t, n, f, as_oracle(w));
  for (std::size_t i = 0; i < itf.size(); ++i) {
    EXPECT_NEAR(itf[i], ref_itf[i], 1e-13);
    EXPECT_NEAR(tif[i], ref_tif[i], 1e-13);
  }
}

TEST(Branches, FeedingOrderMatters) {
  Rng rng(7);
  const std::size_t t = 4, n = 3, f = 5;
  auto w = repr::BranchWeights::init(f, rng);
  auto a_spa = random_adjacency(t, n, rng), a_tmp = random_adjacency(n, t, rng, true);
  auto h = fixtures::random_tensor({t, n, f}, rng);
  auto itf = values(repr::interaction_tendency_branch(a_spa, a_tmp, h, w));
  auto tif = values(repr::tendency_interaction_branch(a_spa, a_tmp, ad::permute(h, {1, 0, 2}), w));
  EXPECT_NE(itf, tif);
}

TEST(Fuse, SumProperties) {
  Rng rng(8);
  auto a = fixtures::random_tensor({2, 3, 4}, rng), b = fixtures::random_tensor({2, 3, 4}, rng);
  EXPECT_EQ(values(repr::fuse_branches(a, Tensor::zeros({2, 3, 4}))), values(a));
  EXPECT_EQ(values(repr::fuse_branches(a, b)), values(repr::fuse_branches(b, a)));
  auto got = values(repr::fuse_branches(a, b)), av = values(a), bv = values(b);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i], av[i] + bv[i]);
  EXPECT_THROW(repr::fuse_branches(a, Tensor::zeros({2, 4, 3})), DimensionError);
}

TEST(Tcn, ZeroWeightsGiveStandardNormal) {
  Rng rng(9);
  auto w = repr::TcnWeights::init(8, 12, 16, 4, 3, rng);
  for (auto& layer : w.layers) {
    for (auto& x : layer.conv.kernel.mutable_data()) x = 0.0;
    for (auto& x : layer.conv.bias.mutable_data()) x = 0.0;
  }
  for (auto& x : w.head.weight.mutable_data()) x = 0.0;
  for (auto& x : w.head.bias.mutable_data()) x = 0.0;
  auto p = repr::tcn_head(fixtures::random_tensor({8, 3, 16}, rng), w);
  ASSERT_EQ(p.mu.shape(), (ad::Shape{12, 3, 2}));
  ASSERT_EQ(p.rho.shape(), (ad::Shape{12, 3}));
  for (double v : values(p.mu)) EXPECT_EQ(v, 0.0);
  for (double v : values(p.sigma)) EXPECT_EQ(v, 1.0);
  for (double v : values(p.rho)) EXPECT_EQ(v, 0.0);
}

TEST(Tcn, OutputRangesHoldForRandomInputs) {
  Rng rng(10);
  auto w = repr::TcnWeights::init(8, 12, 64, 4, 3, rng);
  for (int trial = 0; trial < 1000; ++trial) {
    auto p = repr::tcn_head(fixtures::random_tensor({8, 1, 64}, rng, -3, 3), w);
    for (double s : values(p.sigma)) ASSERT_GT(s, 0.0);
    for (double r : values(p.rho)) ASSERT_LT(std::abs(r), 1.0);
  }
}

TEST(Sampling, TinySigmaCollapsesOntoMeanPath) {
  auto p = constant_params(12, 2, 0.3, -0.1, 1e-8, 1e-8, 0.0);
  std::vector<double> last{1.0, 2.0, -3.0, 0.5};
  auto mean = values(repr::mean_trajectory(p, last));
  auto draw = values(repr::sample_trajectory(p, last, 42));
  for (std::size_t i = 0; i < mean.size(); ++i) EXPECT_NEAR(draw[i], mean[i], 1e-6);
  EXPECT_NEAR(mean[0], 1.3, 1e-12);
  EXPECT_NEAR(mean[mean.size() - 1], 0.5 - 1.2, 1e-12);
}

TEST(Sampling, FixedSeedIsBitIdentical) {
  auto p = constant_params(12, 3, 0.1, 0.2, 0.5, 0.8, -0.3);
  std::vector<double> last(6, 0.0);
  EXPECT_EQ(values(repr::sample_trajectory(p, last, 7)), values(repr::sample_trajectory(p, last, 7)));
  EXPECT_NE(values(repr::sample_trajectory(p, last, 7)), values(repr::sample_trajectory(p, last, 8)));
}

TEST(Sampling, CorrelationMatchesRho) {
  auto p = constant_params(1, 1, 0.0, 0.0, 1.0, 2.0, 0.5);
  std::vector<double> last{0.0, 0.0};
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    auto d = repr::sample_trajectory(p, last, derive_seed(3, static_cast<std::uint64_t>(i)));
    const double x = d.data()[0], y = d.data()[1];
    sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y;
  }
  const double n = draws, cov = sxy / n - sx * sy / n / n;
  const double vx = sxx / n - sx * sx / n / n, vy = syy / n - sy * sy / n / n;
  EXPECT_NEAR(cov / std::sqrt(vx * vy), 0.5, 0.02);
}

namespace {

// Replaces every asymmetric conv with a centered row delta so the cascade is
// pointwise; the sliding kernels otherwise couple neighbouring pedestrian indices.
void make_conv_stack_pointwise(model::Model& m) {
  for (auto* branch : {&m.graph.spatial, &m.graph.temporal})
    for (auto& layer : branch->asym) {
      const std::size_t c = layer.row.kernel.dim(0), s = layer.row.kernel.dim(3);
      for (auto& x : layer.row.kernel.mutable_data()) x = 0.0;
      for (auto& x : layer.row.bias.mutable_data()) x = 0.0;
      for (auto& x : layer.col.kernel.mutable_data()) x = 0.0;
      for (auto& x : layer.col.bias.mutable_data()) x = 0.0;
      auto k = layer.row.kernel.mutable_data();
      for (std::size_t i = 0; i < c; ++i) k[(i * c + i) * s + s / 2] = 1.0;
    }
}

}  // namespace

TEST(Model, ForwardShapeContract) {
  auto m = model::Model::init(fixtures::small_config(8, 12), 1);
  auto scene = fixtures::random_scene(4, 8, 12, 2);
  auto p = m.forward(scene.displacements_obs);
  EXPECT_EQ(p.params.mu.shape(), (ad::Shape{12, 4, 2}));
  EXPECT_EQ(p.params.sigma.shape(), (ad::Shape{12, 4, 2}));
  EXPECT_EQ(p.params.rho.shape(), (ad::Shape{12, 4}));
  EXPECT_EQ(p.spatial.adjacency.normalized.shape(), (ad::Shape{8, 4, 4}));
  EXPECT_EQ(p.temporal.adjacency.normalized.shape(), (ad::Shape{4, 8, 8}));
  EXPECT_THROW(m.forward(Tensor::zeros({7, 4, 2})), DimensionError);
}

TEST(Model, PermutationEquivariantWithPointwiseConvStack) {
  auto m = model::Model::init(fixtures::small_config(8, 12), 3);
  make_conv_stack_pointwise(m);
  auto scene = fixtures::random_scene(4, 8, 12, 4);
  const std::vector<std::size_t> perm{2, 0, 3, 1};
  auto d = values(scene.displacements_obs);
  std::vector<double> permuted(d.size());
  for (std::size_t t = 0; t < 8; ++t)
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t c = 0; c < 2; ++c) permuted[(t * 4 + i) * 2 + c] = d[(t * 4 + perm[i]) * 2 + c];
  auto a = m.forward(scene.displacements_obs).params;
  auto b = m.forward(Tensor::from({8, 4, 2}, permuted)).params;
  auto mu_a = values(a.mu), mu_b = values(b.mu), rho_a = values(a.rho), rho_b = values(b.rho);
  for (std::size_t t = 0; t < 12; ++t)
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(mu_b[(t * 4 + i) * 2 + c], mu_a[(t * 4 + perm[i]) * 2 + c], 1e-10);
      EXPECT_NEAR(rho_b[t * 4 + i], rho_a[t * 4 + perm[i]], 1e-10);
    }
}

TEST(Model, CloneIsIndependent) {
  auto m = model::Model::init(fixtures::small_config(4, 3), 5);
  auto c = m.clone();
  c.parameters()[0].second.mutable_data()[0] += 1.0;
  EXPECT_NE(m.parameters()[0].second.data()[0], c.parameters()[0].second.data()[0]);
  EXPECT_EQ(m.parameter_count(), c.parameter_count());
}
