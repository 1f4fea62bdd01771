#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sgcn/errors.hpp"
#include "sgcn/io.hpp"
#include "sgcn/training.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace sgcn;
using ad::Tensor;
using fixtures::values;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

repr::BiGaussianParams params(std::vector<double> mu, std::vector<double> sigma, std::vector<double> rho,
                              std::size_t t, std::size_t n) {
  return {Tensor::from({t, n, 2}, std::move(mu)), Tensor::from({t, n, 2}, std::move(sigma)),
          Tensor::from({t, n}, std::move(rho))};
}

// Pushes the head towards sigma = e^-20 so samples collapse onto mu.
void shrink_sigma(model::Model& m) {
  auto w = m.tcn.head.weight.mutable_data();
  const std::size_t in = m.tcn.head.weight.dim(0);
  for (std::size_t i = 0; i < in; ++i) w[i * 5 + 2] = w[i * 5 + 3] = 0.0;
  auto b = m.tcn.head.bias.mutable_data();
  b[2] = b[3] = -20.0;
}

std::vector<data::TrajectoryScene> random_scenes(std::size_t count, std::size_t t_obs, std::size_t t_pred,
                                                 std::uint64_t seed) {
  std::vector<data::TrajectoryScene> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(fixtures::random_scene(2 + i % 3, t_obs, t_pred, seed + i));
  return out;
}

train::TrainConfig quick_config(std::size_t t_obs, std::size_t t_pred) {
  train::TrainConfig c;
  c.t_obs = t_obs;
  c.t_pred = t_pred;
  c.epochs = 2;
  c.batch_size = 2;
  c.seed = 5;
  return c;
}

}  // namespace

TEST(Nll, AtTheMean) {
  auto p = params({0.3, -0.2}, {1, 1}, {0}, 1, 1);
  EXPECT_NEAR(train::nll_loss(p, Tensor::from({1, 1, 2}, {0.3, -0.2})).item(), kLog2Pi, 1e-14);
}

TEST(Nll, UnitOffset) {
  auto p = params({0, 0}, {1, 1}, {0}, 1, 1);
  EXPECT_NEAR(train::nll_loss(p, Tensor::from({1, 1, 2}, {1, 0})).item(), 0.5 + kLog2Pi, 1e-14);
}

TEST(Nll, SumsStepsAndAveragesPedestrians) {
  Rng rng(1);
  std::vector<double> mu, sigma, rho, gt;
  for (int k = 0; k < 6; ++k) {
    mu.insert(mu.end(), {rng.uniform(-1, 1), rng.uniform(-1, 1)});
    sigma.insert(sigma.end(), {rng.uniform(0.2, 2), rng.uniform(0.2, 2)});
    rho.push_back(rng.uniform(-0.9, 0.9));
    gt.insert(gt.end(), {rng.uniform(-1, 1), rng.uniform(-1, 1)});
  }
  double want = 0.0;
  for (int k = 0; k < 6; ++k)
    want += oracle::bivariate_nll(gt[2 * k], gt[2 * k + 1], mu[2 * k], mu[2 * k + 1], sigma[2 * k], sigma[2 * k + 1],
                                  rho[k]);
  auto p = params(mu, sigma, rho, 3, 2);
  EXPECT_NEAR(train::nll_loss(p, Tensor::from({3, 2, 2}, gt)).item(), want / 2.0, 1e-12);
}

TEST(Nll, CorrelationIsClamped) {
  auto p = params({0, 0}, {1, 1}, {1.0}, 1, 1);
  const double v = train::nll_loss(p, Tensor::from({1, 1, 2}, {0.1, 0.1})).item();
  EXPECT_TRUE(std::isfinite(v));
  const double q = 1.0 - train::kRhoLimit * train::kRhoLimit;
  EXPECT_NEAR(v, kLog2Pi + 0.5 * std::log(q) + (0.02 - 2 * train::kRhoLimit * 0.01) / (2 * q), 1e-6);
}

TEST(Nll, ShapeMismatch) {
  auto p = params({0, 0}, {1, 1}, {0}, 1, 1);
  EXPECT_THROW(train::nll_loss(p, Tensor::zeros({2, 1, 2})), DimensionError);
}

TEST(Adam, ZeroGradientsLeaveWeightsUnchanged) {
  auto w = Tensor::from({3}, {1, -2, 3}, true);
  train::Adam opt({w});
  for (int i = 0; i < 10; ++i) opt.step(0.1);
  EXPECT_EQ(values(w), (std::vector<double>{1, -2, 3}));
}

TEST(Adam, FirstStepMagnitudeIsLearningRate) {
  auto w = Tensor::from({1}, {1.0}, true);
  w.mutable_grad()[0] = 0.5;
  train::Adam opt({w});
  opt.step(1e-3);
  EXPECT_NEAR(1.0 - w.data()[0], 1e-3, 1e-9);
}

TEST(Adam, QuadraticFollowsReferenceRecurrence) {
  // With lr 0.1 the momentum carries w past zero near step 12, so |w| only
  // shrinks monotonically up to the first crossing.
  auto w = Tensor::from({1}, {1.0}, true);
  train::Adam opt({w});
  double ref = 1.0, m = 0.0, v = 0.0, prev = 1.0;
  bool crossed = false;
  for (int t = 1; t <= 50; ++t) {
    w.zero_grad();
    ad::backward(ad::sum(ad::square(w)));
    opt.step(0.1);
    const double g = 2.0 * ref;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    ref -= 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    EXPECT_NEAR(w.data()[0], ref, 1e-12);
    crossed = crossed || w.data()[0] < 0.0;
    if (!crossed) EXPECT_LT(std::abs(w.data()[0]), prev);
    prev = std::abs(w.data()[0]);
  }
  EXPECT_LT(std::abs(w.data()[0]), 0.1);
}

TEST(Schedule, StepDecay) {
  train::TrainConfig c;
  EXPECT_NEAR(train::learning_rate(c, 0), 1e-3, 1e-18);
  EXPECT_NEAR(train::learning_rate(c, 49), 1e-3, 1e-18);
  EXPECT_NEAR(train::learning_rate(c, 50), 1e-4, 1e-18);
  EXPECT_NEAR(train::learning_rate(c, 100), 1e-5, 1e-18);
}

TEST(Metrics, AdeHandCases) {
  auto gt = Tensor::from({2, 1, 2}, {0, 0, 1, 1});
  EXPECT_EQ(train::ade(gt, gt), 0.0);
  EXPECT_EQ(train::ade(Tensor::from({2, 1, 2}, {1, 0, 2, 1}), gt), 1.0);
  EXPECT_EQ(train::ade(Tensor::from({2, 1, 2}, {3, 0, 1, 5}), gt), 3.5);
  EXPECT_THROW(train::ade(gt, Tensor::zeros({2, 2, 2})), DimensionError);
}

TEST(Metrics, FdeHandCases) {
  auto gt = Tensor::zeros({4, 2, 2});
  EXPECT_EQ(train::fde(gt, gt), 0.0);
  std::vector<double> last(16, 0.0);
  last[12 + 1] = 2.0;
  last[14 + 1] = 2.0;
  EXPECT_EQ(train::fde(Tensor::from({4, 2, 2}, last), gt), 2.0);
  EXPECT_EQ(train::ade(Tensor::from({4, 2, 2}, last), gt), 0.5);
  std::vector<double> mixed(16, 0.0);
  mixed[12] = 1.0;
  mixed[14] = 3.0;
  EXPECT_EQ(train::fde(Tensor::from({4, 2, 2}, mixed), gt), 2.0);
}

TEST(BestOfK, SingleSampleEqualsPlainMetrics) {
  auto m = model::Model::init(fixtures::small_config(4, 3), 2);
  auto scenes = random_scenes(3, 4, 3, 10);
  auto report = train::evaluate_best_of_k(m, scenes, 1, 9);
  double ade = 0.0, fde = 0.0;
  std::size_t peds = 0;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const auto& sc = scenes[s];
    const auto p = m.forward(sc.displacements_obs).params;
    const auto obs = values(sc.positions_obs);
    std::vector<double> last(obs.end() - static_cast<long>(sc.num_pedestrians() * 2), obs.end());
    auto draw = repr::sample_trajectory(p, last, train::sample_seed(9, s, 0));
    ade += train::ade(draw, sc.positions_fut) * static_cast<double>(sc.num_pedestrians());
    fde += train::fde(draw, sc.positions_fut) * static_cast<double>(sc.num_pedestrians());
    peds += sc.num_pedestrians();
  }
  EXPECT_NEAR(report.ade, ade / static_cast<double>(peds), 1e-12);
  EXPECT_NEAR(report.fde, fde / static_cast<double>(peds), 1e-12);
  EXPECT_EQ(report.pedestrians, peds);
}

TEST(BestOfK, MoreSamplesNeverHurt) {
  auto m = model::Model::init(fixtures::small_config(4, 3), 3);
  auto scenes = random_scenes(4, 4, 3, 20);
  const double one = train::evaluate_best_of_k(m, scenes, 1, 4).ade;
  const double many = train::evaluate_best_of_k(m, scenes, 20, 4).ade;
  EXPECT_LE(many, one);
}

TEST(BestOfK, TinySigmaMatchesMeanPath) {
  auto m = model::Model::init(fixtures::small_config(4, 3), 4);
  shrink_sigma(m);
  auto scenes = random_scenes(3, 4, 3, 30);
  auto best = train::evaluate_best_of_k(m, scenes, 20, 1);
  auto mean = train::evaluate_mean_path(m, scenes);
  EXPECT_NEAR(best.ade, mean.ade, 1e-6);
  EXPECT_NEAR(best.fde, mean.fde, 1e-6);
}

TEST(BestOfK, IndependentOfJobCount) {
  auto m = model::Model::init(fixtures::small_config(4, 3), 5);
  auto scenes = random_scenes(5, 4, 3, 40);
  auto a = train::evaluate_best_of_k(m, scenes, 5, 2, 1);
  auto b = train::evaluate_best_of_k(m, scenes, 5, 2, 3);
  EXPECT_EQ(train::metrics_csv(a), train::metrics_csv(b));
  EXPECT_THROW(train::evaluate_best_of_k(m, scenes, 0, 2), ConfigurationError);
}

TEST(Train, SeededRunsGiveIdenticalCurves) {
  auto scenes = random_scenes(4, 4, 3, 50);
  auto config = quick_config(4, 3);
  auto run = [&] {
    auto m = model::Model::init(fixtures::small_config(4, 3), config.seed);
    return train::loss_log_csv(train::train(m, config, scenes).curve);
  };
  const auto a = run();
  EXPECT_EQ(a, run());
  EXPECT_EQ(a.substr(0, a.find('\n')), "epoch,step,nll,lr");
}

TEST(Train, StepCountFollowsBatching) {
  auto scenes = random_scenes(5, 4, 3, 60);
  auto config = quick_config(4, 3);
  auto m = model::Model::init(fixtures::small_config(4, 3), 1);
  EXPECT_EQ(train::train(m, config, scenes).steps, 6u);  // ceil(5 / 2) per epoch
  config.max_steps = 4;
  m = model::Model::init(fixtures::small_config(4, 3), 1);
  EXPECT_EQ(train::train(m, config, scenes).steps, 4u);
}

TEST(Train, FullThresholdStillTrains) {
  auto scenes = random_scenes(4, 4, 3, 70);
  auto config = quick_config(4, 3);
  config.xi = 1.0;
  auto mc = fixtures::small_config(4, 3);
  mc.xi = 1.0;
  auto m = model::Model::init(mc, 2);
  const double before = train::dataset_nll(m, scenes);
  config.epochs = 20;
  auto result = train::train(m, config, scenes);
  for (const auto& r : result.curve) EXPECT_TRUE(std::isfinite(r.nll));
  EXPECT_LT(train::dataset_nll(m, scenes), before);
}

TEST(Train, EmptySetRejected) {
  auto m = model::Model::init(fixtures::small_config(4, 3), 1);
  EXPECT_THROW(train::train(m, quick_config(4, 3), {}), ConfigurationError);
}

TEST(Checkpoint, RoundTripIsExact) {
  auto m = model::Model::init(fixtures::small_config(4, 3), 8);
  const auto text = io::serialize_checkpoint(m);
  auto back = io::parse_checkpoint(text);
  EXPECT_EQ(back.config(), m.config());
  auto a = m.parameters(), b = back.parameters();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].first, b[i].first);
    EXPECT_EQ(values(a[i].second), values(b[i].second));
  }
  EXPECT_EQ(io::serialize_checkpoint(back), text);
}

TEST(Checkpoint, FileRoundTrip) {
  auto dir = fixtures::temp_dir("checkpoint");
  auto m = model::Model::init(fixtures::small_config(4, 3), 9);
  io::save_checkpoint(dir / "ck.txt", m);
  EXPECT_EQ(io::serialize_checkpoint(io::load_checkpoint(dir / "ck.txt")), io::serialize_checkpoint(m));
}

TEST(Checkpoint, CorruptedVersionNamesField) {
  auto text = io::serialize_checkpoint(model::Model::init(fixtures::small_config(4, 3), 1));
  text.replace(text.find("version 1"), 9, "version x");
  try {
    io::parse_checkpoint(text);
    FAIL() << "expected an error";
  } catch (const ConfigurationError& e) {
    EXPECT_NE(std::string(e.what()).find("version"), std::string::npos);
  }
}

TEST(Checkpoint, ShapeMismatchIsDescriptive) {
  auto text = io::serialize_checkpoint(model::Model::init(fixtures::small_config(4, 3), 1));
  const auto pos = text.find("graph.spatial.embed.weight 2 2 64");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 34, "graph.spatial.embed.weight 2 2 65");
  EXPECT_THROW(io::parse_checkpoint(text), ConfigurationError);
  EXPECT_THROW(io::parse_checkpoint("garbage"), ConfigurationError);
}

TEST(Format, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 0.0}) EXPECT_EQ(std::stod(io::format_double(v)), v);
  EXPECT_EQ(io::format_double(0.5), "0.5");
}
