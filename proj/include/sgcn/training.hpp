#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sgcn/data.hpp"
#include "sgcn/model.hpp"

namespace sgcn::train {

struct TrainConfig {
  std::size_t epochs = 150;
  std::size_t batch_size = 128;  // scenes per optimizer step
  double lr = 1e-3;
  double lr_decay_factor = 0.1;
  std::size_t lr_decay_interval = 50;  // epochs
  double xi = 0.5;
  std::uint64_t seed = 0;
  std::string holdout = "ZARA1";
  std::size_t t_obs = 8;
  std::size_t t_pred = 12;
  std::size_t num_samples = 20;
  // Stop after this many optimizer steps in total (0: no limit).
  std::size_t max_steps = 0;

  void validate() const;
};

double learning_rate(const TrainConfig& config, std::size_t epoch);

// Sum over steps and pedestrians of the bi-variate normal negative
// log-density of `gt` [T, N, 2], divided by N. sigma is floored at 1e-8 and
// |rho| clamped to 1 - 1e-6.
ad::Tensor nll_loss(const repr::BiGaussianParams& params, const ad::Tensor& gt);

inline constexpr double kSigmaFloor = 1e-8;
inline constexpr double kRhoLimit = 1.0 - 1e-6;

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(std::vector<ad::Tensor> params, AdamOptions options = {});

  // Applies one bias-corrected update from the params' accumulated grads
  // (missing grads count as zero).
  void step(double lr);
  std::size_t steps_taken() const { return t_; }

 private:
  std::vector<ad::Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamOptions options_;
  std::size_t t_ = 0;
};

struct LossRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double nll = 0.0;
  double lr = 0.0;
};

struct TrainHooks {
  // Called after every epoch with the zero-based epoch index.
  std::function<void(std::size_t epoch, const model::Model&)> on_epoch_end;
  std::function<void(const LossRecord&)> on_step;
};

struct TrainResult {
  std::vector<LossRecord> curve;
  std::size_t steps = 0;
};

// Mean per-scene loss of `scenes` at the current weights.
double dataset_nll(const model::Model& model, const std::vector<data::TrajectoryScene>& scenes);

TrainResult train(model::Model& model, const TrainConfig& config, const std::vector<data::TrajectoryScene>& scenes,
                  const TrainHooks& hooks = {});

std::string loss_log_csv(const std::vector<LossRecord>& curve);

// Mean Euclidean distance over all steps and pedestrians.
double ade(const ad::Tensor& pred, const ad::Tensor& gt);
// Mean Euclidean distance at the last step.
double fde(const ad::Tensor& pred, const ad::Tensor& gt);

struct SceneMetrics {
  std::string scene;
  std::int64_t start_frame = 0;
  std::size_t pedestrians = 0;
  double ade = 0.0;
  double fde = 0.0;
};

struct MetricsReport {
  double ade = 0.0;  // meters, averaged over pedestrians of all scenes
  double fde = 0.0;
  std::size_t scenes = 0;
  std::size_t pedestrians = 0;
  std::size_t num_samples = 0;
  double seconds = 0.0;
  std::vector<SceneMetrics> per_scene;
};

// Best-of-K per pedestrian: among K sampled trajectories keep, for each
// pedestrian, the one with the smallest ADE and report its ADE and FDE.
// Samples use seeds derived from (seed, scene index, sample index), so the
// result does not depend on `jobs`.
MetricsReport evaluate_best_of_k(const model::Model& model, const std::vector<data::TrajectoryScene>& scenes,
                                 std::size_t num_samples, std::uint64_t seed, std::size_t jobs = 1);

// Metrics of the mean (mu) trajectory.
MetricsReport evaluate_mean_path(const model::Model& model, const std::vector<data::TrajectoryScene>& scenes);

std::string metrics_csv(const MetricsReport& report);
std::string metrics_summary(const MetricsReport& report);

// Seed for sample k of scene s under a base seed.
std::uint64_t sample_seed(std::uint64_t base, std::size_t scene_index, std::size_t sample_index);

}  // namespace sgcn::train
