#include "sgcn/training.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

#include "sgcn/errors.hpp"
#include "sgcn/io.hpp"
#include "sgcn/log.hpp"
#include "sgcn/ops.hpp"
#include "sgcn/rng.hpp"

namespace sgcn::train {

void TrainConfig::validate() const {
  if (epochs < 1 || batch_size < 1 || lr_decay_interval < 1 || t_obs < 1 || t_pred < 1 || num_samples < 1) {
    throw ConfigurationError("training counts must be positive");
  }
  if (!(lr > 0.0) || !(lr_decay_factor > 0.0)) throw ConfigurationError("learning rate and decay must be positive");
  if (!(xi >= 0.0 && xi <= 1.0)) throw ConfigurationError("threshold xi must lie in [0, 1]");
}

double learning_rate(const TrainConfig& config, std::size_t epoch) {
  return config.lr * std::pow(config.lr_decay_factor, static_cast<double>(epoch / config.lr_decay_interval));
}

ad::Tensor nll_loss(const repr::BiGaussianParams& params, const ad::Tensor& gt) {
  const auto& mu = params.mu;
  if (gt.shape() != mu.shape() || params.sigma.shape() != mu.shape() || params.rho.numel() * 2 != mu.numel()) {
    throw DimensionError("nll_loss: ground truth " + ad::to_string(gt.shape()) + " vs prediction " +
                         ad::to_string(mu.shape()));
  }
  const std::size_t points = params.rho.numel();
  const double n = static_cast<double>(params.num_pedestrians());
  const auto& m = mu.data();
  const auto& s = params.sigma.data();
  const auto& r = params.rho.data();
  const auto& g = gt.data();
  const double log_two_pi = std::log(2.0 * std::numbers::pi);

  double total = 0.0;
  // Per point: d/dmu (2), d/dsigma (2), d/drho (1).
  std::vector<double> dmu(points * 2), dsigma(points * 2), drho(points);
  for (std::size_t k = 0; k < points; ++k) {
    const bool sx_clamped = s[2 * k] < kSigmaFloor, sy_clamped = s[2 * k + 1] < kSigmaFloor;
    const double sx = sx_clamped ? kSigmaFloor : s[2 * k];
    const double sy = sy_clamped ? kSigmaFloor : s[2 * k + 1];
    const bool rho_clamped = std::abs(r[k]) > kRhoLimit;
    const double rho = rho_clamped ? std::copysign(kRhoLimit, r[k]) : r[k];
    const double q = 1.0 - rho * rho;
    const double a = (g[2 * k] - m[2 * k]) / sx;
    const double b = (g[2 * k + 1] - m[2 * k + 1]) / sy;
    const double z = a * a + b * b - 2.0 * rho * a * b;
    total += log_two_pi + std::log(sx) + std::log(sy) + 0.5 * std::log(q) + z / (2.0 * q);

    dmu[2 * k] = -(a - rho * b) / (q * sx);
    dmu[2 * k + 1] = -(b - rho * a) / (q * sy);
    dsigma[2 * k] = sx_clamped ? 0.0 : 1.0 / sx - (a * a - rho * a * b) / (q * sx);
    dsigma[2 * k + 1] = sy_clamped ? 0.0 : 1.0 / sy - (b * b - rho * a * b) / (q * sy);
    drho[k] = rho_clamped ? 0.0 : -rho / q - a * b / q + z * rho / (q * q);
  }

  auto imu = mu.impl(), isig = params.sigma.impl(), irho = params.rho.impl();
  return ad::record("bigaussian_nll", {1}, {total / n}, {mu, params.sigma, params.rho},
                    [=](const ad::detail::TensorImpl& out) {
                      const double go = out.grad[0] / n;
                      if (imu->requires_grad) {
                        auto& gm = imu->ensure_grad();
                        for (std::size_t i = 0; i < dmu.size(); ++i) gm[i] += go * dmu[i];
                      }
                      if (isig->requires_grad) {
                        auto& gs = isig->ensure_grad();
                        for (std::size_t i = 0; i < dsigma.size(); ++i) gs[i] += go * dsigma[i];
                      }
                      if (irho->requires_grad) {
                        auto& gr = irho->ensure_grad();
                        for (std::size_t i = 0; i < drho.size(); ++i) gr[i] += go * drho[i];
                      }
                    });
}

Adam::Adam(std::vector<ad::Tensor> params, AdamOptions options) : params_(std::move(params)), options_(options) {
  for (const auto& p : params_) {
    m_.emplace_back(p.numel(), 0.0);
    v_.emplace_back(p.numel(), 0.0);
  }
}

void Adam::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    auto w = p.mutable_data();
    const bool has_grad = p.has_grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double g = has_grad ? p.grad()[k] : 0.0;
      m[k] = options_.beta1 * m[k] + (1.0 - options_.beta1) * g;
      v[k] = options_.beta2 * v[k] + (1.0 - options_.beta2) * g * g;
      w[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + options_.eps);
    }
  }
}

namespace {

ad::Tensor scene_loss(const model::Model& model, const data::TrajectoryScene& scene) {
  try {
    auto pred = model.forward(scene.displacements_obs);
    return nll_loss(pred.params, scene.displacements_fut());
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " (scene '" + scene.scene + "', start frame " +
                       std::to_string(scene.start_frame) + ", " + std::to_string(scene.num_pedestrians()) +
                       " pedestrians)");
  }
}

}  // namespace

double dataset_nll(const model::Model& model, const std::vector<data::TrajectoryScene>& scenes) {
  if (scenes.empty()) return 0.0;
  ad::NoGradGuard no_grad;
  double total = 0.0;
  for (const auto& s : scenes) total += scene_loss(model, s).item();
  return total / static_cast<double>(scenes.size());
}

TrainResult train(model::Model& model, const TrainConfig& config, const std::vector<data::TrajectoryScene>& scenes,
                  const TrainHooks& hooks) {
  config.validate();
  if (scenes.empty()) throw ConfigurationError("training set is empty");
  if (model.config().t_obs != config.t_obs || model.config().t_pred != config.t_pred) {
    throw ConfigurationError("model window lengths differ from the training config");
  }
  model.set_xi(config.xi);

  std::vector<ad::Tensor> params;
  for (auto& [_, t] : model.parameters()) params.push_back(t);
  Adam adam(params);
  Rng rng(config.seed);
  TrainResult result;

  std::vector<std::size_t> order(scenes.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = learning_rate(config, epoch);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const double weight = 1.0 / static_cast<double>(end - begin);
      model.zero_grad();
      double batch_nll = 0.0;
      for (std::size_t i = begin; i < end; ++i) {
        auto loss = scene_loss(model, scenes[order[i]]);
        batch_nll += loss.item() * weight;
        ad::backward(ad::scale(loss, weight));
      }
      adam.step(lr);
      ++result.steps;
      LossRecord rec{epoch, result.steps, batch_nll, lr};
      result.curve.push_back(rec);
      if (hooks.on_step) hooks.on_step(rec);
      if (config.max_steps && result.steps >= config.max_steps) break;
    }
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model);
    if (config.max_steps && result.steps >= config.max_steps) break;
  }
  model.zero_grad();
  return result;
}

std::string loss_log_csv(const std::vector<LossRecord>& curve) {
  std::string out = "epoch,step,nll,lr\n";
  for (const auto& r : curve) {
    out += std::to_string(r.epoch) + "," + std::to_string(r.step) + "," + io::format_double(r.nll) + "," +
           io::format_double(r.lr) + "\n";
  }
  return out;
}

namespace {

void check_same_shape(const ad::Tensor& pred, const ad::Tensor& gt) {
  if (pred.shape() != gt.shape() || pred.rank() != 3 || pred.dim(2) != 2) {
    throw DimensionError("metric inputs must be equal [T, N, 2] shapes");
  }
}

// Euclidean distance of pedestrian n at step t.
double dist(const ad::Tensor& pred, const ad::Tensor& gt, std::size_t t, std::size_t n) {
  const std::size_t k = (t * pred.dim(1) + n) * 2;
  const double dx = pred.data()[k] - gt.data()[k];
  const double dy = pred.data()[k + 1] - gt.data()[k + 1];
  return std::hypot(dx, dy);
}

double ped_ade(const ad::Tensor& pred, const ad::Tensor& gt, std::size_t n) {
  double total = 0.0;
  for (std::size_t t = 0; t < pred.dim(0); ++t) total += dist(pred, gt, t, n);
  return total / static_cast<double>(pred.dim(0));
}

double ped_fde(const ad::Tensor& pred, const ad::Tensor& gt, std::size_t n) {
  return dist(pred, gt, pred.dim(0) - 1, n);
}

MetricsReport aggregate(std::vector<SceneMetrics> rows, std::size_t num_samples) {
  MetricsReport r;
  r.num_samples = num_samples;
  r.scenes = rows.size();
  double ade_sum = 0.0, fde_sum = 0.0;
  for (const auto& s : rows) {
    ade_sum += s.ade * static_cast<double>(s.pedestrians);
    fde_sum += s.fde * static_cast<double>(s.pedestrians);
    r.pedestrians += s.pedestrians;
  }
  if (r.pedestrians) {
    r.ade = ade_sum / static_cast<double>(r.pedestrians);
    r.fde = fde_sum / static_cast<double>(r.pedestrians);
  }
  r.per_scene = std::move(rows);
  return r;
}

}  // namespace

double ade(const ad::Tensor& pred, const ad::Tensor& gt) {
  check_same_shape(pred, gt);
  double total = 0.0;
  for (std::size_t n = 0; n < pred.dim(1); ++n) total += ped_ade(pred, gt, n);
  return total / static_cast<double>(pred.dim(1));
}

double fde(const ad::Tensor& pred, const ad::Tensor& gt) {
  check_same_shape(pred, gt);
  double total = 0.0;
  for (std::size_t n = 0; n < pred.dim(1); ++n) total += ped_fde(pred, gt, n);
  return total / static_cast<double>(pred.dim(1));
}

std::uint64_t sample_seed(std::uint64_t base, std::size_t scene_index, std::size_t sample_index) {
  return derive_seed(derive_seed(base, scene_index), sample_index);
}

MetricsReport evaluate_best_of_k(const model::Model& model, const std::vector<data::TrajectoryScene>& scenes,
                                 std::size_t num_samples, std::uint64_t seed, std::size_t jobs) {
  if (num_samples < 1) throw ConfigurationError("number of samples must be >= 1");
  const auto started = std::chrono::steady_clock::now();
  std::vector<SceneMetrics> rows(scenes.size());

  auto evaluate_scene = [&](std::size_t si) {
    ad::NoGradGuard no_grad;
    const auto& scene = scenes[si];
    const std::size_t n = scene.num_pedestrians(), t_obs = scene.t_obs();
    auto params = model.forward(scene.displacements_obs).params;
    auto last = scene.positions_obs.data().subspan((t_obs - 1) * n * 2, n * 2);
    std::vector<double> best_ade(n, std::numeric_limits<double>::infinity()), best_fde(n, 0.0);
    for (std::size_t k = 0; k < num_samples; ++k) {
      auto sample = repr::sample_trajectory(params, last, sample_seed(seed, si, k));
      for (std::size_t p = 0; p < n; ++p) {
        const double a = ped_ade(sample, scene.positions_fut, p);
        if (a < best_ade[p]) {
          best_ade[p] = a;
          best_fde[p] = ped_fde(sample, scene.positions_fut, p);
        }
      }
    }
    SceneMetrics m{scene.scene, scene.start_frame, n, 0.0, 0.0};
    for (std::size_t p = 0; p < n; ++p) {
      m.ade += best_ade[p];
      m.fde += best_fde[p];
    }
    m.ade /= static_cast<double>(n);
    m.fde /= static_cast<double>(n);
    rows[si] = m;
  };

  jobs = std::max<std::size_t>(1, std::min(jobs, scenes.size()));
  if (jobs == 1) {
    for (std::size_t si = 0; si < scenes.size(); ++si) evaluate_scene(si);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(jobs);
    for (std::size_t j = 0; j < jobs; ++j) {
      pool.emplace_back([&, j] {
        try {
          for (std::size_t si = j; si < scenes.size(); si += jobs) evaluate_scene(si);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  auto report = aggregate(std::move(rows), num_samples);
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return report;
}

MetricsReport evaluate_mean_path(const model::Model& model, const std::vector<data::TrajectoryScene>& scenes) {
  ad::NoGradGuard no_grad;
  std::vector<SceneMetrics> rows;
  for (const auto& scene : scenes) {
    const std::size_t n = scene.num_pedestrians(), t_obs = scene.t_obs();
    auto params = model.forward(scene.displacements_obs).params;
    auto last = scene.positions_obs.data().subspan((t_obs - 1) * n * 2, n * 2);
    auto path = repr::mean_trajectory(params, last);
    rows.push_back({scene.scene, scene.start_frame, n, ade(path, scene.positions_fut), fde(path, scene.positions_fut)});
  }
  return aggregate(std::move(rows), 0);
}

std::string metrics_csv(const MetricsReport& report) {
  std::string out = "scene,start_frame,pedestrians,ade,fde\n";
  for (const auto& s : report.per_scene) {
    out += s.scene + "," + std::to_string(s.start_frame) + "," + std::to_string(s.pedestrians) + "," +
           io::format_double(s.ade) + "," + io::format_double(s.fde) + "\n";
  }
  out += "ALL,," + std::to_string(report.pedestrians) + "," + io::format_double(report.ade) + "," +
         io::format_double(report.fde) + "\n";
  return out;
}

std::string metrics_summary(const MetricsReport& report) {
  std::ostringstream out;
  out.precision(4);
  out << std::fixed;
  out << "ADE: " << report.ade << " m\n"
      << "FDE: " << report.fde << " m\n"
      << "scenes: " << report.scenes << "\n"
      << "pedestrians: " << report.pedestrians << "\n"
      << "samples per scene: " << report.num_samples << "\n"
      << "wall-clock: " << report.seconds << " s\n";
  return out.str();
}

}  // namespace sgcn::train
