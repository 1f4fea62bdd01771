#include "sgcn/commands.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <sstream>

#include "sgcn/data.hpp"
#include "sgcn/errors.hpp"
#include "sgcn/io.hpp"
#include "sgcn/log.hpp"

namespace sgcn::cli {

namespace fs = std::filesystem;

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

data::SceneTables load_tables(const RunConfig& c) {
  if (c.data_root.empty()) throw ConfigurationError("no data root given (use --data-root or SGCN_DATA_ROOT)");
  if (!fs::is_directory(c.data_root)) throw ConfigurationError("data root does not exist: " + c.data_root.string());
  auto tables = data::load_data_root(c.data_root, data::FieldOrder::parse(c.field_order));
  if (c.scenes.empty()) return tables;
  data::SceneTables picked;
  for (const auto& want : c.scenes) {
    bool found = false;
    for (const auto& [name, t] : tables) {
      if (lower(name) == lower(want)) {
        picked[name] = t;
        found = true;
      }
    }
    if (!found) throw ConfigurationError("scene '" + want + "' not found under " + c.data_root.string());
  }
  return picked;
}

void write_resolved(const RunConfig& c) {
  fs::create_directories(c.out);
  io::write_file_atomic(c.out / "resolved_config.txt", c.to_text());
}

model::Model load_model(const RunConfig& c) {
  auto m = io::load_checkpoint(c.checkpoint_path());
  const auto& mc = m.config();
  if (c.explicit_keys.count("t_obs") && c.train.t_obs != mc.t_obs) {
    throw DimensionError("t_obs " + std::to_string(c.train.t_obs) + " does not match checkpoint t_obs " +
                         std::to_string(mc.t_obs));
  }
  if (c.explicit_keys.count("t_pred") && c.train.t_pred != mc.t_pred) {
    throw DimensionError("t_pred " + std::to_string(c.train.t_pred) + " does not match checkpoint t_pred " +
                         std::to_string(mc.t_pred));
  }
  if (c.explicit_keys.count("xi")) m.set_xi(c.train.xi);
  return m;
}

// The checkpoint fixes the window lengths and xi; echo what was used.
RunConfig with_model_settings(RunConfig c, const model::Model& m) {
  c.train.t_obs = m.config().t_obs;
  c.train.t_pred = m.config().t_pred;
  c.train.xi = m.config().xi;
  return c;
}

data::ObservationWindow load_window(const RunConfig& c, std::size_t t_obs) {
  if (c.scene_file.empty()) throw ConfigurationError("no scene file given (use --scene-file)");
  auto table = data::load_scene_file(c.scene_file, data::FieldOrder::parse(c.field_order));
  auto window = data::observation_window(table, t_obs, c.start_frame);
  if (!window.dropped.empty()) {
    std::string ids;
    for (auto id : window.dropped) ids += " " + std::to_string(id);
    log::warn("pedestrians without " + std::to_string(t_obs) + " observed frames were dropped:" + ids);
  }
  return window;
}

std::string matrix_value(double v) {
  auto s = io::format_double(v);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace

void cmd_train(const RunConfig& c, std::ostream& out) {
  c.validate();
  auto tables = load_tables(c);
  auto split = data::leave_one_out_split(tables, c.train.holdout, c.train.t_obs, c.train.t_pred);
  auto scenes = c.train_fraction < 1.0 ? data::subsample(split.train_scenes, c.train_fraction, c.train.seed)
                                       : split.train_scenes;
  if (scenes.empty()) throw ConfigurationError("no training windows with holdout '" + split.holdout_name + "'");
  write_resolved(c);

  auto m = model::Model::init(c.model_config(), c.train.seed);
  log::info("training on " + std::to_string(scenes.size()) + " windows, holding out " + split.holdout_name + ", " +
            std::to_string(m.parameter_count()) + " parameters");

  std::vector<train::LossRecord> curve;
  train::TrainHooks hooks;
  hooks.on_step = [&](const train::LossRecord& r) { curve.push_back(r); };
  hooks.on_epoch_end = [&](std::size_t epoch, const model::Model& current) {
    io::save_checkpoint(c.checkpoint_path(), current);
    io::write_file_atomic(c.out / "loss_log.csv", train::loss_log_csv(curve));
    const double last = curve.empty() ? 0.0 : curve.back().nll;
    log::info("epoch " + std::to_string(epoch + 1) + "/" + std::to_string(c.train.epochs) +
              " nll=" + io::format_double(last));
  };
  auto result = train::train(m, c.train, scenes, hooks);
  io::save_checkpoint(c.checkpoint_path(), m);
  io::write_file_atomic(c.out / "loss_log.csv", train::loss_log_csv(result.curve));

  out << "trained " << result.steps << " steps on " << scenes.size() << " windows\n";
  if (!result.curve.empty()) out << "final nll " << io::format_double(result.curve.back().nll) << "\n";
  out << "checkpoint " << c.checkpoint_path().string() << "\n";
}

void cmd_eval(const RunConfig& config, std::ostream& out) {
  config.validate();
  auto m = load_model(config);
  const RunConfig c = with_model_settings(config, m);
  auto tables = load_tables(c);
  auto split = data::leave_one_out_split(tables, c.train.holdout, c.train.t_obs, c.train.t_pred);
  auto scenes = c.test_limit > 0 && c.test_limit < split.test_scenes.size()
                    ? data::take_subsample(split.test_scenes, c.test_limit, c.train.seed)
                    : split.test_scenes;
  if (scenes.empty()) throw ConfigurationError("holdout '" + split.holdout_name + "' has no test windows");
  write_resolved(c);

  auto report = train::evaluate_best_of_k(m, scenes, c.train.num_samples, c.train.seed, c.jobs);
  io::write_file_atomic(c.out / "metrics.csv", train::metrics_csv(report));
  const auto summary = train::metrics_summary(report);
  io::write_file_atomic(c.out / "metrics_summary.txt", summary);
  out << "holdout " << split.holdout_name << "\n" << summary;
}

void cmd_predict(const RunConfig& config, std::ostream& out) {
  config.validate();
  auto m = load_model(config);
  const RunConfig c = with_model_settings(config, m);
  auto window = load_window(c, c.train.t_obs);
  const auto& scene = window.scene;
  write_resolved(c);

  ad::NoGradGuard no_grad;
  auto pred = m.forward(scene.displacements_obs);
  const std::size_t n = scene.num_pedestrians(), t_obs = c.train.t_obs, t_pred = c.train.t_pred;
  const auto& obs = scene.positions_obs.data();
  std::vector<double> last(obs.end() - static_cast<std::ptrdiff_t>(n * 2), obs.end());

  // Observed rows, then the mean path with its per-step spread, then the
  // samples. Spread columns are empty on rows that have none.
  std::ostringstream csv;
  csv << "pedestrian,kind,sample,step,x,y,sigma_x,sigma_y,rho\n";
  const auto& sigma = pred.params.sigma.data();
  const auto& rho = pred.params.rho.data();
  auto rows = [&](const ad::Tensor& positions, const char* kind, long sample, std::size_t steps,
                  std::size_t step_offset, bool spread) {
    const auto& p = positions.data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t t = 0; t < steps; ++t) {
        csv << scene.pedestrian_ids[i] << ',' << kind << ',' << sample << ',' << (t + step_offset) << ','
            << io::format_double(p[(t * n + i) * 2]) << ',' << io::format_double(p[(t * n + i) * 2 + 1]);
        if (spread) {
          csv << ',' << io::format_double(sigma[(t * n + i) * 2]) << ',' << io::format_double(sigma[(t * n + i) * 2 + 1])
              << ',' << io::format_double(rho[t * n + i]) << '\n';
        } else {
          csv << ",,,\n";
        }
      }
  };
  rows(scene.positions_obs, "observed", -1, t_obs, 0, false);
  rows(repr::mean_trajectory(pred.params, last), "mean", -1, t_pred, t_obs, true);
  for (std::size_t k = 0; k < c.train.num_samples; ++k) {
    auto sample = repr::sample_trajectory(pred.params, last, train::sample_seed(c.train.seed, 0, k));
    rows(sample, "sample", static_cast<long>(k), t_pred, t_obs, false);
  }
  const auto path = c.out / "predictions.csv";
  io::write_file_atomic(path, csv.str());
  out << "predicted " << n << " pedestrians from frame " << scene.start_frame << " with " << c.train.num_samples
      << " samples\n"
      << "wrote " << path.string() << "\n";
}

void cmd_dump_graphs(const RunConfig& config, std::ostream& out) {
  config.validate();
  auto m = load_model(config);
  const RunConfig c = with_model_settings(config, m);
  auto window = load_window(c, c.train.t_obs);
  const auto& scene = window.scene;
  write_resolved(c);

  ad::NoGradGuard no_grad;
  auto pred = m.forward(scene.displacements_obs);
  const std::size_t n = scene.num_pedestrians(), t_obs = c.train.t_obs;

  // Entry (i, j) is the influence of row node i on column node j.
  std::ostringstream spa;
  const auto& a_spa = pred.spatial.adjacency.normalized.data();
  for (std::size_t t = 0; t < t_obs; ++t) {
    spa << "# spatial step " << t << " (rows: source pedestrian, columns: target pedestrian)\n";
    spa << "ped";
    for (auto id : scene.pedestrian_ids) spa << ' ' << id;
    spa << '\n';
    for (std::size_t i = 0; i < n; ++i) {
      spa << scene.pedestrian_ids[i];
      for (std::size_t j = 0; j < n; ++j) spa << ' ' << matrix_value(a_spa[(t * n + i) * n + j]);
      spa << '\n';
    }
    spa << '\n';
  }
  std::ostringstream tmp;
  const auto& a_tmp = pred.temporal.adjacency.normalized.data();
  for (std::size_t i = 0; i < n; ++i) {
    tmp << "# temporal pedestrian " << scene.pedestrian_ids[i] << " (rows: source step, columns: target step)\n";
    tmp << "step";
    for (std::size_t t = 0; t < t_obs; ++t) tmp << ' ' << t;
    tmp << '\n';
    for (std::size_t s = 0; s < t_obs; ++s) {
      tmp << s;
      for (std::size_t t = 0; t < t_obs; ++t) tmp << ' ' << matrix_value(a_tmp[(i * t_obs + s) * t_obs + t]);
      tmp << '\n';
    }
    tmp << '\n';
  }
  io::write_file_atomic(c.out / "spatial_graphs.txt", spa.str());
  io::write_file_atomic(c.out / "temporal_graphs.txt", tmp.str());

  auto density = [](const ad::Mask& mask) {
    const auto on = std::count_if(mask.on.begin(), mask.on.end(), [](std::uint8_t v) { return v != 0; });
    return mask.on.empty() ? 0.0 : static_cast<double>(on) / static_cast<double>(mask.on.size());
  };
  out << "pedestrians " << n << ", steps " << t_obs << "\n"
      << "spatial mask density " << io::format_double(density(pred.spatial.adjacency.mask)) << "\n"
      << "temporal mask density " << io::format_double(density(pred.temporal.adjacency.mask)) << "\n"
      << "wrote " << (c.out / "spatial_graphs.txt").string() << " and " << (c.out / "temporal_graphs.txt").string()
      << "\n";
}

void run_command(const RunConfig& config, std::ostream& out) {
  if (config.command == "train") cmd_train(config, out);
  else if (config.command == "eval") cmd_eval(config, out);
  else if (config.command == "predict") cmd_predict(config, out);
  else if (config.command == "dump-graphs") cmd_dump_graphs(config, out);
  else throw ConfigurationError("unknown command '" + config.command + "'");
}

}  // namespace sgcn::cli
