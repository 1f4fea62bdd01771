#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sgcn/commands.hpp"
#include "sgcn/errors.hpp"
#include "sgcn/log.hpp"

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

const std::vector<Flag> kFlags{
    {"--data-root", "data_root", "directory of scene files (default: $SGCN_DATA_ROOT)"},
    {"--scenes", "scenes", "comma-separated scene names to load (default: all)"},
    {"--field-order", "field_order", "column layout of scene files, e.g. frame,ped,x,y"},
    {"--holdout", "holdout", "scene held out for testing"},
    {"--t-obs", "t_obs", "observed steps"},
    {"--t-pred", "t_pred", "predicted steps"},
    {"--epochs", "epochs", "training epochs"},
    {"--batch-size", "batch_size", "windows per optimizer step"},
    {"--lr", "lr", "initial learning rate"},
    {"--lr-decay-factor", "lr_decay_factor", "learning rate decay factor"},
    {"--lr-decay-interval", "lr_decay_interval", "epochs between decays"},
    {"--xi", "xi", "sparsity threshold in [0, 1]"},
    {"--seed", "seed", "random seed"},
    {"--num-samples", "num_samples", "sampled trajectories per window"},
    {"--max-steps", "max_steps", "stop after this many optimizer steps (0: no limit)"},
    {"--train-fraction", "train_fraction", "fraction of training windows to use"},
    {"--test-limit", "test_limit", "evaluate at most this many test windows (0: all)"},
    {"--jobs", "jobs", "evaluation worker threads"},
    {"--out", "out", "output directory"},
    {"--checkpoint", "checkpoint", "checkpoint path (default: <out>/checkpoint.txt)"},
    {"--scene-file", "scene_file", "scene file for predict and dump-graphs"},
    {"--start-frame", "start_frame", "first observed frame for predict and dump-graphs"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse graph trajectory predictor"};
  app.require_subcommand(1);

  std::string config_path;
  std::string log_level = "info";
  std::map<std::string, std::string> values;
  std::vector<CLI::Option*> options;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"train", "train a model with leave-one-scene-out"},
      {"eval", "best-of-K ADE/FDE on the held-out scene"},
      {"predict", "predict trajectories for one scene file"},
      {"dump-graphs", "write the sparse spatial and temporal adjacencies"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value config file; flags take precedence");
    sub->add_option("--log-level", log_level, "debug, info, warn, error or off");
    for (const auto& f : kFlags) options.push_back(sub->add_option(f.name, values[f.key], f.help));
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  try {
    sgcn::log::set_level(sgcn::log::parse_level(log_level));
    sgcn::cli::RunConfig config;
    if (const char* env = std::getenv("SGCN_DATA_ROOT"); env && *env) config.data_root = env;
    if (!config_path.empty()) config.load_file(config_path);
    for (auto* opt : options) {
      if (opt->count() == 0) continue;
      for (const auto& f : kFlags) {
        if (opt->check_lname(std::string(f.name).substr(2))) config.set(f.key, values[f.key]);
      }
    }
    for (std::size_t i = 0; i < subs.size(); ++i) {
      if (subs[i]->parsed()) config.command = commands[i].first;
    }
    sgcn::cli::run_command(config, std::cout);
  } catch (const sgcn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
