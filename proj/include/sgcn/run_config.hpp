#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "sgcn/model.hpp"
#include "sgcn/training.hpp"

namespace sgcn::cli {

// Fully explicit settings of one CLI run. Resolution order, lowest first:
// built-in defaults, SGCN_DATA_ROOT (data_root only), the --config file,
// command-line flags.
struct RunConfig {
  std::string command;
  std::filesystem::path data_root;
  std::vector<std::string> scenes;  // empty: every scene under data_root
  std::string field_order = "frame,ped,x,y";
  std::filesystem::path out = "sgcn_out";
  std::filesystem::path checkpoint;  // empty: <out>/checkpoint.txt
  std::filesystem::path scene_file;
  std::int64_t start_frame = -1;     // predict / dump-graphs window start; -1: first frame
  double train_fraction = 1.0;
  std::size_t test_limit = 0;        // 0: all test windows
  std::size_t jobs = 1;
  train::TrainConfig train;
  // Keys set by a config file or flag rather than left at their defaults.
  std::set<std::string> explicit_keys;

  // Sets one key from its text form; throws ConfigurationError on unknown
  // keys or bad values.
  void set(std::string_view key, std::string_view value);
  void load_file(const std::filesystem::path& path);
  // key = value lines in a fixed order, loadable by load_file.
  std::string to_text() const;
  void validate() const;

  std::filesystem::path checkpoint_path() const;
  model::ModelConfig model_config() const;

  static const std::vector<std::string>& keys();
};

}  // namespace sgcn::cli
