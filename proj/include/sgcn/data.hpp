#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgcn/tensor.hpp"

namespace sgcn::data {

struct Observation {
  std::int64_t frame = 0;
  std::int64_t pedestrian = 0;
  double x = 0.0;  // meters
  double y = 0.0;
};

// Rows sorted by (frame, pedestrian); each pair appears once.
struct RawTrajectoryTable {
  std::string scene;
  std::vector<Observation> rows;
};

// Column layout of a trajectory file, e.g. "frame,ped,x,y" (the default) or
// "frame,ped,y,x" for raw variants that store y first.
class FieldOrder {
 public:
  enum class Field { frame, pedestrian, x, y };

  FieldOrder() = default;
  static FieldOrder parse(std::string_view spec);
  std::string to_string() const;

  const std::array<Field, 4>& fields() const { return fields_; }

 private:
  std::array<Field, 4> fields_{Field::frame, Field::pedestrian, Field::x, Field::y};
};

RawTrajectoryTable parse_scene(std::istream& in, std::string scene, const FieldOrder& order = {});
RawTrajectoryTable load_scene_file(const std::filesystem::path& path, const FieldOrder& order = {});

// One fixed-length window: every listed pedestrian is present at all
// t_obs + t_pred frames. Tensors are [T, N, 2] in meters.
struct TrajectoryScene {
  std::string scene;
  std::int64_t start_frame = 0;
  std::vector<std::int64_t> pedestrian_ids;
  ad::Tensor positions_obs;
  ad::Tensor positions_fut;
  // displacements_obs[t] = positions_obs[t] - positions_obs[t-1], zero at t = 0.
  ad::Tensor displacements_obs;

  std::size_t num_pedestrians() const { return pedestrian_ids.size(); }
  std::size_t t_obs() const { return positions_obs.dim(0); }
  std::size_t t_pred() const { return positions_fut.dim(0); }

  // Per-step future displacements, the first one relative to the last
  // observed position. [T_pred, N, 2].
  ad::Tensor displacements_fut() const;
};

// Smallest positive gap between distinct frame ids (the dataset frame step).
std::int64_t frame_step(const RawTrajectoryTable& table);

std::vector<TrajectoryScene> window_scenes(const RawTrajectoryTable& table, std::size_t t_obs, std::size_t t_pred,
                                           std::size_t stride = 1);

TrajectoryScene to_displacements(TrajectoryScene scene);

// Observation-only window for inference: pedestrians present at all t_obs
// frames from `start_frame` (the first frame when negative). positions_fut
// stays empty. Pedestrians seen in the window but not at every frame are
// listed in `dropped`.
struct ObservationWindow {
  TrajectoryScene scene;
  std::vector<std::int64_t> dropped;
};
ObservationWindow observation_window(const RawTrajectoryTable& table, std::size_t t_obs,
                                     std::int64_t start_frame = -1);

// Absolute positions from a start point and per-step displacements:
// out[t] = start + sum_{s<=t} steps[s]. `start` is [N,2] flattened.
ad::Tensor integrate_displacements(std::span<const double> start, const ad::Tensor& steps);

struct DatasetSplit {
  std::vector<TrajectoryScene> train_scenes;
  std::vector<TrajectoryScene> test_scenes;
  std::string holdout_name;
};

// Scene name -> one or more recording files for that scene.
using SceneTables = std::map<std::string, std::vector<RawTrajectoryTable>>;

// Holdout matching is case-insensitive. Unknown holdout -> ConfigurationError.
DatasetSplit leave_one_out_split(const SceneTables& tables, std::string_view holdout, std::size_t t_obs,
                                 std::size_t t_pred, std::size_t stride = 1);

// Every `*.txt` directly under `root` is a scene named after its stem; every
// subdirectory is a scene whose `*.txt` files (searched recursively) are its
// recordings.
SceneTables load_data_root(const std::filesystem::path& root, const FieldOrder& order = {});

// Deterministic subset keeping round(fraction * size) windows (at least one
// when the input is nonempty), in original order.
std::vector<TrajectoryScene> subsample(const std::vector<TrajectoryScene>& scenes, double fraction,
                                       std::uint64_t seed);
std::vector<TrajectoryScene> take_subsample(const std::vector<TrajectoryScene>& scenes, std::size_t count,
                                            std::uint64_t seed);

}  // namespace sgcn::data
