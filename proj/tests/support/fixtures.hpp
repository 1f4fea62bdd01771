#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sgcn/data.hpp"
#include "sgcn/model.hpp"
#include "sgcn/rng.hpp"
#include "sgcn/tensor.hpp"

namespace fixtures {

// Bundled data directory (the repository's data/).
std::filesystem::path data_dir();

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& name);

sgcn::ad::Tensor random_tensor(sgcn::ad::Shape shape, sgcn::Rng& rng, double lo = -1.0, double hi = 1.0,
                               bool requires_grad = false);

// Random walk scene with N pedestrians, steps of roughly 0.4 m.
sgcn::data::TrajectoryScene random_scene(std::size_t n, std::size_t t_obs, std::size_t t_pred, std::uint64_t seed);

std::vector<double> values(const sgcn::ad::Tensor& t);

sgcn::model::ModelConfig small_config(std::size_t t_obs, std::size_t t_pred);

std::string read(const std::filesystem::path& path);

}  // namespace fixtures
