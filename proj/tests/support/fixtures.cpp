#include "support/fixtures.hpp"

#include <fstream>
#include <sstream>

#ifndef SGCN_TEST_DATA_DIR
#error "SGCN_TEST_DATA_DIR must be defined"
#endif

namespace fixtures {

namespace fs = std::filesystem;
using sgcn::ad::Tensor;

fs::path data_dir() { return fs::path(SGCN_TEST_DATA_DIR); }

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("sgcn_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Tensor random_tensor(sgcn::ad::Shape shape, sgcn::Rng& rng, double lo, double hi, bool requires_grad) {
  std::vector<double> v(sgcn::ad::numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

sgcn::data::TrajectoryScene random_scene(std::size_t n, std::size_t t_obs, std::size_t t_pred, std::uint64_t seed) {
  sgcn::Rng rng(seed);
  const std::size_t len = t_obs + t_pred;
  std::vector<double> pos(len * n * 2);
  for (std::size_t i = 0; i < n; ++i) {
    double x = rng.uniform(0, 10), y = rng.uniform(0, 10);
    const double vx = rng.uniform(-0.5, 0.5), vy = rng.uniform(-0.5, 0.5);
    for (std::size_t t = 0; t < len; ++t) {
      pos[(t * n + i) * 2] = x;
      pos[(t * n + i) * 2 + 1] = y;
      x += vx + 0.05 * rng.normal();
      y += vy + 0.05 * rng.normal();
    }
  }
  sgcn::data::TrajectoryScene s;
  s.scene = "random";
  for (std::size_t i = 0; i < n; ++i) s.pedestrian_ids.push_back(static_cast<std::int64_t>(i + 1));
  std::vector<double> obs(pos.begin(), pos.begin() + static_cast<long>(t_obs * n * 2));
  std::vector<double> fut(pos.begin() + static_cast<long>(t_obs * n * 2), pos.end());
  s.positions_obs = Tensor::from({t_obs, n, 2}, std::move(obs));
  s.positions_fut = Tensor::from({t_pred, n, 2}, std::move(fut));
  return sgcn::data::to_displacements(std::move(s));
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

sgcn::model::ModelConfig small_config(std::size_t t_obs, std::size_t t_pred) {
  sgcn::model::ModelConfig c;
  c.t_obs = t_obs;
  c.t_pred = t_pred;
  return c;
}

std::string read(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixtures
