#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numbers>

#include "CLI11.hpp"
#include "sgcn/io.hpp"
#include "sgcn/synthetic.hpp"

namespace fs = std::filesystem;
using sgcn::data::RawTrajectoryTable;

namespace {

void write(const fs::path& path, const RawTrajectoryTable& table) {
  fs::create_directories(path.parent_path());
  sgcn::io::write_file_atomic(path, sgcn::synthetic::to_text(table));
  std::cout << path.string() << ": " << table.rows.size() << " rows\n";
}

// Pedestrian `id` at position(k) for frames 0, 10, ..., 10 * (frames - 1).
void add_track(RawTrajectoryTable& table, std::int64_t id, std::size_t frames,
               const std::function<std::pair<double, double>(std::size_t)>& position) {
  for (std::size_t k = 0; k < frames; ++k) {
    auto [x, y] = position(k);
    table.rows.push_back({static_cast<std::int64_t>(k) * 10, id, std::round(x * 100) / 100, std::round(y * 100) / 100});
  }
}

void sort_rows(RawTrajectoryTable& table) {
  std::sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.pedestrian < b.pedestrian;
  });
}

void write_crowds(const fs::path& dir, std::size_t frames, std::uint64_t seed) {
  for (const auto& options : sgcn::synthetic::benchmark_like_scenes(frames, seed)) {
    write(dir / (options.scene + ".txt"), sgcn::synthetic::simulate_crowd(options));
  }
}

void write_small_fixtures(const fs::path& dir) {
  // Two one-window scenes for overfitting.
  RawTrajectoryTable a{"scene_a", {}};
  add_track(a, 1, 20, [](std::size_t k) { return std::pair{0.5 * k, 1.0}; });
  add_track(a, 2, 20, [](std::size_t k) { return std::pair{10.0 - 0.4 * k, 3.0 + 0.1 * k}; });
  add_track(a, 3, 20, [](std::size_t k) { return std::pair{4.0, 0.3 * k}; });
  sort_rows(a);
  write(dir / "overfit" / "scene_a.txt", a);

  RawTrajectoryTable b{"scene_b", {}};
  add_track(b, 1, 20, [](std::size_t k) {
    const double phi = 0.12 * k;
    return std::pair{5.0 + 3.0 * std::cos(phi), 5.0 + 3.0 * std::sin(phi)};
  });
  add_track(b, 2, 20, [](std::size_t k) { return std::pair{1.0 + 0.35 * k, 1.0 + 0.35 * k}; });
  sort_rows(b);
  write(dir / "overfit" / "scene_b.txt", b);

  RawTrajectoryTable still{"stationary", {}};
  add_track(still, 1, 20, [](std::size_t) { return std::pair{3.0, 4.0}; });
  write(dir / "stationary.txt", still);

  // Perpendicular paths through (2, 0).
  RawTrajectoryTable cross{"crossing_pair", {}};
  add_track(cross, 1, 8, [](std::size_t k) { return std::pair{0.5 * k, 0.0}; });
  add_track(cross, 2, 8, [](std::size_t k) { return std::pair{2.0, -2.0 + 0.5 * k}; });
  sort_rows(cross);
  write(dir / "crossing_pair.txt", cross);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the bundled trajectory fixtures"};
  fs::path out = "data";
  std::size_t frames = 1500;
  std::size_t mini_frames = 60;
  std::uint64_t seed = 7;
  app.add_option("--out", out, "data directory");
  app.add_option("--frames", frames, "frames per benchmark-like scene");
  app.add_option("--mini-frames", mini_frames, "frames per mini scene");
  app.add_option("--seed", seed, "base seed");
  CLI11_PARSE(app, argc, argv);

  write_crowds(out / "synthetic", frames, seed);
  write_crowds(out / "mini", mini_frames, seed + 1);
  write_small_fixtures(out / "fixtures");
  return 0;
}
