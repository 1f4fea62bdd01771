#include "sgcn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sgcn/rng.hpp"

namespace sgcn::synthetic {

namespace {

struct Walker {
  std::int64_t id;
  double x, y, vx, vy;
  double gx, gy;
  double speed;
};

constexpr int kSubsteps = 4;

}  // namespace

data::RawTrajectoryTable simulate_crowd(const CrowdOptions& o) {
  Rng rng(o.seed);
  data::RawTrajectoryTable table;
  table.scene = o.scene;
  std::vector<Walker> walkers;
  std::int64_t next_id = 1;

  auto spawn = [&](double x, double y, double gx, double gy, double speed) {
    const double d = std::hypot(gx - x, gy - y);
    walkers.push_back({next_id++, x, y, speed * (gx - x) / d, speed * (gy - y) / d, gx, gy, speed});
  };

  for (std::size_t f = 0; f < o.frames; ++f) {
    // Poisson-ish arrivals: one Bernoulli trial per quarter of the rate.
    const int trials = 4;
    for (int k = 0; k < trials; ++k) {
      if (rng.uniform() >= o.spawn_rate / trials) continue;
      const bool horizontal = rng.uniform() < 0.6;
      const bool forward = rng.uniform() < 0.5;
      double x, y, gx, gy;
      if (horizontal) {
        x = forward ? 0.0 : o.width;
        gx = forward ? o.width : 0.0;
        y = rng.uniform(0.15, 0.85) * o.height;
        gy = std::clamp(y + rng.uniform(-0.3, 0.3) * o.height, 0.0, o.height);
      } else {
        y = forward ? 0.0 : o.height;
        gy = forward ? o.height : 0.0;
        x = rng.uniform(0.15, 0.85) * o.width;
        gx = std::clamp(x + rng.uniform(-0.3, 0.3) * o.width, 0.0, o.width);
      }
      const double speed = std::max(0.4, o.speed_mean + o.speed_std * rng.normal());
      spawn(x, y, gx, gy, speed);
      if (rng.uniform() < o.group_probability) {
        // companion walking side by side
        const double off = rng.uniform(0.5, 0.8);
        const double px = horizontal ? 0.0 : off, py = horizontal ? off : 0.0;
        spawn(x + px, y + py, gx + px, gy + py, speed);
      }
    }

    for (const auto& w : walkers) {
      const double rx = std::round(w.x * 100.0) / 100.0;
      const double ry = std::round(w.y * 100.0) / 100.0;
      table.rows.push_back({static_cast<std::int64_t>(f) * o.frame_step, w.id, rx, ry});
    }

    const double h = o.dt / kSubsteps;
    for (int s = 0; s < kSubsteps; ++s) {
      std::vector<std::pair<double, double>> accel(walkers.size());
      for (std::size_t i = 0; i < walkers.size(); ++i) {
        auto& w = walkers[i];
        const double dgx = w.gx - w.x, dgy = w.gy - w.y;
        const double dg = std::max(1e-6, std::hypot(dgx, dgy));
        double ax = (w.speed * dgx / dg - w.vx) / 0.5;
        double ay = (w.speed * dgy / dg - w.vy) / 0.5;
        for (std::size_t j = 0; j < walkers.size(); ++j) {
          if (i == j) continue;
          const double dx = w.x - walkers[j].x, dy = w.y - walkers[j].y;
          const double d = std::hypot(dx, dy);
          if (d > 3.0 || d < 1e-6) continue;
          const double push = o.repulsion * std::exp((0.4 - d) / o.repulsion_range);
          ax += push * dx / d;
          ay += push * dy / d;
        }
        accel[i] = {ax, ay};
      }
      for (std::size_t i = 0; i < walkers.size(); ++i) {
        auto& w = walkers[i];
        w.vx += h * accel[i].first;
        w.vy += h * accel[i].second;
        const double v = std::hypot(w.vx, w.vy), vmax = 1.3 * w.speed;
        if (v > vmax) {
          w.vx *= vmax / v;
          w.vy *= vmax / v;
        }
        w.x += h * w.vx;
        w.y += h * w.vy;
      }
    }
    std::erase_if(walkers, [&](const Walker& w) {
      return std::hypot(w.gx - w.x, w.gy - w.y) < 0.3 || w.x < -1.0 || w.y < -1.0 || w.x > o.width + 1.0 ||
             w.y > o.height + 1.0;
    });
  }
  std::sort(table.rows.begin(), table.rows.end(), [](const data::Observation& a, const data::Observation& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.pedestrian < b.pedestrian;
  });
  return table;
}

std::vector<CrowdOptions> benchmark_like_scenes(std::size_t frames, std::uint64_t seed) {
  std::vector<CrowdOptions> scenes;
  auto add = [&](const char* name, double rate, double speed, double w, double h) {
    CrowdOptions o;
    o.scene = name;
    o.frames = frames;
    o.spawn_rate = rate;
    o.speed_mean = speed;
    o.width = w;
    o.height = h;
    o.seed = derive_seed(seed, scenes.size());
    scenes.push_back(o);
  };
  add("ETH", 0.12, 1.5, 16.0, 12.0);
  add("HOTEL", 0.15, 1.1, 10.0, 8.0);
  add("UNIV", 0.45, 1.0, 14.0, 12.0);
  add("ZARA1", 0.18, 1.2, 15.0, 8.0);
  add("ZARA2", 0.22, 1.2, 15.0, 8.0);
  return scenes;
}

std::string to_text(const data::RawTrajectoryTable& table) {
  std::string out;
  char buf[96];
  for (const auto& r : table.rows) {
    std::snprintf(buf, sizeof(buf), "%lld\t%lld\t%.2f\t%.2f\n", static_cast<long long>(r.frame),
                  static_cast<long long>(r.pedestrian), r.x, r.y);
    out += buf;
  }
  return out;
}

}  // namespace sgcn::synthetic
