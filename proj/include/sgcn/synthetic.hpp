#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgcn/data.hpp"

// Deterministic crowd simulator used for bundled fixtures. It writes tables
// in the ETH/UCY layout (frame step 10, 0.4 s per frame, meters) so that the
// pipeline can be exercised without the original recordings.
namespace sgcn::synthetic {

struct CrowdOptions {
  std::string scene = "SYNTH";
  std::size_t frames = 300;
  std::int64_t frame_step = 10;
  double dt = 0.4;            // seconds per frame
  double width = 15.0;        // meters
  double height = 12.0;
  double spawn_rate = 0.25;   // expected arrivals per frame
  double speed_mean = 1.3;    // m/s
  double speed_std = 0.2;
  double repulsion = 1.5;     // social-force strength
  double repulsion_range = 0.6;
  double group_probability = 0.2;
  std::uint64_t seed = 1;
};

data::RawTrajectoryTable simulate_crowd(const CrowdOptions& options);

// Five scenes named ETH, HOTEL, UNIV, ZARA1 and ZARA2 with different
// densities and speeds.
std::vector<CrowdOptions> benchmark_like_scenes(std::size_t frames, std::uint64_t seed);

std::string to_text(const data::RawTrajectoryTable& table);

}  // namespace sgcn::synthetic
