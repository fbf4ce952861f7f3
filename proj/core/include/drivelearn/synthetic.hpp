#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "drivelearn/scenario.hpp"

namespace drivelearn {

struct RoundaboutGeometry {
  double radius = 20.0;
  int entries = 4;
  double lane_width = 3.5;
  double lane_offset = 2.25;     // lateral offset of entry/exit lanes from the arm axis
  double blend_length = 10.0;    // radial extent of the curve joining an arm to the ring
  double approach_length = 60.0;
  double exit_length = 300.0;
};

/// Ring of `entries` corridors plus one entry and one exit corridor per arm.
/// Corridor ids are entry_<i>, ring_<i> (node i to node i+1), exit_<i>;
/// exits are the goals.
RoadMap build_roundabout(const RoundaboutGeometry& geometry);

struct SyntheticConfig {
  RoundaboutGeometry geometry;
  int min_agents = 4;
  int max_agents = 8;
  int episodes = 10;
  double episode_seconds = 30.0;
  double spawn_window_seconds = 12.0;
  double min_spawn_clearance = 15.0;
  double v0_min_kmh = 30.0;
  double v0_max_kmh = 50.0;
  std::vector<int> horizons{25, 50, 75, 100, 125, 150};
  int per_horizon = 20;
  int validation_episodes = 4;  // extra episodes reserved for validation scenarios
  int validation_count = 20;    // validation scenarios, all at the longest horizon
  int max_attempts_per_episode = 200;

  void validate() const;
};

struct SyntheticSet {
  std::shared_ptr<const RoadMap> map;
  std::vector<TrackLog> tracks;
  std::vector<Scenario> scenarios;   // training
  std::vector<Scenario> validation;  // disjoint actors and times, 150 steps
};

/// Scripted IDM traffic on a roundabout, recorded as track logs and cut into
/// scenarios. Colliding episodes are rejected and re-drawn. Deterministic
/// in `seed`.
SyntheticSet generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

/// Records `config.episodes + config.validation_episodes` collision-free
/// episodes without extracting scenarios. Validation episodes come last.
std::vector<TrackLog> generate_tracks(const RoadMap& map, const SyntheticConfig& config, std::uint64_t seed);

}  // namespace drivelearn
