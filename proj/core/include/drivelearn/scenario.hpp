#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "drivelearn/geometry.hpp"

namespace drivelearn {

inline constexpr double kDt = 0.1;
inline constexpr int kHorizonTiers[] = {25, 50, 75, 100, 125, 150};

using AgentId = std::int64_t;

/// Converts a timestamp in seconds to the integer simulation step.
int time_to_step(double t);
inline double step_to_time(int step) { return step * kDt; }

struct Corridor {
  std::string id;
  ArcPath centerline;
  ArcPath left_bound;
  ArcPath right_bound;
  std::vector<std::string> successors;
};

class RoadMap {
 public:
  RoadMap() = default;
  /// Validates ids, successors, goals, and bound geometry; throws
  /// ValidationError naming the offending corridor.
  RoadMap(std::vector<Corridor> corridors, std::vector<std::string> goals);

  const std::vector<Corridor>& corridors() const { return corridors_; }
  const std::vector<std::string>& goals() const { return goals_; }
  const Corridor& at(const std::string& id) const;
  bool contains(const std::string& id) const { return index_.contains(id); }
  bool is_goal(const std::string& id) const;

 private:
  std::vector<Corridor> corridors_;
  std::vector<std::string> goals_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct TrackFrame {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;

  Point2 position() const { return {x, y}; }
  Point2 velocity() const { return {vx, vy}; }
};

/// Recorded trajectory of one agent on the global 0.1 s step grid.
struct TrackLog {
  AgentId agent_id = 0;
  int first_step = 0;
  std::vector<TrackFrame> frames;

  int last_step() const { return first_step + static_cast<int>(frames.size()) - 1; }
  bool covers(int step) const { return step >= first_step && step <= last_step(); }
  const TrackFrame& at_step(int step) const { return frames.at(static_cast<std::size_t>(step - first_step)); }
  double length() const { return frames.front().length; }
  double width() const { return frames.front().width; }
};

/// Chain of corridors followed by one agent, with concatenated geometry.
struct Route {
  std::vector<std::string> corridor_ids;
  ArcPath centerline;
  ArcPath left_bound;
  ArcPath right_bound;
};

struct Scenario {
  std::string id;
  std::shared_ptr<const RoadMap> map;
  AgentId actor_id = 0;
  Route route;  // route.centerline is the actor's reference path
  TrackLog expert_track;  // frames [initial_step, initial_step + horizon_steps]
  std::vector<AgentId> worker_ids;
  std::vector<TrackLog> worker_tracks;  // aligned with worker_ids
  std::vector<ArcPath> worker_paths;    // followed by IDM-driven workers
  int horizon_steps = 0;
  int initial_step = 0;

  const ArcPath& reference_path() const { return route.centerline; }
  double initial_time() const { return step_to_time(initial_step); }
};

struct ManifestRow {
  std::string scenario_id;
  AgentId actor_id = 0;
  double initial_time = 0.0;
  int horizon_steps = 0;
};

// --- ingestion -------------------------------------------------------------

RoadMap load_map(const std::filesystem::path& file);
RoadMap parse_map(std::istream& in, const std::string& source);
void save_map(const RoadMap& map, std::ostream& out);

std::vector<TrackLog> load_tracks(const std::filesystem::path& file);
std::vector<TrackLog> parse_tracks(std::istream& in, const std::string& source);
void save_tracks(std::span<const TrackLog> tracks, std::ostream& out);

std::vector<ManifestRow> load_manifest(const std::filesystem::path& file);
void save_manifest(std::span<const Scenario> scenarios, std::ostream& out);

// --- extraction ------------------------------------------------------------

/// Greedy nearest-centerline chaining of recorded positions onto the map,
/// extended along successors until a goal corridor is reached. Returns
/// nullopt if the map is empty.
std::optional<Route> chain_route(const RoadMap& map, std::span<const Point2> positions);
Route build_route(const RoadMap& map, std::span<const std::string> corridor_ids);

/// Builds one scenario; returns nullopt if the track does not cover the
/// window, the route strays more than 2 m from the expert, or the actor
/// overlaps a worker at the initial step.
std::optional<Scenario> make_scenario(std::shared_ptr<const RoadMap> map,
                                      std::span<const TrackLog> tracks, AgentId actor_id,
                                      int initial_step, int horizon_steps);

std::vector<Scenario> extract_scenarios(std::span<const TrackLog> tracks,
                                        std::shared_ptr<const RoadMap> map,
                                        std::span<const int> horizons, int per_horizon,
                                        std::uint64_t seed);

std::vector<Scenario> scenarios_from_manifest(std::span<const ManifestRow> rows,
                                              std::span<const TrackLog> tracks,
                                              std::shared_ptr<const RoadMap> map);

bool is_valid_horizon(int steps);

}  // namespace drivelearn
