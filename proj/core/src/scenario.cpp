#include "drivelearn/scenario.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <random>
#include <unordered_set>

#include "drivelearn/error.hpp"

namespace drivelearn {

namespace {

constexpr double kRouteTolerance = 2.0;
constexpr int kChainLookahead = 20;
constexpr int kCandidateStride = 5;

double distance_to(const ArcPath& path, Point2 p) { return std::abs(arc_project(path, p).lateral); }

double lookahead_cost(const ArcPath& path, std::span<const Point2> positions, std::size_t from) {
  double cost = 0.0;
  const std::size_t to = std::min(positions.size(), from + kChainLookahead);
  for (std::size_t k = from; k < to; ++k) {
    cost += distance(positions[k], point_at(path, arc_project(path, positions[k]).s));
  }
  return cost;
}

ArcPath track_polyline(const TrackLog& track) {
  std::vector<Point2> pts;
  for (const TrackFrame& f : track.frames) {
    if (pts.empty() || distance(pts.back(), f.position()) > 1e-3) pts.push_back(f.position());
  }
  if (pts.size() < 2) {
    const Point2 p = track.frames.front().position();
    const Point2 ahead = p + 1.0 * unit_vector(track.frames.front().heading);
    pts = {p, ahead};
  }
  return ArcPath(std::move(pts));
}

std::vector<Point2> track_positions(const TrackLog& track) {
  std::vector<Point2> out;
  out.reserve(track.frames.size());
  for (const TrackFrame& f : track.frames) out.push_back(f.position());
  return out;
}

OrientedBox frame_box(const TrackFrame& f) { return {f.position(), f.heading, f.length, f.width}; }

/// Route and IDM path per agent, computed once over the full recording.
struct AgentGeometry {
  std::optional<Route> route;  // set only if it stays within tolerance
  ArcPath follow_path;
};

AgentGeometry agent_geometry(const RoadMap& map, const TrackLog& track) {
  AgentGeometry g;
  const std::vector<Point2> positions = track_positions(track);
  std::optional<Route> route = chain_route(map, positions);
  if (route) {
    const bool close = std::all_of(positions.begin(), positions.end(), [&](Point2 p) {
      return distance_to(route->centerline, p) <= kRouteTolerance;
    });
    if (close) {
      g.follow_path = route->centerline;
      g.route = std::move(route);
      return g;
    }
  }
  g.follow_path = track_polyline(track);
  return g;
}

std::optional<Scenario> assemble(std::shared_ptr<const RoadMap> map, std::span<const TrackLog> tracks,
                                 std::size_t actor_index, const Route& route,
                                 const std::vector<AgentGeometry>& geometry, int initial_step,
                                 int horizon_steps) {
  const TrackLog& actor = tracks[actor_index];
  const int end_step = initial_step + horizon_steps;
  if (!actor.covers(initial_step) || !actor.covers(end_step)) return std::nullopt;

  Scenario sc;
  sc.map = std::move(map);
  sc.actor_id = actor.agent_id;
  sc.route = route;
  sc.horizon_steps = horizon_steps;
  sc.initial_step = initial_step;
  sc.id = "h" + std::to_string(horizon_steps) + "-a" + std::to_string(actor.agent_id) + "-s" +
          std::to_string(initial_step);
  sc.expert_track.agent_id = actor.agent_id;
  sc.expert_track.first_step = initial_step;
  for (int k = initial_step; k <= end_step; ++k) {
    const TrackFrame& f = actor.at_step(k);
    if (distance_to(route.centerline, f.position()) > kRouteTolerance) return std::nullopt;
    sc.expert_track.frames.push_back(f);
  }

  const OrientedBox actor_box = frame_box(actor.at_step(initial_step));
  for (std::size_t j = 0; j < tracks.size(); ++j) {
    if (j == actor_index) continue;
    const TrackLog& other = tracks[j];
    if (other.last_step() < initial_step || other.first_step > end_step) continue;
    if (other.covers(initial_step) && obb_overlap(actor_box, frame_box(other.at_step(initial_step)))) {
      return std::nullopt;
    }
    sc.worker_ids.push_back(other.agent_id);
    sc.worker_tracks.push_back(other);
    sc.worker_paths.push_back(geometry[j].follow_path);
  }
  return sc;
}

}  // namespace

int time_to_step(double t) { return static_cast<int>(std::lround(t / kDt)); }

bool is_valid_horizon(int steps) {
  return std::find(std::begin(kHorizonTiers), std::end(kHorizonTiers), steps) != std::end(kHorizonTiers);
}

RoadMap::RoadMap(std::vector<Corridor> corridors, std::vector<std::string> goals)
    : corridors_(std::move(corridors)), goals_(std::move(goals)) {
  for (std::size_t i = 0; i < corridors_.size(); ++i) {
    const Corridor& c = corridors_[i];
    if (!index_.emplace(c.id, i).second) {
      throw ValidationError("corridor '" + c.id + "': duplicate corridor id");
    }
  }
  for (const Corridor& c : corridors_) {
    for (const std::string& succ : c.successors) {
      if (!index_.contains(succ)) {
        throw ValidationError("corridor '" + c.id + "': unknown successor id '" + succ + "'");
      }
    }
    if (c.centerline.size() != c.left_bound.size() || c.centerline.size() != c.right_bound.size()) {
      throw ValidationError("corridor '" + c.id + "': center/left/right point counts differ");
    }
    for (std::size_t k = 0; k < c.centerline.size(); ++k) {
      const Pose2 pose = pose_at(c.centerline, c.centerline.cum_s()[k]);
      const Point2 u = unit_vector(pose.heading);
      if (cross(u, c.left_bound.points()[k] - c.centerline.points()[k]) <= 0.0 ||
          cross(u, c.right_bound.points()[k] - c.centerline.points()[k]) >= 0.0) {
        throw ValidationError("corridor '" + c.id + "': bounds not on the correct side at point " +
                              std::to_string(k));
      }
    }
  }
  for (const std::string& g : goals_) {
    if (!index_.contains(g)) throw ValidationError("goal refers to unknown corridor '" + g + "'");
  }
}

const Corridor& RoadMap::at(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw ValidationError("unknown corridor '" + id + "'");
  return corridors_[it->second];
}

bool RoadMap::is_goal(const std::string& id) const {
  return std::find(goals_.begin(), goals_.end(), id) != goals_.end();
}

Route build_route(const RoadMap& map, std::span<const std::string> corridor_ids) {
  std::vector<ArcPath> centers, lefts, rights;
  for (const std::string& id : corridor_ids) {
    const Corridor& c = map.at(id);
    centers.push_back(c.centerline);
    lefts.push_back(c.left_bound);
    rights.push_back(c.right_bound);
  }
  Route r;
  r.corridor_ids.assign(corridor_ids.begin(), corridor_ids.end());
  r.centerline = concatenate(centers);
  r.left_bound = concatenate(lefts);
  r.right_bound = concatenate(rights);
  return r;
}

std::optional<Route> chain_route(const RoadMap& map, std::span<const Point2> positions) {
  if (map.corridors().empty() || positions.empty()) return std::nullopt;

  const Corridor* current = nullptr;
  double best = std::numeric_limits<double>::infinity();
  for (const Corridor& c : map.corridors()) {
    const double cost = lookahead_cost(c.centerline, positions, 0);
    if (cost < best - 1e-9) {
      best = cost;
      current = &c;
    }
  }
  std::vector<std::string> chain{current->id};

  for (std::size_t k = 1; k < positions.size(); ++k) {
    if (current->successors.empty()) break;
    const Projection proj = arc_project(current->centerline, positions[k]);
    if (proj.s < current->centerline.length() - 1e-6) continue;
    if (distance(positions[k], current->centerline.back()) < 1e-6) continue;
    if (chain.size() > map.corridors().size() * 4) break;
    const Corridor* next = nullptr;
    double next_cost = std::numeric_limits<double>::infinity();
    for (const std::string& succ_id : current->successors) {
      const Corridor& succ = map.at(succ_id);
      const double cost = lookahead_cost(succ.centerline, positions, k);
      if (cost < next_cost - 1e-9) {
        next_cost = cost;
        next = &succ;
      }
    }
    current = next;
    chain.push_back(current->id);
    --k;  // re-test the same position against the new corridor
  }

  // extend toward a destination so the path outlasts the recording
  std::unordered_set<std::string> seen(chain.begin(), chain.end());
  while (!map.is_goal(current->id) && !current->successors.empty()) {
    const auto goal_it = std::find_if(current->successors.begin(), current->successors.end(),
                                      [&](const std::string& id) { return map.is_goal(id); });
    const std::string& next_id = goal_it != current->successors.end() ? *goal_it : current->successors.front();
    if (!seen.insert(next_id).second) break;
    current = &map.at(next_id);
    chain.push_back(current->id);
  }
  return build_route(map, chain);
}

std::optional<Scenario> make_scenario(std::shared_ptr<const RoadMap> map, std::span<const TrackLog> tracks,
                                      AgentId actor_id, int initial_step, int horizon_steps) {
  const auto it = std::find_if(tracks.begin(), tracks.end(),
                               [&](const TrackLog& t) { return t.agent_id == actor_id; });
  if (it == tracks.end()) return std::nullopt;
  std::vector<AgentGeometry> geometry;
  geometry.reserve(tracks.size());
  for (const TrackLog& t : tracks) geometry.push_back(agent_geometry(*map, t));
  const auto actor_index = static_cast<std::size_t>(it - tracks.begin());
  if (!geometry[actor_index].route) return std::nullopt;
  return assemble(std::move(map), tracks, actor_index, *geometry[actor_index].route, geometry,
                  initial_step, horizon_steps);
}

std::vector<Scenario> extract_scenarios(std::span<const TrackLog> tracks, std::shared_ptr<const RoadMap> map,
                                        std::span<const int> horizons, int per_horizon, std::uint64_t seed) {
  for (int h : horizons) {
    if (!is_valid_horizon(h)) throw ValidationError("horizon " + std::to_string(h) + " is not a valid tier");
  }
  std::vector<AgentGeometry> geometry;
  geometry.reserve(tracks.size());
  for (const TrackLog& t : tracks) geometry.push_back(agent_geometry(*map, t));

  std::vector<Scenario> out;
  for (int h : horizons) {
    std::vector<std::pair<std::size_t, int>> candidates;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      if (!geometry[i].route) continue;
      for (int start = tracks[i].first_step; start + h <= tracks[i].last_step(); start += kCandidateStride) {
        candidates.emplace_back(i, start);
      }
    }
    std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(h)));
    std::shuffle(candidates.begin(), candidates.end(), rng);
    int taken = 0;
    for (const auto& [i, start] : candidates) {
      if (taken >= per_horizon) break;
      auto sc = assemble(map, tracks, i, *geometry[i].route, geometry, start, h);
      if (!sc) continue;
      out.push_back(std::move(*sc));
      ++taken;
    }
  }
  return out;
}

std::vector<Scenario> scenarios_from_manifest(std::span<const ManifestRow> rows, std::span<const TrackLog> tracks,
                                              std::shared_ptr<const RoadMap> map) {
  std::vector<AgentGeometry> geometry;
  geometry.reserve(tracks.size());
  for (const TrackLog& t : tracks) geometry.push_back(agent_geometry(*map, t));

  std::vector<Scenario> out;
  for (const ManifestRow& row : rows) {
    const auto it = std::find_if(tracks.begin(), tracks.end(),
                                 [&](const TrackLog& t) { return t.agent_id == row.actor_id; });
    if (it == tracks.end()) {
      throw ValidationError("scenario '" + row.scenario_id + "': unknown actor_id " + std::to_string(row.actor_id));
    }
    if (!is_valid_horizon(row.horizon_steps)) {
      throw ValidationError("scenario '" + row.scenario_id + "': invalid horizon_steps");
    }
    const auto index = static_cast<std::size_t>(it - tracks.begin());
    if (!geometry[index].route) {
      throw ValidationError("scenario '" + row.scenario_id + "': no route matches the actor track");
    }
    auto sc = assemble(map, tracks, index, *geometry[index].route, geometry, time_to_step(row.initial_time),
                       row.horizon_steps);
    if (!sc) throw ValidationError("scenario '" + row.scenario_id + "': track does not support the window");
    sc->id = row.scenario_id;
    out.push_back(std::move(*sc));
  }
  return out;
}

}  // namespace drivelearn
