#include "drivelearn/synthetic.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "drivelearn/error.hpp"
#include "drivelearn/simulator.hpp"

namespace drivelearn {

namespace {

constexpr double kStraightSpacing = 1.0;
constexpr double kCurveSpacing = 0.1;

std::vector<Point2> straight(Point2 from, Point2 to) {
  const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(distance(from, to) / kStraightSpacing)));
  std::vector<Point2> pts;
  for (std::size_t k = 0; k <= n; ++k) pts.push_back(from + (static_cast<double>(k) / n) * (to - from));
  return pts;
}

std::vector<Point2> bezier(Point2 p0, Point2 p1, Point2 p2, Point2 p3) {
  constexpr int kDense = 2000;
  std::vector<Point2> dense;
  dense.reserve(kDense + 1);
  for (int i = 0; i <= kDense; ++i) {
    const double t = static_cast<double>(i) / kDense;
    const double u = 1.0 - t;
    dense.push_back((u * u * u) * p0 + (3 * u * u * t) * p1 + (3 * u * t * t) * p2 + (t * t * t) * p3);
  }
  return resample_uniform(dense, kCurveSpacing);
}

std::vector<Point2> arc(double radius, double from_angle, double to_angle) {
  const double sweep = to_angle - from_angle;
  const auto n = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(std::abs(sweep) * radius / kCurveSpacing)));
  std::vector<Point2> pts;
  for (std::size_t k = 0; k <= n; ++k) {
    const double a = from_angle + sweep * static_cast<double>(k) / static_cast<double>(n);
    pts.push_back(radius * unit_vector(a));
  }
  return pts;
}

void append(std::vector<Point2>& dst, const std::vector<Point2>& src) {
  for (const Point2& p : src) {
    if (!dst.empty() && distance(dst.back(), p) < 1e-9) continue;
    dst.push_back(p);
  }
}

Corridor make_corridor(std::string id, std::vector<Point2> center, double half_width,
                       std::vector<std::string> successors) {
  std::vector<Point2> left, right;
  const std::size_t n = center.size();
  for (std::size_t k = 0; k < n; ++k) {
    const Point2 a = center[k == 0 ? 0 : k - 1];
    const Point2 b = center[k + 1 == n ? n - 1 : k + 1];
    const Point2 t = (1.0 / distance(a, b)) * (b - a);
    const Point2 normal{-t.y, t.x};
    left.push_back(center[k] + half_width * normal);
    right.push_back(center[k] - half_width * normal);
  }
  return Corridor{std::move(id), ArcPath(std::move(center)), ArcPath(std::move(left)), ArcPath(std::move(right)),
                  std::move(successors)};
}

std::string entry_id(int i) { return "entry_" + std::to_string(i); }
std::string ring_id(int i) { return "ring_" + std::to_string(i); }
std::string exit_id(int i) { return "exit_" + std::to_string(i); }

struct PendingAgent {
  AgentId id = 0;
  int spawn_step = 0;
  double v0 = 0.0;
  double initial_speed = 0.0;
  double length = 4.5;
  double width = 1.8;
  ArcPath path;
};

std::optional<std::vector<TrackLog>> simulate_episode(std::vector<PendingAgent>& pending, int steps, int step_offset,
                                                      double clearance) {
  WorldState world;
  world.horizon = steps;
  std::vector<TrackLog> tracks(pending.size());
  std::vector<bool> spawned(pending.size(), false);
  std::vector<std::size_t> slot(pending.size(), 0);

  for (int k = 0; k <= steps; ++k) {
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (spawned[i] || pending[i].spawn_step > k) continue;
      const Point2 start = pending[i].path.front();
      const bool blocked = std::any_of(world.agents.begin(), world.agents.end(), [&](const AgentState& a) {
        return distance(a.pose.position, start) < clearance;
      });
      if (blocked) continue;
      AgentState a;
      a.id = pending[i].id;
      a.mode = AgentMode::idm_worker;
      a.path = &pending[i].path;
      a.idm.v0 = pending[i].v0;
      a.speed = pending[i].initial_speed;
      a.box.length = pending[i].length;
      a.box.width = pending[i].width;
      a.place_on_path(0.0);
      spawned[i] = true;
      slot[i] = world.agents.size();
      world.agents.push_back(a);
      tracks[i].agent_id = a.id;
      tracks[i].first_step = step_offset + k;
    }

    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (!spawned[i]) continue;
      const AgentState& a = world.agents[slot[i]];
      tracks[i].frames.push_back(TrackFrame{step_to_time(step_offset + k), a.pose.position.x, a.pose.position.y,
                                            a.velocity.x, a.velocity.y, a.pose.heading, a.box.length, a.box.width});
    }

    for (std::size_t i = 0; i < world.agents.size(); ++i) {
      for (std::size_t j = i + 1; j < world.agents.size(); ++j) {
        if (obb_overlap(world.agents[i].box, world.agents[j].box)) return std::nullopt;
      }
    }
    if (k == steps) break;
    const std::vector<double> acc = idm_accelerations(world);
    for (std::size_t i = 0; i < world.agents.size(); ++i) integrate_idm(world.agents[i], acc[i]);
  }

  std::vector<TrackLog> out;
  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (spawned[i]) out.push_back(std::move(tracks[i]));
  }
  return out;
}

}  // namespace

RoadMap build_roundabout(const RoundaboutGeometry& g) {
  if (g.entries < 2 || g.radius <= g.lane_width || g.lane_width <= 0 || g.blend_length <= 0 ||
      g.approach_length <= 0 || g.exit_length <= 0 || g.lane_offset <= 0) {
    throw ValidationError("invalid roundabout geometry");
  }
  const int n = g.entries;
  const double hw = 0.5 * g.lane_width;
  const double k = 0.5 * g.blend_length;
  std::vector<Corridor> corridors;
  std::vector<std::string> goals;

  for (int i = 0; i < n; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / n;
    const Point2 radial = unit_vector(phi);
    const Point2 tangent{-radial.y, radial.x};
    const Point2 node = g.radius * radial;

    const Point2 entry_start = (g.radius + g.blend_length + g.approach_length) * radial - g.lane_offset * tangent;
    const Point2 entry_blend = (g.radius + g.blend_length) * radial - g.lane_offset * tangent;
    std::vector<Point2> entry = straight(entry_start, entry_blend);
    append(entry, bezier(entry_blend, entry_blend - k * radial, node - k * tangent, node));
    corridors.push_back(make_corridor(entry_id(i), std::move(entry), hw, {ring_id(i)}));

    const double next_phi = 2.0 * std::numbers::pi * (i + 1) / n;
    corridors.push_back(make_corridor(ring_id(i), arc(g.radius, phi, next_phi), hw,
                                      {ring_id((i + 1) % n), exit_id((i + 1) % n)}));

    const Point2 exit_blend = (g.radius + g.blend_length) * radial + g.lane_offset * tangent;
    const Point2 exit_end = (g.radius + g.blend_length + g.exit_length) * radial + g.lane_offset * tangent;
    std::vector<Point2> exit = bezier(node, node + k * tangent, exit_blend - k * radial, exit_blend);
    append(exit, straight(exit_blend, exit_end));
    corridors.push_back(make_corridor(exit_id(i), std::move(exit), hw, {}));
    goals.push_back(exit_id(i));
  }
  return RoadMap(std::move(corridors), std::move(goals));
}

void SyntheticConfig::validate() const {
  if (min_agents < 1 || max_agents < min_agents || max_agents >= 1000) throw ValidationError("agent count range invalid");
  if (episodes < 1) throw ValidationError("episodes must be >= 1");
  if (episode_seconds <= 0 || spawn_window_seconds < 0 || spawn_window_seconds > episode_seconds) {
    throw ValidationError("episode/spawn window durations invalid");
  }
  if (!(v0_min_kmh > 0 && v0_max_kmh >= v0_min_kmh)) throw ValidationError("desired speed range invalid");
  if (per_horizon < 0) throw ValidationError("per_horizon must be >= 0");
  if (validation_episodes < 0 || validation_count < 0) throw ValidationError("validation sizes must be >= 0");
  for (int h : horizons) {
    if (!is_valid_horizon(h)) throw ValidationError("horizon " + std::to_string(h) + " is not a valid tier");
  }
}

std::vector<TrackLog> generate_tracks(const RoadMap& map, const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  const int n = config.geometry.entries;
  const int steps = time_to_step(config.episode_seconds);
  const int spawn_window = time_to_step(config.spawn_window_seconds);
  Rng rng(seed);

  std::vector<TrackLog> tracks;
  for (int e = 0; e < config.episodes + config.validation_episodes; ++e) {
    const int offset = e * (steps + 50);
    std::optional<std::vector<TrackLog>> recorded;
    for (int attempt = 0; attempt < config.max_attempts_per_episode && !recorded; ++attempt) {
      const int count = std::uniform_int_distribution<int>(config.min_agents, config.max_agents)(rng);
      // fixed size: simulated agents point into these paths
      std::vector<PendingAgent> agents(static_cast<std::size_t>(count));
      for (int a = 0; a < count; ++a) {
        PendingAgent& p = agents[static_cast<std::size_t>(a)];
        const int entry = std::uniform_int_distribution<int>(0, n - 1)(rng);
        const int turns = std::uniform_int_distribution<int>(1, n - 1)(rng);
        std::vector<std::string> ids{entry_id(entry)};
        for (int r = 0; r < turns; ++r) ids.push_back(ring_id((entry + r) % n));
        ids.push_back(exit_id((entry + turns) % n));
        p.path = build_route(map, ids).centerline;
        p.id = 1000 * static_cast<AgentId>(e + 1) + a;
        p.spawn_step = std::uniform_int_distribution<int>(0, spawn_window)(rng);
        p.v0 = std::uniform_real_distribution<double>(config.v0_min_kmh / 3.6, config.v0_max_kmh / 3.6)(rng);
        p.initial_speed = p.v0 * std::uniform_real_distribution<double>(0.7, 1.0)(rng);
        p.length = std::uniform_real_distribution<double>(4.2, 4.9)(rng);
        p.width = std::uniform_real_distribution<double>(1.75, 1.95)(rng);
      }
      recorded = simulate_episode(agents, steps, offset, config.min_spawn_clearance);
    }
    if (!recorded) {
      throw std::runtime_error("synthetic episode " + std::to_string(e) + " kept colliding after " +
                               std::to_string(config.max_attempts_per_episode) + " attempts");
    }
    for (TrackLog& t : *recorded) tracks.push_back(std::move(t));
  }
  return tracks;
}

SyntheticSet generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  SyntheticSet set;
  auto map = std::make_shared<const RoadMap>(build_roundabout(config.geometry));
  set.tracks = generate_tracks(*map, config, seed);
  // ids encode the episode: 1000 * (episode + 1) + agent
  const AgentId first_validation_id = 1000 * static_cast<AgentId>(config.episodes + 1);
  std::vector<TrackLog> train, validation;
  for (const TrackLog& t : set.tracks) (t.agent_id < first_validation_id ? train : validation).push_back(t);
  set.scenarios = extract_scenarios(train, map, config.horizons, config.per_horizon, seed);
  if (!validation.empty() && config.validation_count > 0) {
    const int longest[] = {150};
    set.validation = extract_scenarios(validation, map, longest, config.validation_count, seed + 1);
  }
  set.map = std::move(map);
  return set;
}

}  // namespace drivelearn
