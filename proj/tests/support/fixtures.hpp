#pragma once

#include <cmath>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "drivelearn/scenario.hpp"
#include "drivelearn/synthetic.hpp"

namespace drivelearn::testing {

inline std::filesystem::path fixture_path(const std::string& name) {
  return std::filesystem::path(DRIVELEARN_FIXTURE_DIR) / name;
}

/// Straight corridor polyline from `from` to `to` at 1 m spacing with
/// bounds at +-half_width.
inline Corridor straight_corridor(std::string id, Point2 from, Point2 to, double half_width = 1.75,
                                  std::vector<std::string> successors = {}) {
  const double len = distance(from, to);
  const auto n = static_cast<int>(std::ceil(len));
  const Point2 u = (1.0 / len) * (to - from);
  const Point2 normal{-u.y, u.x};
  std::vector<Point2> c, l, r;
  for (int k = 0; k <= n; ++k) {
    const Point2 p = from + (len * k / n) * u;
    c.push_back(p);
    l.push_back(p + half_width * normal);
    r.push_back(p - half_width * normal);
  }
  return Corridor{std::move(id), ArcPath(c), ArcPath(l), ArcPath(r), std::move(successors)};
}

/// One goal corridor along +x from the origin.
inline std::shared_ptr<const RoadMap> straight_map(double length = 400.0) {
  std::vector<Corridor> cs{straight_corridor("road", {0.0, 0.0}, {length, 0.0})};
  return std::make_shared<const RoadMap>(std::move(cs), std::vector<std::string>{"road"});
}

/// Two goal corridors crossing at the origin: "ew" along +x, "sn" along +y.
inline std::shared_ptr<const RoadMap> crossing_map() {
  std::vector<Corridor> cs{straight_corridor("ew", {-100.0, 0.0}, {100.0, 0.0}),
                           straight_corridor("sn", {0.0, -100.0}, {0.0, 100.0})};
  return std::make_shared<const RoadMap>(std::move(cs), std::vector<std::string>{"ew", "sn"});
}

/// Agent moving at constant velocity from `start`, one frame per step.
inline TrackLog linear_track(AgentId id, int first_step, int frames, Point2 start, Point2 velocity,
                             double length = 4.5, double width = 1.8) {
  TrackLog t;
  t.agent_id = id;
  t.first_step = first_step;
  const double heading = (velocity.x == 0.0 && velocity.y == 0.0) ? 0.0 : std::atan2(velocity.y, velocity.x);
  for (int k = 0; k < frames; ++k) {
    TrackFrame f;
    f.t = step_to_time(first_step + k);
    const Point2 p = start + (k * kDt) * velocity;
    f.x = p.x;
    f.y = p.y;
    f.vx = velocity.x;
    f.vy = velocity.y;
    f.heading = heading;
    f.length = length;
    f.width = width;
    t.frames.push_back(f);
  }
  return t;
}

/// Default synthetic set, generated once per test binary.
inline const SyntheticSet& synthetic_set() {
  static const SyntheticSet set = generate_synthetic(SyntheticConfig{}, 1);
  return set;
}

}  // namespace drivelearn::testing
