#include "drivelearn/observation.hpp"

#include <algorithm>
#include <stdexcept>

#include "drivelearn/error.hpp"

namespace drivelearn {

void NormalizationSpec::validate() const {
  if (!(position_scale > 0 && speed_scale > 0 && distance_scale > 0 && action_scale > 0)) {
    throw ValidationError("normalization scales must be positive");
  }
}

Observation build_observation(const WorldState& world) {
  const AgentState& actor = world.actor();
  const Pose2& frame = actor.pose;
  const Route& route = world.scenario->route;
  Observation obs;

  const auto ahead = sample_ahead(route.centerline, actor.s, kRouteSpacing, kRoutePoints);
  for (int i = 0; i < kRoutePoints; ++i) obs.route[i] = to_local(frame, ahead[i]);

  const double s_right = arc_project(route.right_bound, frame.position).s;
  const double s_left = arc_project(route.left_bound, frame.position).s;
  const auto right = sample_ahead(route.right_bound, s_right, kRouteSpacing, kBoundPoints);
  const auto left = sample_ahead(route.left_bound, s_left, kRouteSpacing, kBoundPoints);
  for (int i = 0; i < kBoundPoints; ++i) {
    obs.right_bound[i] = to_local(frame, right[i]);
    obs.left_bound[i] = to_local(frame, left[i]);
  }

  std::vector<std::pair<double, std::size_t>> nearest;
  for (std::size_t j = 1; j < world.agents.size(); ++j) {
    const AgentState& a = world.agents[j];
    if (!a.active) continue;
    nearest.emplace_back(distance(frame.position, a.pose.position), j);
  }
  std::sort(nearest.begin(), nearest.end());
  for (std::size_t k = 0; k < nearest.size() && k < kNeighborSlots; ++k) {
    const AgentState& a = world.agents[nearest[k].second];
    NeighborBlock& n = obs.neighbors[k];
    n.mask = 1.0;
    n.position = to_local(frame, a.pose.position);
    n.velocity = rotate_to_local(frame, a.velocity);
    n.distance = nearest[k].first;
    const auto corners = a.box.corners();
    for (int c = 0; c < 4; ++c) n.border[c] = to_local(frame, corners[c]);
  }

  const auto& hist = world.actor_history;
  for (int i = 0; i < kHistoryPoints; ++i) {
    // pad pre-episode slots with the initial position
    const int idx = static_cast<int>(hist.size()) - kHistoryPoints + i;
    obs.history[i] = to_local(frame, hist[static_cast<std::size_t>(std::max(idx, 0))]);
  }
  obs.last_action = world.last_action;
  obs.collision_flag = world.actor_collided ? 1.0 : 0.0;
  const auto corners = actor.box.corners();
  for (int c = 0; c < 4; ++c) obs.ego_border[c] = to_local(frame, corners[c]);
  return obs;
}

void normalize_into(const Observation& obs, const NormalizationSpec& spec, std::span<double> out) {
  if (out.size() != static_cast<std::size_t>(kObsDim)) throw std::invalid_argument("observation buffer must hold 262 values");
  std::size_t i = 0;
  const auto put_point = [&](Point2 p, double scale) {
    out[i++] = p.x / scale;
    out[i++] = p.y / scale;
  };
  const double pos = spec.position_scale;
  for (const Point2& p : obs.route) put_point(p, pos);
  for (const Point2& p : obs.right_bound) put_point(p, pos);
  for (const Point2& p : obs.left_bound) put_point(p, pos);
  for (const NeighborBlock& n : obs.neighbors) {
    out[i++] = n.mask;
    put_point(n.position, pos);
    put_point(n.velocity, spec.speed_scale);
    out[i++] = n.distance / spec.distance_scale;
    for (const Point2& p : n.border) put_point(p, pos);
  }
  for (const Point2& p : obs.history) put_point(p, pos);
  out[i++] = obs.last_action / spec.action_scale;
  out[i++] = obs.collision_flag;
  for (const Point2& p : obs.ego_border) put_point(p, pos);
}

std::vector<double> normalize(const Observation& obs, const NormalizationSpec& spec) {
  std::vector<double> out(kObsDim);
  normalize_into(obs, spec, out);
  return out;
}

}  // namespace drivelearn
