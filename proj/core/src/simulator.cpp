#include "drivelearn/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "drivelearn/error.hpp"

namespace drivelearn {

namespace {

constexpr double kSamePathHeadingTolerance = std::numbers::pi / 4.0;
constexpr double kMinGap = 0.01;

void sync_box(AgentState& a) {
  a.box.center = a.pose.position;
  a.box.heading = a.pose.heading;
}

}  // namespace

const char* to_string(WorkerMode mode) { return mode == WorkerMode::replay ? "replay" : "idm"; }

void IdmParams::validate() const {
  if (!(v0 > 0 && time_headway > 0 && a_max > 0 && b > 0 && s0 > 0 && cone_half_angle > 0 &&
        detection_radius > 0 && lateral_acceptance > 0)) {
    throw ValidationError("IDM parameters must be positive");
  }
  if (!(delta >= 1.0)) throw ValidationError("IDM exponent delta must be >= 1");
}

void AgentState::place_on_path(double new_s) {
  s = std::clamp(new_s, 0.0, path->length());
  pose = pose_at(*path, s);
  velocity = speed * unit_vector(pose.heading);
  sync_box(*this);
}

void AgentState::place_at(const TrackFrame& frame) {
  pose = {frame.position(), normalize_angle(frame.heading)};
  velocity = frame.velocity();
  speed = norm(velocity);
  sync_box(*this);
}

WorldState reset(const Scenario& scenario, WorkerMode worker_mode, Rng& rng, int horizon) {
  WorldState w;
  w.scenario = &scenario;
  w.horizon = horizon < 0 ? scenario.horizon_steps : horizon;
  if (w.horizon > scenario.horizon_steps || w.horizon <= 0) {
    throw ValidationError("rollout horizon " + std::to_string(w.horizon) + " outside scenario '" + scenario.id + "'");
  }

  const TrackFrame& first = scenario.expert_track.frames.front();
  AgentState actor;
  actor.id = scenario.actor_id;
  actor.mode = AgentMode::actor;
  actor.path = &scenario.reference_path();
  actor.box.length = first.length;
  actor.box.width = first.width;
  actor.speed = norm(first.velocity());
  actor.place_on_path(arc_project(*actor.path, first.position()).s);
  w.agents.push_back(actor);
  w.actor_history.push_back(actor.pose.position);

  std::uniform_real_distribution<double> desired_speed(30.0 / 3.6, 50.0 / 3.6);
  for (std::size_t i = 0; i < scenario.worker_tracks.size(); ++i) {
    const TrackLog& track = scenario.worker_tracks[i];
    AgentState a;
    a.id = track.agent_id;
    a.track_index = static_cast<int>(i);
    a.box.length = track.length();
    a.box.width = track.width();
    a.active = track.covers(scenario.initial_step);
    if (worker_mode == WorkerMode::replay) {
      a.mode = AgentMode::replay_worker;
    } else {
      a.mode = AgentMode::idm_worker;
      a.path = &scenario.worker_paths[i];
      a.idm.v0 = desired_speed(rng);
    }
    if (a.active) {
      const TrackFrame& f = track.at_step(scenario.initial_step);
      a.place_at(f);
      if (a.mode == AgentMode::idm_worker) a.place_on_path(arc_project(*a.path, f.position()).s);
    }
    w.agents.push_back(a);
  }

  for (std::size_t j = 1; j < w.agents.size(); ++j) {
    if (w.agents[j].active && obb_overlap(w.agents[0].box, w.agents[j].box)) {
      throw PlacementError("scenario '" + scenario.id + "': actor overlaps agent " +
                           std::to_string(w.agents[j].id) + " at reset");
    }
  }
  return w;
}

double idm_acceleration(double v, double gap, double leader_v, const IdmParams& p) {
  const double free_term = std::pow(v / p.v0, p.delta);
  double interaction = 0.0;
  if (std::isfinite(gap)) {
    const double desired =
        std::max(p.s0, p.s0 + v * p.time_headway + v * (v - leader_v) / (2.0 * std::sqrt(p.a_max * p.b)));
    interaction = (desired / gap) * (desired / gap);
  }
  return std::clamp(p.a_max * (1.0 - free_term - interaction), -2.0 * p.b, p.a_max);
}

std::optional<LeaderInfo> virtual_leader(const WorldState& world, std::size_t index) {
  const AgentState& me = world.agents[index];
  if (me.path == nullptr) return std::nullopt;
  const ArcPath& path = *me.path;
  const IdmParams& p = me.idm;

  std::optional<LeaderInfo> best;
  for (std::size_t j = 0; j < world.agents.size(); ++j) {
    if (j == index) continue;
    const AgentState& other = world.agents[j];
    if (!other.active) continue;
    if (distance(me.pose.position, other.pose.position) > p.detection_radius) continue;
    const Projection proj = arc_project(path, other.pose.position);
    if (std::abs(proj.lateral) >= p.lateral_acceptance) continue;
    const double along = proj.s - me.s;
    if (along <= 0.0) continue;
    const Pose2 at = pose_at(path, proj.s);
    const bool in_cone = in_front_cone(me.pose, other.pose.position, p.cone_half_angle);
    const bool same_path = std::abs(normalize_angle(other.pose.heading - at.heading)) < kSamePathHeadingTolerance;
    if (!in_cone && !same_path) continue;
    const double gap = std::max(along - 0.5 * me.box.length - 0.5 * other.box.length, kMinGap);
    if (!best || gap < best->gap) {
      best = LeaderInfo{gap, dot(other.velocity, unit_vector(at.heading)), other.id};
    }
  }
  return best;
}

std::vector<double> idm_accelerations(const WorldState& world) {
  std::vector<double> acc(world.agents.size(), 0.0);
  for (std::size_t i = 0; i < world.agents.size(); ++i) {
    const AgentState& a = world.agents[i];
    if (a.mode != AgentMode::idm_worker || !a.active) continue;
    const auto leader = virtual_leader(world, i);
    acc[i] = leader ? idm_acceleration(a.speed, leader->gap, leader->speed, a.idm)
                    : idm_acceleration(a.speed, std::numeric_limits<double>::infinity(), 0.0, a.idm);
  }
  return acc;
}

void integrate_idm(AgentState& agent, double acceleration) {
  agent.speed = std::max(0.0, agent.speed + acceleration * kDt);
  const double next = agent.s + agent.speed * kDt;
  if (next >= agent.path->length()) agent.speed = 0.0;  // frozen at the path end
  agent.place_on_path(next);
}

StepOutcome step(WorldState& world, double actor_ds) {
  if (world.done()) throw std::logic_error("step() called on a finished episode");
  const Scenario& sc = *world.scenario;
  const std::vector<double> acc = idm_accelerations(world);

  StepOutcome out;
  AgentState& actor = world.actor();
  const double before = actor.s;
  const double commanded = std::clamp(std::isfinite(actor_ds) ? actor_ds : 0.0, 0.0, kDsCap);
  actor.speed = 0.0;
  actor.place_on_path(before + commanded);
  out.ds_applied = actor.s - before;
  actor.speed = out.ds_applied / kDt;
  actor.velocity = actor.speed * unit_vector(actor.pose.heading);

  world.clock_step += 1;
  const int rec = world.recorded_step();
  for (std::size_t i = 1; i < world.agents.size(); ++i) {
    AgentState& a = world.agents[i];
    const TrackLog& track = sc.worker_tracks[static_cast<std::size_t>(a.track_index)];
    if (a.mode == AgentMode::replay_worker) {
      a.active = track.covers(rec);
      if (a.active) a.place_at(track.at_step(rec));
    } else if (a.active) {
      integrate_idm(a, acc[i]);
    } else if (track.first_step == rec) {
      const TrackFrame& f = track.at_step(rec);
      a.active = true;
      a.place_at(f);
      a.place_on_path(arc_project(*a.path, f.position()).s);
    }
  }

  for (std::size_t i = 1; i < world.agents.size(); ++i) {
    const AgentState& a = world.agents[i];
    if (!a.active || !obb_overlap(actor.box, a.box)) continue;
    world.actor_collided = true;
    if (!world.collision_partners.insert(a.id).second) continue;
    const bool front = in_front_cone(actor.pose, a.box.center, kFrontConeHalfAngle);
    out.new_collision = true;
    out.front_collision = out.front_collision || front;
    out.events.push_back({world.clock_step, a.id, front});
  }

  world.actor_history.push_back(actor.pose.position);
  world.last_action = out.ds_applied;
  out.done = world.done();
  return out;
}

}  // namespace drivelearn
