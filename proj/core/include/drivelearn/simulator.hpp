#pragma once

#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <vector>

#include "drivelearn/geometry.hpp"
#include "drivelearn/scenario.hpp"

namespace drivelearn {

using Rng = std::mt19937_64;

/// Hard per-step cap on the actor's longitudinal shift (72 km/h).
inline constexpr double kDsCap = 2.0;
inline constexpr double kFrontConeHalfAngle = std::numbers::pi / 6.0;

enum class AgentMode { actor, replay_worker, idm_worker };
enum class WorkerMode { replay, idm };

const char* to_string(WorkerMode mode);

struct IdmParams {
  double v0 = 50.0 / 3.6;
  double time_headway = 1.5;
  double a_max = 1.5;
  double b = 2.0;
  double s0 = 2.0;
  double delta = 4.0;
  double cone_half_angle = kFrontConeHalfAngle;
  double detection_radius = 30.0;
  double lateral_acceptance = 2.5;

  void validate() const;
};

struct AgentState {
  AgentId id = 0;
  AgentMode mode = AgentMode::actor;
  bool active = true;
  double s = 0.0;
  Pose2 pose;
  double speed = 0.0;
  Point2 velocity;
  OrientedBox box;
  const ArcPath* path = nullptr;  // actor and IDM workers; owned by the scenario
  IdmParams idm;
  int track_index = -1;           // index into Scenario::worker_tracks

  void place_on_path(double new_s);
  void place_at(const TrackFrame& frame);
};

/// Mutable state of one episode. Holds a non-owning pointer to the scenario,
/// which must outlive the world.
struct WorldState {
  const Scenario* scenario = nullptr;
  int clock_step = 0;
  int horizon = 0;
  std::vector<AgentState> agents;  // agents[0] is the actor
  bool actor_collided = false;
  std::set<AgentId> collision_partners;
  std::vector<Point2> actor_history;  // actor positions, one per elapsed step plus the initial one
  double last_action = 0.0;

  const AgentState& actor() const { return agents.front(); }
  AgentState& actor() { return agents.front(); }
  bool done() const { return clock_step >= horizon; }
  int recorded_step() const { return scenario->initial_step + clock_step; }
};

struct CollisionEvent {
  int step = 0;
  AgentId partner = 0;
  bool front = false;
};

struct StepOutcome {
  bool new_collision = false;
  bool front_collision = false;
  bool done = false;
  double ds_applied = 0.0;
  std::vector<CollisionEvent> events;
};

class PlacementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Starts an episode of `horizon` steps (defaults to the scenario horizon).
/// IDM workers draw their desired speed U[30, 50] km/h from `rng`.
WorldState reset(const Scenario& scenario, WorkerMode worker_mode, Rng& rng, int horizon = -1);

double idm_acceleration(double v, double gap, double leader_v, const IdmParams& p);

struct LeaderInfo {
  double gap = 0.0;
  double speed = 0.0;
  AgentId id = 0;
};

/// Closest real or cone-projected virtual front neighbour of agents[index].
std::optional<LeaderInfo> virtual_leader(const WorldState& world, std::size_t index);

/// Applies IDM to every active IDM worker of `world` using the state at the
/// start of the step; returns per-agent accelerations (0 for others).
std::vector<double> idm_accelerations(const WorldState& world);
void integrate_idm(AgentState& agent, double acceleration);

/// Advances the episode by one step. Throws std::logic_error on a done world.
StepOutcome step(WorldState& world, double actor_ds);

}  // namespace drivelearn
