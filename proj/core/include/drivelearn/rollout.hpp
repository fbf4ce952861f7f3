#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "drivelearn/observation.hpp"
#include "drivelearn/policy.hpp"
#include "drivelearn/simulator.hpp"

namespace drivelearn {

struct TraceRow {
  int step = 0;
  AgentId agent_id = 0;
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
  double speed = 0.0;
  bool collided = false;
};

/// One episode of the actor, possibly cut short of the horizon.
struct Trajectory {
  std::string scenario_id;
  WorkerMode mode = WorkerMode::replay;
  int horizon = 0;
  std::vector<double> obs;       // kObsDim values per step
  std::vector<double> actions;   // raw policy output
  std::vector<double> executed;  // clamped into [0, kDsCap]
  std::vector<double> logp;
  std::vector<double> ds_applied;
  std::vector<char> new_collision;
  std::vector<char> front_collision;
  std::vector<Point2> positions;  // actor position before the first step and after each step
  std::vector<CollisionEvent> events;
  bool truncated = false;        // stopped before the horizon
  std::vector<double> next_obs;  // observation after the last step, kept for bootstrapping

  std::size_t size() const { return actions.size(); }
  bool done(std::size_t i) const { return i + 1 == size(); }
};

struct RolloutOptions {
  int horizon = -1;     // defaults to the scenario horizon
  int max_steps = -1;   // stop early after this many steps (truncation)
  bool stochastic = true;
  bool record_obs = true;
  NormalizationSpec normalization;
};

/// Resets `scenario` in `mode` and runs `policy` for the horizon. Sampling
/// and IDM desired speeds draw from `rng`. When `trace` is given every
/// agent's state is appended per step (step 0 included).
Trajectory rollout(const Policy& policy, const Scenario& scenario, WorkerMode mode, Rng& rng,
                   const RolloutOptions& options = {}, std::vector<TraceRow>* trace = nullptr);

void write_trace(const std::vector<TraceRow>& rows, std::ostream& out);

/// Independent stream for task `index` of iteration `iteration`.
std::uint64_t split_seed(std::uint64_t master, std::uint64_t iteration, std::uint64_t index);

}  // namespace drivelearn
