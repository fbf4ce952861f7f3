#include "drivelearn/rollout.hpp"

#include <algorithm>
#include <iomanip>
#include <ostream>

namespace drivelearn {

namespace {

void append_trace(const WorldState& world, std::vector<TraceRow>& rows) {
  for (const AgentState& a : world.agents) {
    if (!a.active) continue;
    const bool collided = a.mode == AgentMode::actor ? world.actor_collided : world.collision_partners.contains(a.id);
    rows.push_back({world.clock_step, a.id, a.pose.position.x, a.pose.position.y, a.pose.heading, a.speed, collided});
  }
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t split_seed(std::uint64_t master, std::uint64_t iteration, std::uint64_t index) {
  return splitmix64(splitmix64(splitmix64(master) ^ iteration) ^ index);
}

Trajectory rollout(const Policy& policy, const Scenario& scenario, WorkerMode mode, Rng& rng,
                   const RolloutOptions& options, std::vector<TraceRow>* trace) {
  WorldState world = reset(scenario, mode, rng, options.horizon);
  Trajectory traj;
  traj.scenario_id = scenario.id;
  traj.mode = mode;
  traj.horizon = world.horizon;
  const int steps = options.max_steps < 0 ? world.horizon : std::min(world.horizon, options.max_steps);
  traj.positions.push_back(world.actor().pose.position);
  if (trace != nullptr) append_trace(world, *trace);

  std::vector<double> obs(kObsDim);
  normalize_into(build_observation(world), options.normalization, obs);
  for (int t = 0; t < steps; ++t) {
    const ActionDraw a = policy.draw(world, obs, options.stochastic ? &rng : nullptr);
    if (options.record_obs) traj.obs.insert(traj.obs.end(), obs.begin(), obs.end());
    const double executed = std::clamp(std::isfinite(a.action) ? a.action : 0.0, 0.0, kDsCap);
    const StepOutcome out = step(world, executed);
    traj.actions.push_back(a.action);
    traj.executed.push_back(executed);
    traj.logp.push_back(a.logp);
    traj.ds_applied.push_back(out.ds_applied);
    traj.new_collision.push_back(out.new_collision ? 1 : 0);
    traj.front_collision.push_back(out.front_collision ? 1 : 0);
    traj.events.insert(traj.events.end(), out.events.begin(), out.events.end());
    traj.positions.push_back(world.actor().pose.position);
    if (trace != nullptr) append_trace(world, *trace);
    if (!world.done()) normalize_into(build_observation(world), options.normalization, obs);
  }
  traj.truncated = !world.done();
  if (traj.truncated) traj.next_obs = obs;
  return traj;
}

void write_trace(const std::vector<TraceRow>& rows, std::ostream& out) {
  out << "step,agent_id,x,y,heading,speed,collided\n";
  out << std::fixed << std::setprecision(6);
  for (const TraceRow& r : rows) {
    out << r.step << ',' << r.agent_id << ',' << r.x << ',' << r.y << ',' << r.heading << ',' << r.speed << ','
        << (r.collided ? 1 : 0) << '\n';
  }
}

}  // namespace drivelearn
