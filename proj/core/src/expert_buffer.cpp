#include "drivelearn/expert_buffer.hpp"

#include <algorithm>
#include <iostream>

#include "drivelearn/simulator.hpp"

namespace drivelearn {

namespace {

constexpr double kMaxExpertLateral = 2.0;

}  // namespace

std::vector<double> expert_actions(const Scenario& scenario) {
  const ArcPath& path = scenario.reference_path();
  const auto& frames = scenario.expert_track.frames;
  std::vector<double> actions;
  actions.reserve(static_cast<std::size_t>(scenario.horizon_steps));
  double prev = arc_project(path, frames.front().position()).s;
  for (int t = 1; t <= scenario.horizon_steps; ++t) {
    const double next = arc_project(path, frames[static_cast<std::size_t>(t)].position()).s;
    actions.push_back(std::clamp(next - prev, 0.0, kDsCap));
    prev = next;
  }
  return actions;
}

ExpertBuffer build_expert_buffer(std::span<const Scenario> scenarios, const NormalizationSpec& spec) {
  ExpertBuffer buffer;
  Rng unused(0);  // replay mode draws nothing
  for (const Scenario& sc : scenarios) {
    const ArcPath& path = sc.reference_path();
    const auto& frames = sc.expert_track.frames;
    WorldState world = reset(sc, WorkerMode::replay, unused);
    Projection prev = arc_project(path, frames.front().position());
    for (int t = 0; t < sc.horizon_steps; ++t) {
      const Projection next = arc_project(path, frames[static_cast<std::size_t>(t) + 1].position());
      const double action = std::clamp(next.s - prev.s, 0.0, kDsCap);
      if (std::abs(prev.lateral) > kMaxExpertLateral || std::abs(next.lateral) > kMaxExpertLateral) {
        ++buffer.skipped;
      } else {
        const std::size_t row = buffer.observations.size();
        buffer.observations.resize(row + kObsDim);
        normalize_into(build_observation(world), spec, {buffer.observations.data() + row, kObsDim});
        buffer.actions.push_back(action);
      }
      step(world, action);
      prev = next;
    }
  }
  if (buffer.skipped > 0) {
    std::cerr << "warning: skipped " << buffer.skipped << " expert steps more than 2 m off the reference path\n";
  }
  return buffer;
}

}  // namespace drivelearn
