#pragma once

#include <span>
#include <vector>

#include "drivelearn/observation.hpp"
#include "drivelearn/scenario.hpp"

namespace drivelearn {

/// Demonstration pairs. Observations are stored row after row, already
/// normalized, kObsDim values per pair.
struct ExpertBuffer {
  std::vector<double> observations;
  std::vector<double> actions;
  std::size_t skipped = 0;  // steps dropped because the expert strayed from its route

  std::size_t size() const { return actions.size(); }
  std::span<const double> observation(std::size_t i) const {
    return {observations.data() + i * kObsDim, static_cast<std::size_t>(kObsDim)};
  }
};

/// Longitudinal shift the expert performed between step t and t+1 of the
/// episode, recovered by differencing projections on the reference path.
/// Returns horizon_steps values clamped to [0, kDsCap].
std::vector<double> expert_actions(const Scenario& scenario);

/// Replays every scenario with recorded workers while the actor applies its
/// expert actions, and collects one (observation, action) pair per step.
/// Steps where the recorded position lies more than 2 m off the reference
/// path are skipped and counted.
ExpertBuffer build_expert_buffer(std::span<const Scenario> scenarios, const NormalizationSpec& spec = {});

}  // namespace drivelearn
