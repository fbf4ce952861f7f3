#include "drivelearn/policy.hpp"

#include <algorithm>

#include "drivelearn/error.hpp"

namespace drivelearn {

NetworkPolicy::NetworkPolicy(const NetworkLayout& layout, std::vector<double> params)
    : layout_(&layout), params_(std::move(params)) {
  if (params_.size() != layout.size()) throw ValidationError("parameter count does not match the network layout");
}

ActionDraw NetworkPolicy::draw(const WorldState&, std::span<const double> obs, Rng* rng) const {
  const auto [mu, sigma] = forward_policy(*layout_, params_, obs);
  if (rng == nullptr) return {mu, gaussian_logpdf(mu, mu, sigma)};
  const auto [x, logp] = sample_and_logprob(mu, sigma, *rng);
  return {x, logp};
}

ActionDraw ExpertReplayPolicy::draw(const WorldState& world, std::span<const double>, Rng*) const {
  const Scenario& sc = *world.scenario;
  const auto& frame = sc.expert_track.frames.at(static_cast<std::size_t>(world.clock_step) + 1);
  const double target = arc_project(sc.reference_path(), frame.position()).s;
  return {std::clamp(target - world.actor().s, 0.0, kDsCap), 0.0};
}

ActionDraw ConstantPolicy::draw(const WorldState&, std::span<const double>, Rng*) const { return {ds_, 0.0}; }

std::unique_ptr<Policy> make_policy(const Checkpoint& ckpt, const NetworkLayout& layout) {
  if (ckpt.kind == CheckpointKind::expert_replay) return std::make_unique<ExpertReplayPolicy>();
  if (ckpt.layout_hash != layout.hash()) throw ValidationError("checkpoint was written for a different network layout");
  return std::make_unique<NetworkPolicy>(layout, ckpt.params);
}

}  // namespace drivelearn
