#pragma once

#include <memory>
#include <span>
#include <vector>

#include "drivelearn/checkpoint.hpp"
#include "drivelearn/nn.hpp"
#include "drivelearn/simulator.hpp"

namespace drivelearn {

struct ActionDraw {
  double action = 0.0;  // raw value, may lie outside [0, kDsCap]
  double logp = 0.0;
};

class Policy {
 public:
  virtual ~Policy() = default;

  /// With `rng` the action is sampled, otherwise the deterministic action is
  /// returned. `obs` is the normalized observation of `world`.
  virtual ActionDraw draw(const WorldState& world, std::span<const double> obs, Rng* rng) const = 0;
};

class NetworkPolicy final : public Policy {
 public:
  NetworkPolicy(const NetworkLayout& layout, std::vector<double> params);
  ActionDraw draw(const WorldState& world, std::span<const double> obs, Rng* rng) const override;
  const std::vector<double>& params() const { return params_; }

 private:
  const NetworkLayout* layout_;
  std::vector<double> params_;
};

/// Follows the recorded expert: each step moves to the projection of the
/// next expert frame on the reference path.
class ExpertReplayPolicy final : public Policy {
 public:
  ActionDraw draw(const WorldState& world, std::span<const double> obs, Rng* rng) const override;
};

class ConstantPolicy final : public Policy {
 public:
  explicit ConstantPolicy(double ds) : ds_(ds) {}
  ActionDraw draw(const WorldState& world, std::span<const double> obs, Rng* rng) const override;

 private:
  double ds_;
};

/// Builds the policy stored in a checkpoint; network checkpoints must match
/// `layout`.
std::unique_ptr<Policy> make_policy(const Checkpoint& ckpt, const NetworkLayout& layout);

}  // namespace drivelearn
