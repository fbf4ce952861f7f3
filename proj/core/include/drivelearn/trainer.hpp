#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "drivelearn/config.hpp"
#include "drivelearn/expert_buffer.hpp"
#include "drivelearn/nn.hpp"
#include "drivelearn/objectives.hpp"
#include "drivelearn/rollout.hpp"

namespace drivelearn {

struct IterationMetrics {
  int iter = 0;
  long steps = 0;  // cumulative after this iteration
  double mean_return_S = 0.0;
  double mean_return_D = 0.0;
  double disc_loss = 0.0;
  double policy_obj = 0.0;
  double value_loss_S = 0.0;
  double value_loss_D = 0.0;
  double entropy_coef = 0.0;
  int curriculum_tier = 0;  // horizon in steps used by this iteration's rollouts
  double grad_conflict_rate = 0.0;
};

void write_log_header(std::ostream& out);
void write_log_row(std::ostream& out, const IterationMetrics& m);

/// Per-step data of one iteration, episodes stored back to back.
struct TrajectoryBatch {
  Matrix obs;
  Vector actions;
  Vector executed;
  Vector logp_old;
  Vector reward_S;
  Vector reward_D;
  Vector value_S;
  Vector value_D;
  std::vector<char> done;
  std::vector<int> episode;
  std::vector<WorkerMode> mode;
  std::vector<std::size_t> episode_begin;  // plus a final sentinel
  std::vector<char> truncated;             // per episode
  Matrix bootstrap_obs;                    // one row per episode (zeros unless truncated)

  std::size_t size() const { return static_cast<std::size_t>(actions.size()); }
  std::size_t episodes() const { return truncated.size(); }
};

struct MoppoGradients {
  std::vector<double> g_S;
  std::vector<double> g_D;
  std::vector<double> combined;
  bool conflicted = false;
  double objective_S = 0.0;
  double objective_D = 0.0;
};

/// Ascent gradients of both clipped objectives on one minibatch, restricted
/// to the policy parameters, and their PCGrad combination.
MoppoGradients moppo_policy_gradient(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs,
                                     const Vector& actions, const Vector& logp_old, const Vector& adv_S,
                                     const Vector& adv_D, double clip_eps, double entropy_coef);

/// Worker modes each picked scenario is rolled in: M replay, I idm, mix both.
std::vector<WorkerMode> rollout_modes(WorkerVariant variant);

class Trainer {
 public:
  /// `scenarios` must outlive the trainer.
  Trainer(TrainConfig cfg, std::span<const Scenario> scenarios, std::uint64_t seed, int workers = 1);

  bool finished() const { return iteration_ >= total_iterations_; }
  int total_iterations() const { return total_iterations_; }
  IterationMetrics iterate();

  const NetworkLayout& layout() const { return layout_; }
  const std::vector<double>& params() const { return params_; }
  const TrainConfig& config() const { return cfg_; }
  const CurriculumState& curriculum() const { return curriculum_; }
  long steps() const { return steps_; }
  const ExpertBuffer& expert_buffer() const { return expert_; }

  /// Test hook: feed r_S into the data-driven stream as well and use V_S
  /// for both, making the two MOPPO objectives identical.
  void force_equal_streams(bool on) { equal_streams_ = on; }
  /// Gradients of the first MOPPO minibatch of the last iteration.
  const MoppoGradients& last_moppo_gradients() const { return last_moppo_; }
  /// Worker mode of every episode collected by the last iteration.
  const std::vector<WorkerMode>& last_episode_modes() const { return last_modes_; }

 private:
  TrajectoryBatch collect(int horizon, std::uint64_t iteration_seed);
  double train_discriminator(const TrajectoryBatch& batch, Rng& rng);
  IterationMetrics bc_iteration(double fraction);
  IterationMetrics simulation_iteration(double fraction);
  void update_curriculum(int horizon, Rng& rng);
  bool uses_discriminator() const;

  TrainConfig cfg_;
  std::span<const Scenario> scenarios_;
  std::uint64_t seed_;
  int workers_;
  NetworkLayout layout_;
  std::vector<double> params_;
  Adam policy_opt_;
  Adam value_s_opt_;
  Adam value_d_opt_;
  Adam disc_opt_;
  ExpertBuffer expert_;
  CurriculumState curriculum_;
  long steps_ = 0;
  int iteration_ = 0;
  int total_iterations_ = 0;
  int max_tier_ = 0;  // highest tier some training scenario can fill
  std::size_t bc_cursor_ = 0;
  std::vector<std::size_t> bc_order_;
  bool equal_streams_ = false;
  MoppoGradients last_moppo_;
  std::vector<WorkerMode> last_modes_;
};

struct TrainResult {
  std::vector<double> params;
  std::uint64_t layout_hash = 0;
  std::vector<IterationMetrics> log;
};

/// Runs the configured algorithm until the budget is consumed:
/// ceil(budget / rollout_steps) iterations.
TrainResult train(const TrainConfig& cfg, std::span<const Scenario> scenarios, std::uint64_t seed, int workers = 1,
                  const std::function<void(const IterationMetrics&)>& on_iteration = {});

}  // namespace drivelearn
