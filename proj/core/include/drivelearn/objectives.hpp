#pragma once

#include <cmath>
#include <deque>
#include <numbers>
#include <span>
#include <vector>

#include "drivelearn/config.hpp"
#include "drivelearn/nn.hpp"

namespace drivelearn {

double synthetic_reward(bool new_collision, double ds_applied, const TrainConfig& cfg);
/// log D - log(1 - D) for D = sigmoid(logit), i.e. the clamped logit.
double data_driven_reward(double logit, const TrainConfig& cfg);
double sgail_reward(double r_s, double r_d, const TrainConfig& cfg);

struct AdvantageEstimate {
  std::vector<double> advantages;
  std::vector<double> returns;
};

/// Backward recursion over one episode; `bootstrap` is the value of the
/// observation after the last step (0 when the episode ended at its horizon).
AdvantageEstimate gae(std::span<const double> rewards, std::span<const double> values, double bootstrap,
                      double gamma, double lambda);

/// Shifts and scales to zero mean, unit (population) standard deviation.
void standardize(std::span<double> values);

inline double gaussian_entropy(double log_sigma) { return 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e) + log_sigma; }

/// Clipped surrogate plus entropy bonus, averaged over the minibatch. The
/// returned value is to be maximized; `grad` receives its gradient (ascent
/// direction), accumulated.
double ppo_policy_objective(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs,
                            const Vector& actions, const Vector& logp_old, const Vector& advantages, double clip_eps,
                            double entropy_coef, std::span<double> grad);

/// Pessimistically clipped squared error, averaged; gradient of the loss.
double value_objective(const NetworkLayout& layout, std::span<const double> params, ValueHead head,
                       const Matrix& obs, const Vector& returns, const Vector& values_old, double clip_eps,
                       std::span<double> grad);

/// Binary cross-entropy with D the probability of the expert; gradient of
/// the loss.
double discriminator_objective(const NetworkLayout& layout, std::span<const double> params, const Matrix& policy_obs,
                               const Vector& policy_actions, const Matrix& expert_obs, const Vector& expert_actions,
                               std::span<double> grad);

/// Mean Gaussian negative log-likelihood of expert actions; gradient of the
/// loss, scaled by `weight`.
double bc_objective(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs,
                    const Vector& actions, std::span<double> grad, double weight = 1.0);

/// Projects each gradient onto the normal plane of the other when they
/// conflict, then sums. `conflicted` reports whether projection happened.
std::vector<double> pcgrad_combine(std::span<const double> g_s, std::span<const double> g_d,
                                   bool* conflicted = nullptr);

double entropy_coefficient(double initial, double budget_fraction);
/// Imitation weight of BCGAIL: 1 at the start, 0 after `anneal_fraction`.
double bc_weight(double budget_fraction, double anneal_fraction);

inline constexpr int kTierCount = 6;

struct CurriculumState {
  int tier_index = 0;
  std::deque<double> window;

  int horizon() const;
};

/// Records one evaluation ADE; advances a tier once the window is full and
/// its mean is below the threshold, then starts a fresh window.
CurriculumState curriculum_update(CurriculumState state, double ade, double threshold = 3.0, int window = 20);

}  // namespace drivelearn
