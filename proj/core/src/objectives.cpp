#include "drivelearn/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "drivelearn/scenario.hpp"

namespace drivelearn {

namespace {

constexpr double kProbFloor = 1e-6;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

double synthetic_reward(bool new_collision, double ds_applied, const TrainConfig& cfg) {
  return (new_collision ? cfg.r_col : 0.0) + cfg.alpha * std::min(ds_applied / cfg.ds_max_step, 1.0);
}

double data_driven_reward(double logit, const TrainConfig& cfg) { return std::clamp(logit, -cfg.rd_clip, cfg.rd_clip); }

double sgail_reward(double r_s, double r_d, const TrainConfig& cfg) {
  return cfg.sgail_weight_s * r_s + (1.0 - cfg.sgail_weight_s) * r_d;
}

AdvantageEstimate gae(std::span<const double> rewards, std::span<const double> values, double bootstrap,
                      double gamma, double lambda) {
  if (rewards.size() != values.size()) throw std::invalid_argument("gae: rewards and values differ in length");
  const std::size_t n = rewards.size();
  AdvantageEstimate out{std::vector<double>(n), std::vector<double>(n)};
  double next_value = bootstrap;
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double delta = rewards[k] + gamma * next_value - values[k];
    running = delta + gamma * lambda * running;
    out.advantages[k] = running;
    out.returns[k] = running + values[k];
    next_value = values[k];
  }
  return out;
}

void standardize(std::span<double> values) {
  if (values.empty()) return;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / n);
  for (double& v : values) v = sd > 1e-12 ? (v - mean) / sd : 0.0;
}

double ppo_policy_objective(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs,
                            const Vector& actions, const Vector& logp_old, const Vector& advantages, double clip_eps,
                            double entropy_coef, std::span<double> grad) {
  const Eigen::Index n = obs.rows();
  if (n == 0 || actions.size() != n || logp_old.size() != n || advantages.size() != n) {
    throw std::invalid_argument("ppo_policy_objective: inconsistent minibatch");
  }
  PolicyPass pass;
  pass.forward(layout, params, obs);
  const double sigma = pass.sigma();
  Vector d_mu(n);
  double d_log_sigma = 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = pass.mu()[i];
    const double z = (actions[i] - mu) / sigma;
    const double ratio = std::exp(gaussian_logpdf(actions[i], mu, sigma) - logp_old[i]);
    if (!std::isfinite(ratio)) throw NumericalError("non-finite likelihood ratio");
    const double a = advantages[i];
    const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
    const double unclipped_term = ratio * a;
    const double clipped_term = clipped * a;
    total += std::min(unclipped_term, clipped_term);
    // the gradient flows only through the unclipped branch when it is the minimum
    const double d_ratio = unclipped_term <= clipped_term ? a / static_cast<double>(n) : 0.0;
    d_mu[i] = d_ratio * ratio * z / sigma;
    d_log_sigma += d_ratio * ratio * (z * z - 1.0);
  }
  d_log_sigma += entropy_coef;
  pass.backward(params, d_mu, d_log_sigma, grad);
  return total / static_cast<double>(n) + entropy_coef * gaussian_entropy(pass.log_sigma());
}

double value_objective(const NetworkLayout& layout, std::span<const double> params, ValueHead head,
                       const Matrix& obs, const Vector& returns, const Vector& values_old, double clip_eps,
                       std::span<double> grad) {
  const Eigen::Index n = obs.rows();
  if (n == 0 || returns.size() != n || values_old.size() != n) {
    throw std::invalid_argument("value_objective: inconsistent minibatch");
  }
  ValuePass pass;
  pass.forward(layout, params, obs, head);
  Vector d_v(n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = pass.values()[i];
    const double lo = values_old[i] - clip_eps;
    const double hi = values_old[i] + clip_eps;
    const double vc = std::clamp(v, lo, hi);
    const double l = (v - returns[i]) * (v - returns[i]);
    const double lc = (vc - returns[i]) * (vc - returns[i]);
    total += std::max(l, lc);
    if (l >= lc) {
      d_v[i] = 2.0 * (v - returns[i]);
    } else {
      d_v[i] = (v > lo && v < hi) ? 2.0 * (vc - returns[i]) : 0.0;
    }
    d_v[i] /= static_cast<double>(n);
  }
  pass.backward(params, d_v, grad);
  return total / static_cast<double>(n);
}

double discriminator_objective(const NetworkLayout& layout, std::span<const double> params, const Matrix& policy_obs,
                               const Vector& policy_actions, const Matrix& expert_obs, const Vector& expert_actions,
                               std::span<double> grad) {
  if (policy_obs.rows() == 0 || expert_obs.rows() == 0) {
    throw std::invalid_argument("discriminator_objective: empty policy or expert set");
  }
  double loss = 0.0;
  const auto side = [&](const Matrix& obs, const Vector& actions, bool expert) {
    DiscriminatorPass pass;
    pass.forward(layout, params, obs, actions);
    const double n = static_cast<double>(obs.rows());
    Vector d(obs.rows());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < obs.rows(); ++i) {
      const double raw = sigmoid(pass.logits()[i]);
      const double p = std::clamp(raw, kProbFloor, 1.0 - kProbFloor);
      const bool clamped = p != raw;
      if (expert) {
        sum += -std::log(p);
        d[i] = clamped ? 0.0 : -(1.0 - raw) / n;
      } else {
        sum += -std::log(1.0 - p);
        d[i] = clamped ? 0.0 : raw / n;
      }
    }
    pass.backward(params, d, grad);
    loss += sum / n;
  };
  side(expert_obs, expert_actions, true);
  side(policy_obs, policy_actions, false);
  return loss;
}

double bc_objective(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs,
                    const Vector& actions, std::span<double> grad, double weight) {
  const Eigen::Index n = obs.rows();
  if (n == 0 || actions.size() != n) throw std::invalid_argument("bc_objective: empty or inconsistent batch");
  PolicyPass pass;
  pass.forward(layout, params, obs);
  const double sigma = pass.sigma();
  Vector d_mu(n);
  double d_log_sigma = 0.0;
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = (actions[i] - pass.mu()[i]) / sigma;
    total += -gaussian_logpdf(actions[i], pass.mu()[i], sigma);
    d_mu[i] = weight * (-z / sigma) / static_cast<double>(n);
    d_log_sigma += weight * (1.0 - z * z) / static_cast<double>(n);
  }
  pass.backward(params, d_mu, d_log_sigma, grad);
  return total / static_cast<double>(n);
}

std::vector<double> pcgrad_combine(std::span<const double> g_s, std::span<const double> g_d, bool* conflicted) {
  if (g_s.size() != g_d.size()) throw std::invalid_argument("pcgrad_combine: gradient lengths differ");
  const std::size_t n = g_s.size();
  double sd = 0.0, ss = 0.0, dd = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sd += g_s[i] * g_d[i];
    ss += g_s[i] * g_s[i];
    dd += g_d[i] * g_d[i];
  }
  std::vector<double> out(n);
  const bool conflict = sd < 0.0;
  if (conflicted != nullptr) *conflicted = conflict;
  const double ks = conflict && dd > 0.0 ? sd / dd : 0.0;
  const double kd = conflict && ss > 0.0 ? sd / ss : 0.0;
  for (std::size_t i = 0; i < n; ++i) out[i] = (g_s[i] - ks * g_d[i]) + (g_d[i] - kd * g_s[i]);
  return out;
}

double entropy_coefficient(double initial, double budget_fraction) {
  return initial * (1.0 - std::clamp(budget_fraction, 0.0, 1.0));
}

double bc_weight(double budget_fraction, double anneal_fraction) {
  return std::max(0.0, 1.0 - budget_fraction / anneal_fraction);
}

int CurriculumState::horizon() const { return kHorizonTiers[tier_index]; }

CurriculumState curriculum_update(CurriculumState state, double ade, double threshold, int window) {
  if (state.tier_index >= kTierCount - 1) return state;
  state.window.push_back(ade);
  while (static_cast<int>(state.window.size()) > window) state.window.pop_front();
  if (static_cast<int>(state.window.size()) == window) {
    const double mean = std::accumulate(state.window.begin(), state.window.end(), 0.0) / window;
    if (mean < threshold) {
      ++state.tier_index;
      state.window.clear();
    }
  }
  return state;
}

}  // namespace drivelearn
