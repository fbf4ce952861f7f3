#include "drivelearn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <sstream>

#include "drivelearn/error.hpp"
#include "drivelearn/eval.hpp"
#include "drivelearn/parallel.hpp"

namespace drivelearn {

namespace {

constexpr std::uint64_t kInitStream = 0x1d1e5eedULL;
constexpr std::uint64_t kRolloutStream = 0x2011007ULL;
constexpr std::uint64_t kTrainerStream = 0x7a1a7ULL;

struct Stream {
  const Vector* rewards = nullptr;
  Vector values;
  Vector bootstrap;
  ValueHead head = ValueHead::S;
  Vector advantages;
  Vector returns;
};

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(idx[k]));
  return out;
}

Vector gather(const Vector& v, std::span<const std::size_t> idx) {
  Vector out(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out[static_cast<Eigen::Index>(k)] = v[static_cast<Eigen::Index>(idx[k])];
  return out;
}

Matrix expert_rows(const ExpertBuffer& buffer, std::span<const std::size_t> idx, Vector& actions) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), kObsDim);
  actions.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto row = buffer.observation(idx[k]);
    for (int c = 0; c < kObsDim; ++c) out(static_cast<Eigen::Index>(k), c) = row[static_cast<std::size_t>(c)];
    actions[static_cast<Eigen::Index>(k)] = buffer.actions[idx[k]];
  }
  return out;
}

std::vector<std::size_t> sample_indices(std::size_t count, std::size_t population, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, population - 1);
  std::vector<std::size_t> idx(count);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

Vector values_of(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs, ValueHead head) {
  if (obs.rows() == 0) return {};
  ValuePass pass;
  pass.forward(layout, params, obs, head);
  return pass.values();
}

void negate_range(std::vector<double>& g, ParamRange r) {
  for (std::size_t i = r.begin; i < r.end; ++i) g[i] = -g[i];
}

void run_gae(const TrajectoryBatch& b, Stream& s, const TrainConfig& cfg) {
  s.advantages.resize(static_cast<Eigen::Index>(b.size()));
  s.returns.resize(static_cast<Eigen::Index>(b.size()));
  for (std::size_t e = 0; e < b.episodes(); ++e) {
    const std::size_t lo = b.episode_begin[e];
    const std::size_t hi = b.episode_begin[e + 1];
    const std::size_t n = hi - lo;
    const double boot = b.truncated[e] ? s.bootstrap[static_cast<Eigen::Index>(e)] : 0.0;
    const AdvantageEstimate est = gae({s.rewards->data() + lo, n}, {s.values.data() + lo, n}, boot, cfg.gamma, cfg.lambda);
    for (std::size_t k = 0; k < n; ++k) {
      s.advantages[static_cast<Eigen::Index>(lo + k)] = est.advantages[k];
      s.returns[static_cast<Eigen::Index>(lo + k)] = est.returns[k];
    }
  }
  standardize({s.advantages.data(), b.size()});
}

double mean_episode_return(const TrajectoryBatch& b, const Vector& rewards) {
  if (b.episodes() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t e = 0; e < b.episodes(); ++e) {
    for (std::size_t i = b.episode_begin[e]; i < b.episode_begin[e + 1]; ++i) total += rewards[static_cast<Eigen::Index>(i)];
  }
  return total / static_cast<double>(b.episodes());
}

}  // namespace

void write_log_header(std::ostream& out) {
  out << "iter,steps,mean_return_S,mean_return_D,disc_loss,policy_obj,value_loss_S,value_loss_D,entropy_coef,"
         "curriculum_tier,grad_conflict_rate\n";
}

void write_log_row(std::ostream& out, const IterationMetrics& m) {
  std::ostringstream s;
  s << std::setprecision(10) << m.iter << ',' << m.steps << ',' << m.mean_return_S << ',' << m.mean_return_D << ','
    << m.disc_loss << ',' << m.policy_obj << ',' << m.value_loss_S << ',' << m.value_loss_D << ',' << m.entropy_coef
    << ',' << m.curriculum_tier << ',' << m.grad_conflict_rate << '\n';
  out << s.str();
}

MoppoGradients moppo_policy_gradient(const NetworkLayout& layout, std::span<const double> params, const Matrix& obs,
                                     const Vector& actions, const Vector& logp_old, const Vector& adv_S,
                                     const Vector& adv_D, double clip_eps, double entropy_coef) {
  MoppoGradients g;
  g.g_S.assign(layout.size(), 0.0);
  g.g_D.assign(layout.size(), 0.0);
  g.objective_S = ppo_policy_objective(layout, params, obs, actions, logp_old, adv_S, clip_eps, entropy_coef, g.g_S);
  g.objective_D = ppo_policy_objective(layout, params, obs, actions, logp_old, adv_D, clip_eps, entropy_coef, g.g_D);
  g.combined = pcgrad_combine(g.g_S, g.g_D, &g.conflicted);
  return g;
}

std::vector<WorkerMode> rollout_modes(WorkerVariant variant) {
  std::vector<WorkerMode> modes;
  if (variant != WorkerVariant::I) modes.push_back(WorkerMode::replay);
  if (variant != WorkerVariant::M) modes.push_back(WorkerMode::idm);
  return modes;
}

Trainer::Trainer(TrainConfig cfg, std::span<const Scenario> scenarios, std::uint64_t seed, int workers)
    : cfg_(cfg), scenarios_(scenarios), seed_(seed), workers_(std::max(workers, 1)) {
  cfg_.validate();
  if (scenarios_.empty()) throw ValidationError("no training scenarios");
  params_ = init_params(layout_, split_seed(seed_, kInitStream, 0));
  policy_opt_ = Adam(layout_.policy_range(), cfg_.lr_policy);
  value_s_opt_ = Adam(layout_.value_range(ValueHead::S), cfg_.lr_value);
  value_d_opt_ = Adam(layout_.value_range(ValueHead::D), cfg_.lr_value);
  disc_opt_ = Adam(layout_.disc_range(), cfg_.lr_disc);
  total_iterations_ = static_cast<int>((cfg_.budget + cfg_.rollout_steps - 1) / cfg_.rollout_steps);
  const int longest = std::max_element(scenarios_.begin(), scenarios_.end(), [](const Scenario& a, const Scenario& b) {
                        return a.horizon_steps < b.horizon_steps;
                      })->horizon_steps;
  if (longest < kHorizonTiers[0]) throw ValidationError("no training scenario reaches the first horizon tier");
  for (int t = 0; t < kTierCount; ++t) {
    if (kHorizonTiers[t] <= longest) max_tier_ = t;
  }
  if (cfg_.algorithm != Algorithm::PPO) {
    expert_ = build_expert_buffer(scenarios_);
    if (expert_.size() == 0) throw ValidationError("expert buffer is empty");
  }
}

bool Trainer::uses_discriminator() const {
  return cfg_.algorithm == Algorithm::GAIL || cfg_.algorithm == Algorithm::BCGAIL ||
         cfg_.algorithm == Algorithm::SGAIL || cfg_.algorithm == Algorithm::MOPPO;
}

IterationMetrics Trainer::iterate() {
  if (finished()) throw std::logic_error("training budget already consumed");
  const double fraction = cfg_.budget > 0 ? static_cast<double>(steps_) / static_cast<double>(cfg_.budget) : 1.0;
  IterationMetrics m = cfg_.algorithm == Algorithm::BC ? bc_iteration(fraction) : simulation_iteration(fraction);
  ++iteration_;
  return m;
}

IterationMetrics Trainer::bc_iteration(double fraction) {
  Rng rng(split_seed(seed_, kTrainerStream, static_cast<std::uint64_t>(iteration_)));
  IterationMetrics m;
  m.iter = iteration_;
  m.entropy_coef = entropy_coefficient(cfg_.entropy_coef, fraction);
  m.curriculum_tier = curriculum_.horizon();
  int remaining = cfg_.rollout_steps;
  int batches = 0;
  while (remaining > 0) {
    std::vector<std::size_t> idx;
    while (static_cast<int>(idx.size()) < std::min(cfg_.minibatch, remaining)) {
      if (bc_cursor_ >= bc_order_.size()) {
        bc_order_.resize(expert_.size());
        std::iota(bc_order_.begin(), bc_order_.end(), std::size_t{0});
        std::shuffle(bc_order_.begin(), bc_order_.end(), rng);
        bc_cursor_ = 0;
      }
      idx.push_back(bc_order_[bc_cursor_++]);
    }
    Vector actions;
    const Matrix obs = expert_rows(expert_, idx, actions);
    std::vector<double> g(layout_.size(), 0.0);
    m.policy_obj += bc_objective(layout_, params_, obs, actions, g);
    policy_opt_.apply_update(params_, g);
    remaining -= static_cast<int>(idx.size());
    ++batches;
  }
  m.policy_obj /= batches;
  steps_ += cfg_.rollout_steps;
  m.steps = steps_;
  return m;
}

TrajectoryBatch Trainer::collect(int horizon, std::uint64_t iteration_seed) {
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < scenarios_.size(); ++i) {
    if (scenarios_[i].horizon_steps >= horizon) candidates.push_back(i);
  }
  if (candidates.empty()) throw ValidationError("no training scenario reaches horizon " + std::to_string(horizon));

  const std::vector<WorkerMode> modes = rollout_modes(cfg_.variant);

  struct Task {
    std::size_t scenario;
    WorkerMode mode;
    int max_steps;
  };
  std::vector<Task> tasks;
  Rng pick_rng(split_seed(iteration_seed, 0, 0));
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  int planned = 0;
  while (planned < cfg_.rollout_steps) {
    const std::size_t sc = candidates[pick(pick_rng)];
    for (WorkerMode mode : modes) {
      if (planned >= cfg_.rollout_steps) break;
      const int n = std::min(horizon, cfg_.rollout_steps - planned);
      tasks.push_back({sc, mode, n});
      planned += n;
    }
  }

  const NetworkPolicy policy(layout_, params_);
  std::vector<Trajectory> trajs(tasks.size());
  parallel_for(tasks.size(), workers_, [&](std::size_t e) {
    Rng rng(split_seed(iteration_seed, 1, e));
    RolloutOptions options;
    options.horizon = horizon;
    options.max_steps = tasks[e].max_steps;
    trajs[e] = rollout(policy, scenarios_[tasks[e].scenario], tasks[e].mode, rng, options);
  });

  TrajectoryBatch b;
  const auto n = static_cast<Eigen::Index>(planned);
  b.obs.resize(n, kObsDim);
  b.actions.resize(n);
  b.executed.resize(n);
  b.logp_old.resize(n);
  b.reward_S.resize(n);
  b.reward_D = Vector::Zero(n);
  b.bootstrap_obs = Matrix::Zero(static_cast<Eigen::Index>(trajs.size()), kObsDim);
  Eigen::Index row = 0;
  for (std::size_t e = 0; e < trajs.size(); ++e) {
    const Trajectory& t = trajs[e];
    b.episode_begin.push_back(static_cast<std::size_t>(row));
    b.truncated.push_back(t.truncated ? 1 : 0);
    if (t.truncated) {
      for (int c = 0; c < kObsDim; ++c) b.bootstrap_obs(static_cast<Eigen::Index>(e), c) = t.next_obs[static_cast<std::size_t>(c)];
    }
    for (std::size_t i = 0; i < t.size(); ++i, ++row) {
      for (int c = 0; c < kObsDim; ++c) b.obs(row, c) = t.obs[i * kObsDim + static_cast<std::size_t>(c)];
      b.actions[row] = t.actions[i];
      b.executed[row] = t.executed[i];
      b.logp_old[row] = t.logp[i];
      b.reward_S[row] = synthetic_reward(t.new_collision[i] != 0, t.ds_applied[i], cfg_);
      b.done.push_back(t.done(i) ? 1 : 0);
      b.episode.push_back(static_cast<int>(e));
      b.mode.push_back(t.mode);
    }
  }
  b.episode_begin.push_back(static_cast<std::size_t>(row));
  last_modes_.clear();
  for (const Trajectory& t : trajs) last_modes_.push_back(t.mode);
  return b;
}

double Trainer::train_discriminator(const TrajectoryBatch& b, Rng& rng) {
  std::vector<std::size_t> order(b.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double total = 0.0;
  int batches = 0;
  for (int epoch = 0; epoch < cfg_.disc_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(cfg_.minibatch)) {
      const std::span<const std::size_t> idx(order.data() + lo, std::min<std::size_t>(cfg_.minibatch, order.size() - lo));
      const auto eidx = sample_indices(idx.size(), expert_.size(), rng);
      Vector expert_actions;
      const Matrix expert_obs = expert_rows(expert_, eidx, expert_actions);
      std::vector<double> g(layout_.size(), 0.0);
      total += discriminator_objective(layout_, params_, gather_rows(b.obs, idx), gather(b.executed, idx), expert_obs,
                                       expert_actions, g);
      disc_opt_.apply_update(params_, g);
      ++batches;
    }
  }
  return batches > 0 ? total / batches : 0.0;
}

void Trainer::update_curriculum(int horizon, Rng& rng) {
  if (cfg_.curriculum_eval_episodes == 0 || curriculum_.tier_index >= max_tier_) return;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < scenarios_.size(); ++i) {
    if (scenarios_[i].horizon_steps >= horizon) candidates.push_back(i);
  }
  const NetworkPolicy policy(layout_, params_);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  RolloutOptions options;
  options.horizon = horizon;
  options.stochastic = false;
  options.record_obs = false;
  for (int k = 0; k < cfg_.curriculum_eval_episodes; ++k) {
    const Scenario& sc = scenarios_[candidates[pick(rng)]];
    Rng unused(0);
    const Trajectory t = rollout(policy, sc, WorkerMode::replay, unused, options);
    std::vector<Point2> expert;
    for (const TrackFrame& f : sc.expert_track.frames) expert.push_back(f.position());
    const double err = ade(t.positions, expert, horizon * kDt);
    curriculum_ = curriculum_update(std::move(curriculum_), err, cfg_.curriculum_threshold, cfg_.curriculum_window);
    if (curriculum_.tier_index >= max_tier_) break;
  }
}

IterationMetrics Trainer::simulation_iteration(double fraction) {
  Rng rng(split_seed(seed_, kTrainerStream, static_cast<std::uint64_t>(iteration_)));
  IterationMetrics m;
  m.iter = iteration_;
  m.entropy_coef = entropy_coefficient(cfg_.entropy_coef, fraction);
  const int horizon = curriculum_.horizon();
  m.curriculum_tier = horizon;

  TrajectoryBatch b = collect(horizon, split_seed(seed_, kRolloutStream, static_cast<std::uint64_t>(iteration_)));

  if (uses_discriminator()) {
    m.disc_loss = train_discriminator(b, rng);
    DiscriminatorPass pass;
    pass.forward(layout_, params_, b.obs, b.executed);
    for (Eigen::Index i = 0; i < b.reward_D.size(); ++i) b.reward_D[i] = data_driven_reward(pass.logits()[i], cfg_);
  }
  if (equal_streams_) b.reward_D = b.reward_S;
  m.mean_return_S = mean_episode_return(b, b.reward_S);
  m.mean_return_D = mean_episode_return(b, b.reward_D);

  Vector mixed;
  std::vector<Stream> streams;
  const auto add_stream = [&](const Vector& rewards, ValueHead head) {
    Stream s;
    s.rewards = &rewards;
    s.head = head;
    const ValueHead baseline = equal_streams_ ? ValueHead::S : head;
    s.values = values_of(layout_, params_, b.obs, baseline);
    s.bootstrap = values_of(layout_, params_, b.bootstrap_obs, baseline);
    streams.push_back(std::move(s));
  };
  switch (cfg_.algorithm) {
    case Algorithm::PPO: add_stream(b.reward_S, ValueHead::S); break;
    case Algorithm::GAIL:
    case Algorithm::BCGAIL: add_stream(b.reward_D, ValueHead::D); break;
    case Algorithm::SGAIL:
      mixed.resize(b.reward_S.size());
      for (Eigen::Index i = 0; i < mixed.size(); ++i) mixed[i] = sgail_reward(b.reward_S[i], b.reward_D[i], cfg_);
      add_stream(mixed, ValueHead::S);
      break;
    case Algorithm::MOPPO:
      add_stream(b.reward_S, ValueHead::S);
      add_stream(b.reward_D, ValueHead::D);
      break;
    case Algorithm::BC: break;
  }
  for (Stream& s : streams) run_gae(b, s, cfg_);

  const double lambda_bc = cfg_.algorithm == Algorithm::BCGAIL ? bc_weight(fraction, cfg_.bc_anneal_fraction) : 0.0;
  std::vector<std::size_t> order(b.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  int batches = 0;
  int conflicts = 0;
  double value_loss[2] = {0.0, 0.0};
  for (int epoch = 0; epoch < cfg_.ppo_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t lo = 0; lo < order.size(); lo += static_cast<std::size_t>(cfg_.minibatch)) {
      const std::span<const std::size_t> idx(order.data() + lo, std::min<std::size_t>(cfg_.minibatch, order.size() - lo));
      const Matrix obs = gather_rows(b.obs, idx);
      const Vector actions = gather(b.actions, idx);
      const Vector logp = gather(b.logp_old, idx);

      std::vector<double> step_dir;
      if (cfg_.algorithm == Algorithm::MOPPO) {
        MoppoGradients g = moppo_policy_gradient(layout_, params_, obs, actions, logp, gather(streams[0].advantages, idx),
                                                 gather(streams[1].advantages, idx), cfg_.clip_eps, m.entropy_coef);
        conflicts += g.conflicted ? 1 : 0;
        m.policy_obj += g.objective_S + g.objective_D;
        step_dir = g.combined;
        if (batches == 0) last_moppo_ = std::move(g);
      } else {
        step_dir.assign(layout_.size(), 0.0);
        m.policy_obj += ppo_policy_objective(layout_, params_, obs, actions, logp, gather(streams[0].advantages, idx),
                                             cfg_.clip_eps, m.entropy_coef, step_dir);
        if (lambda_bc > 0.0) {
          Vector expert_actions;
          const Matrix expert_obs = expert_rows(expert_, sample_indices(idx.size(), expert_.size(), rng), expert_actions);
          bc_objective(layout_, params_, expert_obs, expert_actions, step_dir, -lambda_bc);
        }
      }
      negate_range(step_dir, layout_.policy_range());
      policy_opt_.apply_update(params_, step_dir);

      for (std::size_t k = 0; k < streams.size(); ++k) {
        const Stream& s = streams[k];
        std::vector<double> g(layout_.size(), 0.0);
        const double loss = value_objective(layout_, params_, s.head, obs, gather(s.returns, idx),
                                            gather(s.values, idx), cfg_.value_clip_eps, g);
        const bool is_s = s.head == ValueHead::S;
        value_loss[is_s ? 0 : 1] += loss;
        (is_s ? value_s_opt_ : value_d_opt_).apply_update(params_, g);
      }
      ++batches;
    }
  }
  m.policy_obj /= batches;
  m.value_loss_S = value_loss[0] / batches;
  m.value_loss_D = value_loss[1] / batches;
  m.grad_conflict_rate = static_cast<double>(conflicts) / batches;

  steps_ += static_cast<long>(b.size());
  m.steps = steps_;
  update_curriculum(horizon, rng);
  return m;
}

TrainResult train(const TrainConfig& cfg, std::span<const Scenario> scenarios, std::uint64_t seed, int workers,
                  const std::function<void(const IterationMetrics&)>& on_iteration) {
  Trainer trainer(cfg, scenarios, seed, workers);
  TrainResult result;
  while (!trainer.finished()) {
    result.log.push_back(trainer.iterate());
    if (on_iteration) on_iteration(result.log.back());
  }
  result.params = trainer.params();
  result.layout_hash = trainer.layout().hash();
  return result;
}

}  // namespace drivelearn
