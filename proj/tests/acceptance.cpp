// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
//   acceptance [--budget N] [--seeds 1,2,3] [--skip-training] [--results FILE]

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "drivelearn/eval.hpp"
#include "drivelearn/objectives.hpp"
#include "drivelearn/policy.hpp"
#include "drivelearn/simulator.hpp"
#include "drivelearn/synthetic.hpp"
#include "drivelearn/trainer.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace drivelearn;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Verdict {
  std::string id;
  std::string title;
  bool pass = false;
  std::string detail;
};

std::vector<Verdict> verdicts;

void report(std::string id, std::string title, bool pass, std::string detail) {
  std::cout << id << ' ' << title << ": " << (pass ? "PASS" : "FAIL") << " (" << detail << ")" << std::endl;
  verdicts.push_back({std::move(id), std::move(title), pass, std::move(detail)});
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s << std::setprecision(digits) << v;
  return s.str();
}

// ---------------------------------------------------------------- P1

void check_numerical_core() {
  const auto t0 = Clock::now();
  std::ostringstream why;
  bool ok = true;

  double gae_err = 0.0;
  {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> len(1, 30);
    std::uniform_real_distribution<double> u(-3, 3), unit(0.01, 1.0);
    for (int ep = 0; ep < 100; ++ep) {
      const int n = len(rng);
      std::vector<double> r(n), v(n);
      for (int i = 0; i < n; ++i) {
        r[i] = u(rng);
        v[i] = u(rng);
      }
      const double boot = ep % 2 == 0 ? 0.0 : u(rng);
      const double g = unit(rng), l = unit(rng);
      const auto got = gae(r, v, boot, g, l).advantages;
      const auto want = testing::gae_oracle(r, v, boot, g, l);
      for (int i = 0; i < n; ++i) gae_err = std::max(gae_err, std::abs(got[i] - want[i]));
    }
  }
  ok = ok && gae_err <= 1e-10;
  why << "gae max err " << fmt(gae_err);

  const NetworkLayout layout(testing::small_spec());
  auto obs_for = [](int rows, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 0.7);
    Matrix m(rows, kObsDim);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < kObsDim; ++j) m(i, j) = n(rng);
    }
    return m;
  };
  auto vec_for = [](int n, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = u(rng);
    return v;
  };
  double ppo_err = 0.0, value_err = 0.0, disc_err = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto params = testing::random_params(layout, seed);
    const Matrix obs = obs_for(8, 10 + seed);
    const Vector actions = vec_for(8, 20 + seed, 0.0, 2.0);
    PolicyPass pass;
    pass.forward(layout, params, obs);
    Vector logp_old(8);
    const Vector jitter = vec_for(8, 30 + seed, -0.5, 0.5);
    for (int i = 0; i < 8; ++i) logp_old[i] = gaussian_logpdf(actions[i], pass.mu()[i], pass.sigma()) + jitter[i];
    const Vector adv = vec_for(8, 40 + seed, -2, 2);
    std::vector<double> grad(layout.size(), 0.0);
    ppo_policy_objective(layout, params, obs, actions, logp_old, adv, 0.2, 0.01, grad);
    ppo_err = std::max(ppo_err, testing::fd_check(
                                    [&](const std::vector<double>& p) {
                                      std::vector<double> g(layout.size(), 0.0);
                                      return ppo_policy_objective(layout, p, obs, actions, logp_old, adv, 0.2, 0.01, g);
                                    },
                                    params, grad, layout.policy_range(), 100, seed));

    const Vector returns = vec_for(8, 60 + seed, -3, 3);
    ValuePass vpass;
    vpass.forward(layout, params, obs, ValueHead::S);
    const Vector old = vpass.values() + vec_for(8, 70 + seed, -0.4, 0.4);
    std::fill(grad.begin(), grad.end(), 0.0);
    value_objective(layout, params, ValueHead::S, obs, returns, old, 0.2, grad);
    value_err = std::max(value_err, testing::fd_check(
                                        [&](const std::vector<double>& p) {
                                          std::vector<double> g(layout.size(), 0.0);
                                          return value_objective(layout, p, ValueHead::S, obs, returns, old, 0.2, g);
                                        },
                                        params, grad, layout.value_range(ValueHead::S), 100, seed));

    const Matrix expert = obs_for(5, 90 + seed);
    const Vector ea = vec_for(5, 110 + seed, 0, 2);
    std::fill(grad.begin(), grad.end(), 0.0);
    discriminator_objective(layout, params, obs, actions, expert, ea, grad);
    disc_err = std::max(disc_err, testing::fd_check(
                                      [&](const std::vector<double>& p) {
                                        std::vector<double> g(layout.size(), 0.0);
                                        return discriminator_objective(layout, p, obs, actions, expert, ea, g);
                                      },
                                      params, grad, layout.disc_range(), 100, seed));
  }
  ok = ok && ppo_err < 1e-4 && value_err < 1e-4 && disc_err < 1e-4;
  why << ", fd rel err ppo " << fmt(ppo_err) << " value " << fmt(value_err) << " disc " << fmt(disc_err);

  double cross = 0.0, passthrough = 0.0;
  int conflicts = 0;
  {
    std::mt19937_64 rng(12);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_int_distribution<int> dim(1, 10000);
    for (int trial = 0; trial < 200; ++trial) {
      const int d = dim(rng);
      std::vector<double> gs(d), gd(d);
      for (int i = 0; i < d; ++i) {
        gs[i] = n(rng);
        gd[i] = n(rng) + (trial % 2 == 0 ? -0.3 : 0.3) * gs[i];
      }
      double ss = 0, dd = 0, sd = 0;
      for (int i = 0; i < d; ++i) {
        ss += gs[i] * gs[i];
        dd += gd[i] * gd[i];
        sd += gs[i] * gd[i];
      }
      const auto out = pcgrad_combine(gs, gd);
      if (sd >= 0) {
        for (int i = 0; i < d; ++i) passthrough = std::max(passthrough, std::abs(out[i] - gs[i] - gd[i]));
        continue;
      }
      ++conflicts;
      // out = p_s + p_d with p_s orthogonal to g_d and p_d orthogonal to g_s
      double ps_gd = 0, pd_gs = 0;
      for (int i = 0; i < d; ++i) {
        const double ps = gs[i] - sd / dd * gd[i];
        const double pd = gd[i] - sd / ss * gs[i];
        ps_gd += ps * gd[i];
        pd_gs += pd * gs[i];
        passthrough = std::max(passthrough, std::abs(out[i] - ps - pd));
      }
      cross = std::max({cross, std::abs(ps_gd) / std::sqrt(ss * dd), std::abs(pd_gs) / std::sqrt(ss * dd)});
    }
  }
  ok = ok && cross <= 1e-9 && passthrough <= 1e-9 && conflicts > 0;
  why << ", pcgrad cross-dot " << fmt(cross) << " sum err " << fmt(passthrough) << " over " << conflicts
      << " conflicting pairs";

  const double elapsed = seconds_since(t0);
  ok = ok && elapsed < 60.0;
  why << ", " << fmt(elapsed) << " s";
  report("P1", "numerical core", ok, why.str());
}

// ---------------------------------------------------------------- P2

void check_rewards() {
  const TrainConfig cfg;
  int failures = 0, checks = 0;
  auto expect = [&](double got, double want) {
    ++checks;
    if (got != want) ++failures;
  };
  expect(synthetic_reward(true, 0.0, cfg), -2.0);
  expect(synthetic_reward(false, 1.389, cfg), 0.1);
  expect(synthetic_reward(false, 0.6945, cfg), 0.05);
  expect(data_driven_reward(0.0, cfg), 0.0);
  expect(data_driven_reward(1.0, cfg), 1.0);
  expect(data_driven_reward(25.0, cfg), 10.0);
  expect(sgail_reward(-2.0, 0.0, cfg), -1.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-12, 12);
  for (int i = 0; i < 10000; ++i) {
    const double rs = u(rng), rd = u(rng);
    expect(sgail_reward(rs, rd, cfg), 0.5 * rs + 0.5 * rd);
  }
  report("P2", "reward formulas", failures == 0, std::to_string(checks - failures) + "/" + std::to_string(checks) +
                                                     " exact");
}

// ---------------------------------------------------------------- P3

void check_simulator(const SyntheticSet& set) {
  std::ostringstream why;
  bool ok = true;

  double worst_ade = 0.0;
  int episodes = 0;
  const ExpertReplayPolicy expert;
  for (const auto* group : {&set.scenarios, &set.validation}) {
    for (const EpisodeRecord& rec : run_evaluation(expert, *group, EvalSetting::NI, 1)) {
      const double seconds = std::min(15.0, (rec.sim_positions.size() - 1) * kDt);
      worst_ade = std::max(worst_ade, ade(rec.sim_positions, rec.expert_positions, seconds));
      ok = ok && rec.collisions.empty();
      ++episodes;
    }
  }
  ok = ok && worst_ade < 0.1;
  why << "expert replay worst ADE " << fmt(worst_ade) << " m over " << episodes << " scenarios";

  const auto agreement = testing::obb_oracle_agreement(2000, 11);
  ok = ok && agreement.rate() >= 0.999;
  why << ", OBB oracle agreement " << fmt(100 * agreement.rate(), 5) << "% of " << agreement.compared;

  IdmParams p;
  double eq = std::max(std::abs(idm_acceleration(p.v0, std::numeric_limits<double>::infinity(), 0.0, p)),
                       std::abs(idm_acceleration(0.0, p.s0, 0.0, p)));
  for (double v : {2.0, 5.0, 8.0, 11.0, 13.0}) {
    const double gap = (p.s0 + v * p.time_headway) / std::sqrt(1.0 - std::pow(v / p.v0, p.delta));
    eq = std::max(eq, std::abs(idm_acceleration(v, gap, v, p)));
  }
  ok = ok && eq <= 1e-9;
  why << ", IDM equilibrium residual " << fmt(eq);

  const auto line = testing::idm_line_trials(100, 17);
  const int collided = line.collided;
  ok = ok && collided == 0;
  why << ", IDM line collisions " << collided << "/100, min gap " << fmt(line.min_gap) << " m";
  report("P3", "simulator fidelity", ok, why.str());
}

// ---------------------------------------------------------------- P4

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "drivelearn");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

void check_determinism() {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / ("drivelearn_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  auto dir = [&](const std::string& name) { return (root / name).string(); };
  int codes = 0;
  std::vector<std::string> mismatched;
  auto same = [&](const std::string& a, const std::string& b, const std::string& file) {
    const fs::path pa = fs::path(a) / file, pb = fs::path(b) / file;
    if (!fs::exists(pa) || slurp(pa) != slurp(pb)) mismatched.push_back(file);
  };

  codes += run_cli({"gen", "--seed", "7", "--out", dir("gen_a")});
  codes += run_cli({"gen", "--seed", "7", "--out", dir("gen_b")});
  for (const char* f : {"map.txt", "tracks.csv", "train.csv", "val.csv"}) same(dir("gen_a"), dir("gen_b"), f);

  const std::string data = dir("gen_a");
  for (const auto& [name, workers] : std::vector<std::pair<std::string, std::string>>{
           {"train_a", "1"}, {"train_b", "1"}, {"train_c", "4"}}) {
    codes += run_cli({"train", "--data", data, "--algo", "moppo", "--variant", "mix", "--budget", "8192", "--seed",
                      "3", "--workers", workers, "--out", dir(name)});
  }
  for (const char* f : {"checkpoint.bin", "training_log.csv", "config.txt"}) {
    same(dir("train_a"), dir("train_b"), f);
    same(dir("train_a"), dir("train_c"), f);
  }

  for (const char* setting : {"NI", "I"}) {
    const std::string s(setting);
    for (const auto& [name, workers] : std::vector<std::pair<std::string, std::string>>{
             {"eval_a", "1"}, {"eval_b", "1"}, {"eval_c", "4"}}) {
      codes += run_cli({"eval", "--data", data, "--checkpoint", dir("train_a") + "/checkpoint.bin", "--setting", s,
                        "--workers", workers, "--out", dir(name + s)});
    }
    same(dir("eval_a" + s), dir("eval_b" + s), "report.csv");
    same(dir("eval_a" + s), dir("eval_c" + s), "report.csv");
  }
  fs::remove_all(root);

  std::string detail = "gen, train, eval (NI and I) with --workers 1, 1, 4";
  if (codes != 0) detail += "; a command failed";
  for (const auto& m : mismatched) detail += "; differs: " + m;
  detail += ", " + fmt(seconds_since(t0)) + " s";
  report("P4", "determinism", codes == 0 && mismatched.empty(), detail);
}

// ---------------------------------------------------------------- P5, P6, P7

struct RunSpec {
  std::string label;
  Algorithm algorithm;
  WorkerVariant variant;
};

const std::vector<RunSpec> kRuns = {
    {"BC", Algorithm::BC, WorkerVariant::M},
    {"GAIL", Algorithm::GAIL, WorkerVariant::M},
    {"PPO", Algorithm::PPO, WorkerVariant::M},
    {"MOPPO-mix", Algorithm::MOPPO, WorkerVariant::mix},
    {"MOPPO-M", Algorithm::MOPPO, WorkerVariant::M},
};

struct RunResult {
  EvalReport ni;
  EvalReport interactive;
  std::vector<IterationMetrics> log;
  TrainConfig cfg;
};

// Returns an empty string when the log satisfies the curriculum and
// annealing rules, otherwise the first violation.
std::string check_log(const std::vector<IterationMetrics>& log, const TrainConfig& cfg) {
  long prev_steps = 0;
  int prev_tier = 0;
  for (const IterationMetrics& m : log) {
    const std::string at = " at iter " + std::to_string(m.iter);
    if (m.curriculum_tier < prev_tier) return "tier decreased" + at;
    if (!(m.grad_conflict_rate >= 0.0 && m.grad_conflict_rate <= 1.0)) return "conflict rate outside [0,1]" + at;
    const double expected = cfg.entropy_coef * std::max(0.0, 1.0 - static_cast<double>(prev_steps) / cfg.budget);
    if (std::abs(m.entropy_coef - expected) > 1e-12) return "entropy coefficient off the linear schedule" + at;
    prev_tier = m.curriculum_tier;
    prev_steps = m.steps;
  }
  if (log.empty()) return "empty log";
  if (log.back().steps < cfg.budget) return "budget not consumed";
  return {};
}

void check_directional(const SyntheticSet& set, long budget, const std::vector<std::uint64_t>& seeds,
                       const std::string& results_file) {
  const auto t0 = Clock::now();
  std::map<std::pair<std::uint64_t, std::string>, RunResult> results;
  std::ofstream csv(results_file);
  csv << "seed,run,setting,episodes,ade5,ade15,cr,fcr,train_seconds\n";
  const NetworkLayout layout;
  for (std::uint64_t seed : seeds) {
    for (const RunSpec& spec : kRuns) {
      const auto t_run = Clock::now();
      TrainConfig cfg;
      cfg.algorithm = spec.algorithm;
      cfg.variant = spec.variant;
      cfg.budget = budget;
      TrainResult trained = train(cfg, set.scenarios, seed);
      const double train_seconds = seconds_since(t_run);
      const NetworkPolicy policy(layout, trained.params);
      RunResult r;
      r.ni = evaluate(policy, set.validation, EvalSetting::NI, 1);
      r.interactive = evaluate(policy, set.validation, EvalSetting::I, 1);
      r.log = std::move(trained.log);
      r.cfg = cfg;
      for (const EvalReport* e : {&r.ni, &r.interactive}) {
        csv << seed << ',' << spec.label << ',';
        std::ostringstream row;
        write_report_row(row, "", *e);
        std::string line = row.str();
        csv << line.substr(1, line.size() - 2) << ',' << fmt(train_seconds, 4) << '\n';
      }
      csv.flush();
      std::cout << "  seed " << seed << ' ' << std::setw(9) << spec.label << "  NI ADE-5 "
                << fmt(r.ni.ade5.value_or(NAN)) << " ADE-15 " << fmt(r.ni.ade15.value_or(NAN)) << " CR " << r.ni.cr
                << " FCR " << r.ni.fcr << " | I CR " << r.interactive.cr << " FCR " << r.interactive.fcr << "  ("
                << fmt(seconds_since(t_run)) << " s)" << std::endl;
      results[{seed, spec.label}] = std::move(r);
    }
  }
  const double elapsed = seconds_since(t0);

  auto at = [&](std::uint64_t seed, const char* label) -> const RunResult& { return results.at({seed, label}); };
  struct Tally {
    int held = 0;
    std::string per_seed;
  };
  auto tally = [&](auto holds) {
    Tally t;
    for (std::uint64_t seed : seeds) {
      const auto [ok, text] = holds(seed);
      t.held += ok ? 1 : 0;
      t.per_seed += (t.per_seed.empty() ? "" : "; ") + std::string("seed ") + std::to_string(seed) + ": " + text;
    }
    return t;
  };
  const int need = static_cast<int>(seeds.size()) >= 3 ? 2 : static_cast<int>(seeds.size());
  const std::string protocol = "budget " + std::to_string(budget) + ", need " + std::to_string(need) + "/" +
                               std::to_string(seeds.size()) + " seeds";
  auto emit = [&](const std::string& id, const std::string& title, const Tally& t) {
    report(id, title, t.held >= need,
           std::to_string(t.held) + "/" + std::to_string(seeds.size()) + " seeds hold, " + protocol + "; " +
               t.per_seed);
  };

  emit("P5a", "BC has the highest NI collision rate", tally([&](std::uint64_t s) {
         const double bc = at(s, "BC").ni.cr;
         const double others = std::max({at(s, "GAIL").ni.cr, at(s, "PPO").ni.cr, at(s, "MOPPO-mix").ni.cr});
         return std::pair{bc > others, "BC " + fmt(bc) + " vs max other " + fmt(others)};
       }));
  emit("P5b", "PPO collision rate below GAIL", tally([&](std::uint64_t s) {
         const double ppo = at(s, "PPO").ni.cr, gail = at(s, "GAIL").ni.cr;
         return std::pair{ppo < gail, "PPO " + fmt(ppo) + " vs GAIL " + fmt(gail)};
       }));
  emit("P5c", "GAIL ADE-15 below PPO", tally([&](std::uint64_t s) {
         const double gail = *at(s, "GAIL").ni.ade15, ppo = *at(s, "PPO").ni.ade15;
         return std::pair{gail < ppo, "GAIL " + fmt(gail) + " vs PPO " + fmt(ppo)};
       }));
  emit("P5d", "MOPPO-mix within 10 CR points of PPO and 20% ADE-15 of GAIL", tally([&](std::uint64_t s) {
         const RunResult& m = at(s, "MOPPO-mix");
         const double cr_bound = at(s, "PPO").ni.cr + 10.0;
         const double ade_bound = 1.2 * *at(s, "GAIL").ni.ade15;
         return std::pair{m.ni.cr <= cr_bound && *m.ni.ade15 <= ade_bound,
                          "CR " + fmt(m.ni.cr) + " <= " + fmt(cr_bound) + ", ADE-15 " + fmt(*m.ni.ade15) +
                              " <= " + fmt(ade_bound)};
       }));
  report("P5", "runtime within 4 h", elapsed <= 4 * 3600.0,
         fmt(elapsed / 60.0) + " min for " + std::to_string(results.size()) + " runs");
  emit("P6", "MOPPO-mix interactive CR at most MOPPO-M", tally([&](std::uint64_t s) {
         const double mix = at(s, "MOPPO-mix").interactive.cr, m = at(s, "MOPPO-M").interactive.cr;
         return std::pair{mix <= m, "mix " + fmt(mix) + " vs M " + fmt(m)};
       }));

  std::string violation;
  int max_tier = 0;
  for (const auto& [key, r] : results) {
    const std::string v = check_log(r.log, r.cfg);
    if (!v.empty() && violation.empty()) violation = key.second + " seed " + std::to_string(key.first) + ": " + v;
    for (const auto& m : r.log) max_tier = std::max(max_tier, m.curriculum_tier);
  }
  report("P7", "curriculum and annealing", violation.empty(),
         violation.empty() ? std::to_string(results.size()) + " training logs, highest tier " +
                                 std::to_string(max_tier)
                           : violation);
}

// Short training runs for P7 when the full sweep is skipped.
void check_logs_quick(const SyntheticSet& set) {
  std::string violation;
  int logs = 0;
  for (const RunSpec& spec : kRuns) {
    TrainConfig cfg;
    cfg.algorithm = spec.algorithm;
    cfg.variant = spec.variant;
    cfg.rollout_steps = 1024;
    cfg.budget = 8192;
    const TrainResult r = train(cfg, set.scenarios, 1);
    const std::string v = check_log(r.log, cfg);
    if (!v.empty() && violation.empty()) violation = spec.label + ": " + v;
    ++logs;
  }
  report("P7", "curriculum and annealing", violation.empty(),
         violation.empty() ? std::to_string(logs) + " short training logs" : violation);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  long budget = 500000;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  bool skip_training = false;
  std::string results = "acceptance_results.csv";
  app.add_option("--budget", budget, "environment steps per training run")->check(CLI::Range(1L, 500000L));
  app.add_option("--seeds", seeds, "training seeds")->delimiter(',');
  app.add_flag("--skip-training", skip_training, "skip the directional sweep (P5, P6)");
  app.add_option("--results", results, "CSV of every sweep evaluation");
  CLI11_PARSE(app, argc, argv);

  const auto t0 = Clock::now();
  check_numerical_core();
  check_rewards();
  const SyntheticSet set = generate_synthetic(SyntheticConfig{}, 1);
  check_simulator(set);
  check_determinism();
  if (skip_training) {
    std::cout << "P5 directional reproduction: SKIPPED\nP6 interactive robustness: SKIPPED" << std::endl;
    check_logs_quick(set);
  } else {
    check_directional(set, budget, seeds, results);
  }

  int failed = 0;
  for (const Verdict& v : verdicts) failed += v.pass ? 0 : 1;
  std::cout << "\n" << verdicts.size() - failed << "/" << verdicts.size() << " criteria passed in "
            << fmt(seconds_since(t0) / 60.0) << " min" << std::endl;
  for (const Verdict& v : verdicts) std::cout << "  " << v.id << ' ' << (v.pass ? "PASS" : "FAIL") << "  " << v.title << '\n';
  return failed == 0 ? 0 : 1;
}
