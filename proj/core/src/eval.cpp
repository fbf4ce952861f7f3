#include "drivelearn/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <tuple>

#include "drivelearn/error.hpp"
#include "drivelearn/parallel.hpp"

namespace drivelearn {

const char* to_string(EvalSetting s) { return s == EvalSetting::NI ? "NI" : "I"; }

EvalSetting parse_setting(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return std::toupper(c); });
  if (t == "NI") return EvalSetting::NI;
  if (t == "I") return EvalSetting::I;
  throw ValidationError("setting: expected NI or I, got '" + text + "'");
}

double ade(std::span<const Point2> sim, std::span<const Point2> expert, double horizon_seconds) {
  const int steps = static_cast<int>(std::lround(horizon_seconds / kDt));
  if (steps <= 0) throw ValidationError("ADE horizon must be positive");
  if (sim.size() < static_cast<std::size_t>(steps) + 1 || expert.size() < static_cast<std::size_t>(steps) + 1) {
    throw ValidationError("trajectories do not cover " + std::to_string(steps) + " steps");
  }
  double sum = 0.0;
  for (int t = 1; t <= steps; ++t) sum += distance(sim[static_cast<std::size_t>(t)], expert[static_cast<std::size_t>(t)]);
  return sum / steps;
}

std::pair<double, double> collision_stats(std::span<const EpisodeRecord> records) {
  if (records.empty()) throw ValidationError("collision_stats: no episodes");
  int any = 0;
  int front = 0;
  for (const EpisodeRecord& r : records) {
    if (r.collisions.empty()) continue;
    ++any;
    // events of one step come in agent order; the first listed counts as first contact
    if (r.collisions.front().front) ++front;
  }
  const double n = static_cast<double>(records.size());
  return {100.0 * any / n, 100.0 * front / n};
}

std::vector<EpisodeRecord> run_evaluation(const Policy& policy, std::span<const Scenario> scenarios,
                                          EvalSetting setting, std::uint64_t seed, int workers) {
  std::vector<EpisodeRecord> records(scenarios.size());
  RolloutOptions options;
  options.stochastic = false;
  options.record_obs = false;
  const WorkerMode mode = setting == EvalSetting::NI ? WorkerMode::replay : WorkerMode::idm;
  parallel_for(scenarios.size(), workers, [&](std::size_t i) {
    const Scenario& sc = scenarios[i];
    Rng rng(split_seed(seed, 0, i));
    Trajectory traj = rollout(policy, sc, mode, rng, options);
    EpisodeRecord& r = records[i];
    r.scenario_id = sc.id;
    r.sim_positions = std::move(traj.positions);
    r.collisions = std::move(traj.events);
    if (setting == EvalSetting::NI) {
      for (const TrackFrame& f : sc.expert_track.frames) r.expert_positions.push_back(f.position());
    }
  });
  return records;
}

EvalReport summarize(std::span<const EpisodeRecord> records, EvalSetting setting) {
  std::vector<const EpisodeRecord*> sorted;
  for (const EpisodeRecord& r : records) sorted.push_back(&r);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const EpisodeRecord* a, const EpisodeRecord* b) { return a->scenario_id < b->scenario_id; });
  std::vector<EpisodeRecord> ordered;
  for (const EpisodeRecord* r : sorted) ordered.push_back(*r);

  EvalReport report;
  report.setting = setting;
  report.episodes = static_cast<int>(ordered.size());
  std::tie(report.cr, report.fcr) = collision_stats(ordered);
  if (setting == EvalSetting::NI) {
    double a5 = 0.0, a15 = 0.0;
    for (const EpisodeRecord& r : ordered) {
      a5 += ade(r.sim_positions, r.expert_positions, 5.0);
      a15 += ade(r.sim_positions, r.expert_positions, 15.0);
    }
    report.ade5 = a5 / static_cast<double>(ordered.size());
    report.ade15 = a15 / static_cast<double>(ordered.size());
  }
  return report;
}

EvalReport evaluate(const Policy& policy, std::span<const Scenario> scenarios, EvalSetting setting,
                    std::uint64_t seed, int workers) {
  const auto records = run_evaluation(policy, scenarios, setting, seed, workers);
  return summarize(records, setting);
}

void write_report_header(std::ostream& out) { out << "algorithm,setting,episodes,ade5,ade15,cr,fcr\n"; }

void write_report_row(std::ostream& out, const std::string& algorithm, const EvalReport& r) {
  const auto fixed = [](double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(4) << v;
    return s.str();
  };
  out << algorithm << ',' << to_string(r.setting) << ',' << r.episodes << ','
      << (r.ade5 ? fixed(*r.ade5) : "") << ',' << (r.ade15 ? fixed(*r.ade15) : "") << ',' << fixed(r.cr) << ','
      << fixed(r.fcr) << '\n';
}

}  // namespace drivelearn
