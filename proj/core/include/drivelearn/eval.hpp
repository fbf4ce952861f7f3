#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drivelearn/policy.hpp"
#include "drivelearn/rollout.hpp"

namespace drivelearn {

/// NI: recorded (replay) workers. I: every worker driven by IDM.
enum class EvalSetting { NI, I };

const char* to_string(EvalSetting s);
EvalSetting parse_setting(const std::string& text);

struct EpisodeRecord {
  std::string scenario_id;
  std::vector<Point2> sim_positions;     // initial position, then one per step
  std::vector<Point2> expert_positions;  // same alignment; empty in the I setting
  std::vector<CollisionEvent> collisions;
};

struct EvalReport {
  EvalSetting setting = EvalSetting::NI;
  int episodes = 0;
  std::optional<double> ade5;
  std::optional<double> ade15;
  double cr = 0.0;   // percent of episodes with any collision
  double fcr = 0.0;  // percent of episodes whose first collision was frontal
};

/// Mean distance over steps 1..horizon_seconds/dt; index 0 of both
/// sequences is the initial position. Throws ValidationError when either
/// sequence is too short.
double ade(std::span<const Point2> sim, std::span<const Point2> expert, double horizon_seconds);

std::pair<double, double> collision_stats(std::span<const EpisodeRecord> records);

/// Runs the mean action of `policy` on every scenario. Episode i draws its
/// IDM desired speeds from split_seed(seed, 0, i).
std::vector<EpisodeRecord> run_evaluation(const Policy& policy, std::span<const Scenario> scenarios,
                                          EvalSetting setting, std::uint64_t seed, int workers = 1);

/// Aggregates records in scenario-id order.
EvalReport summarize(std::span<const EpisodeRecord> records, EvalSetting setting);

EvalReport evaluate(const Policy& policy, std::span<const Scenario> scenarios, EvalSetting setting,
                    std::uint64_t seed, int workers = 1);

void write_report_header(std::ostream& out);
void write_report_row(std::ostream& out, const std::string& algorithm, const EvalReport& report);

}  // namespace drivelearn
