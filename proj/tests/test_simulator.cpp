#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "drivelearn/error.hpp"
#include "drivelearn/policy.hpp"
#include "drivelearn/rollout.hpp"
#include "drivelearn/simulator.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace drivelearn {
namespace {

using testing::linear_track;
using testing::straight_map;

constexpr double kInf = std::numeric_limits<double>::infinity();

Scenario make(const std::vector<TrackLog>& tracks, int horizon, std::shared_ptr<const RoadMap> map = straight_map()) {
  auto sc = make_scenario(std::move(map), tracks, tracks.front().agent_id, tracks.front().first_step, horizon);
  if (!sc) throw std::runtime_error("fixture scenario rejected");
  return *sc;
}

const Scenario& scenario_with_workers() {
  for (const Scenario& s : testing::synthetic_set().scenarios) {
    if (s.worker_ids.size() >= 3) return s;
  }
  throw std::runtime_error("no crowded scenario");
}

TEST(Reset, ReplayWorkersStartAtRecordedPoses) {
  const Scenario& sc = scenario_with_workers();
  Rng rng(1);
  const WorldState w = reset(sc, WorkerMode::replay, rng);
  ASSERT_EQ(w.agents.size(), sc.worker_ids.size() + 1);
  EXPECT_EQ(w.agents[0].mode, AgentMode::actor);
  for (std::size_t i = 1; i < w.agents.size(); ++i) {
    const AgentState& a = w.agents[i];
    EXPECT_EQ(a.mode, AgentMode::replay_worker);
    const TrackLog& t = sc.worker_tracks[i - 1];
    if (!t.covers(sc.initial_step)) {
      EXPECT_FALSE(a.active);
      continue;
    }
    const TrackFrame& f = t.at_step(sc.initial_step);
    EXPECT_EQ(a.pose.position, f.position());
    EXPECT_EQ(a.box.center, f.position());
  }
}

TEST(Reset, IdmModeDeterministic) {
  const Scenario& sc = scenario_with_workers();
  Rng r1(5), r2(5);
  const WorldState a = reset(sc, WorkerMode::idm, r1);
  const WorldState b = reset(sc, WorkerMode::idm, r2);
  ASSERT_EQ(a.agents.size(), b.agents.size());
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    EXPECT_EQ(a.agents[i].s, b.agents[i].s);
    EXPECT_EQ(a.agents[i].idm.v0, b.agents[i].idm.v0);
    EXPECT_EQ(a.agents[i].pose.position, b.agents[i].pose.position);
    if (i > 0) {
      EXPECT_EQ(a.agents[i].mode, AgentMode::idm_worker);
      EXPECT_GE(a.agents[i].idm.v0, 30.0 / 3.6);
      EXPECT_LE(a.agents[i].idm.v0, 50.0 / 3.6);
    }
  }
}

TEST(Reset, ActorStartsAtProjection) {
  const Scenario sc = make({linear_track(1, 0, 151, {5, 0.4}, {9, 0})}, 150);
  Rng rng(1);
  const WorldState w = reset(sc, WorkerMode::replay, rng);
  const Projection p = arc_project(sc.reference_path(), sc.expert_track.frames.front().position());
  EXPECT_EQ(w.actor().s, p.s);
  EXPECT_LT(std::abs(p.lateral), 2.0);
  EXPECT_EQ(w.actor_history.size(), 1u);
  EXPECT_THROW(reset(sc, WorkerMode::replay, rng, 151), ValidationError);
}

// Direct transcription of the IDM acceleration law.
double idm_oracle(double v, double gap, double vl, const IdmParams& p) {
  const double s_star = std::max(p.s0, p.s0 + v * p.time_headway + v * (v - vl) / (2.0 * std::sqrt(p.a_max * p.b)));
  return p.a_max * (1.0 - std::pow(v / p.v0, p.delta) - std::pow(s_star / gap, 2.0));
}

TEST(Idm, Equilibria) {
  IdmParams p;
  EXPECT_NEAR(idm_acceleration(p.v0, kInf, 0.0, p), 0.0, 1e-9);
  EXPECT_NEAR(idm_acceleration(0.0, p.s0, 0.0, p), 0.0, 1e-9);
  // steady car following: gap = s*(v) / sqrt(1 - (v/v0)^delta)
  for (double v : {2.0, 5.0, 8.0, 11.0, 13.0}) {
    const double s_star = p.s0 + v * p.time_headway;
    const double gap = s_star / std::sqrt(1.0 - std::pow(v / p.v0, p.delta));
    EXPECT_NEAR(idm_acceleration(v, gap, v, p), 0.0, 1e-9) << v;
  }
}

TEST(Idm, GoldenValue) {
  IdmParams p;
  p.v0 = 13.89;
  const double a = idm_acceleration(10.0, 20.0, 10.0, p);
  EXPECT_NEAR(a, idm_oracle(10.0, 20.0, 10.0, p), 1e-15);
  EXPECT_NEAR(a, 0.013271128714025582, 1e-12);
}

TEST(Idm, MatchesFormulaInsideBounds) {
  IdmParams p;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> v(0, 16), gap(3, 80);
  for (int i = 0; i < 1000; ++i) {
    const double vv = v(rng), g = gap(rng), vl = v(rng);
    const double expected = std::clamp(idm_oracle(vv, g, vl, p), -2.0 * p.b, p.a_max);
    EXPECT_NEAR(idm_acceleration(vv, g, vl, p), expected, 1e-12);
  }
}

TEST(Idm, SpeedConvergesToDesired) {
  const Scenario sc = make({linear_track(1, 0, 151, {5, 0}, {9, 0})}, 150, straight_map(2000));
  WorldState w;
  w.scenario = &sc;
  AgentState worker;
  worker.id = 2;
  worker.mode = AgentMode::idm_worker;
  worker.path = &sc.reference_path();
  worker.speed = 0.0;
  worker.place_on_path(10.0);
  w.agents.push_back(worker);
  for (int k = 0; k < 600; ++k) {
    const auto acc = idm_accelerations(w);
    integrate_idm(w.agents[0], acc[0]);
  }
  EXPECT_NEAR(w.agents[0].speed, worker.idm.v0, 0.01 * worker.idm.v0);
}

TEST(Idm, CarFollowingLineNeverCollides) {
  const auto r = testing::idm_line_trials(100, 17);
  EXPECT_EQ(r.collided, 0) << "first collision in trial " << r.first_collision;
  EXPECT_GT(r.min_gap, 0.0);
}

TEST(VirtualLeader, NoneWithoutOthers) {
  const Scenario sc = make({linear_track(1, 0, 151, {5, 0}, {9, 0})}, 150);
  WorldState w;
  w.scenario = &sc;
  AgentState a;
  a.mode = AgentMode::idm_worker;
  a.path = &sc.reference_path();
  a.place_on_path(50);
  w.agents.push_back(a);
  EXPECT_FALSE(virtual_leader(w, 0));

  AgentState behind = a;
  behind.id = 2;
  behind.place_on_path(40);
  w.agents.push_back(behind);
  EXPECT_FALSE(virtual_leader(w, 0));
  const auto lead = virtual_leader(w, 1);
  ASSERT_TRUE(lead);
  EXPECT_NEAR(lead->gap, 10.0 - 4.5, 1e-9);
  EXPECT_EQ(lead->id, 0);
}

TEST(VirtualLeader, CrossingAgentAhead) {
  const auto map = testing::crossing_map();
  const ArcPath& ew = map->at("ew").centerline;
  WorldState w;
  AgentState ego;
  ego.id = 1;
  ego.mode = AgentMode::idm_worker;
  ego.path = &ew;
  ego.speed = 8.0;
  ego.place_on_path(92.0);  // x = -8
  w.agents.push_back(ego);
  AgentState crossing;
  crossing.id = 2;
  crossing.mode = AgentMode::replay_worker;
  TrackFrame f;
  f.x = 0.0;
  f.y = 0.3;
  f.vx = 0.0;
  f.vy = 6.0;
  f.heading = std::numbers::pi / 2;
  crossing.place_at(f);
  w.agents.push_back(crossing);
  const auto lead = virtual_leader(w, 0);
  ASSERT_TRUE(lead);
  EXPECT_EQ(lead->id, 2);
  EXPECT_NEAR(lead->gap, 8.0 - 0.5 * 4.5 - 0.5 * 4.5, 1e-9);
  EXPECT_NEAR(lead->speed, 0.0, 1e-12);
}

TEST(Step, NegativeActionIsClamped) {
  const Scenario sc = make({linear_track(1, 0, 26, {5, 0}, {9, 0})}, 25);
  Rng rng(1);
  WorldState w = reset(sc, WorkerMode::replay, rng);
  const StepOutcome out = step(w, -0.5);
  EXPECT_EQ(out.ds_applied, 0.0);
  EXPECT_EQ(w.actor().s, 5.0);
  EXPECT_EQ(step(w, 7.0).ds_applied, kDsCap);
  EXPECT_EQ(step(w, std::nan("")).ds_applied, 0.0);
}

TEST(Step, ActorAloneAdvances) {
  const Scenario sc = make({linear_track(1, 0, 26, {5, 0}, {9, 0})}, 25);
  Rng rng(1);
  WorldState w = reset(sc, WorkerMode::replay, rng);
  const double s0 = w.actor().s;
  for (int k = 0; k < 10; ++k) {
    const StepOutcome out = step(w, 1.0);
    EXPECT_FALSE(out.new_collision);
    EXPECT_FALSE(out.done);
  }
  EXPECT_NEAR(w.actor().s - s0, 10.0, 1e-12);
  EXPECT_EQ(w.clock_step, 10);
  EXPECT_EQ(w.actor_history.size(), 11u);
}

TEST(Step, OncomingReplayWorkerHitsStationaryActor) {
  const Scenario sc = make({linear_track(1, 0, 51, {5, 0}, {0, 0}), linear_track(2, 0, 51, {30, 0}, {-5, 0})}, 50);
  Rng rng(1);
  WorldState w = reset(sc, WorkerMode::replay, rng);
  int collisions = 0;
  int first = -1;
  while (!w.done()) {
    const StepOutcome out = step(w, 0.0);
    EXPECT_TRUE(!out.front_collision || out.new_collision);
    if (out.new_collision) {
      ++collisions;
      first = w.clock_step;
      EXPECT_TRUE(out.front_collision);
      ASSERT_EQ(out.events.size(), 1u);
      EXPECT_EQ(out.events[0].partner, 2);
    }
  }
  EXPECT_EQ(collisions, 1);
  // centers 4.5 m apart first at x = 9.5, i.e. after 41 steps at 0.5 m/step
  EXPECT_EQ(first, 41);
  EXPECT_TRUE(w.actor_collided);
  EXPECT_THROW(step(w, 0.0), std::logic_error);
}

TEST(Step, RearCollisionIsNotFrontal) {
  const Scenario sc = make({linear_track(1, 0, 51, {30, 0}, {0, 0}), linear_track(2, 0, 51, {5, 0}, {5, 0})}, 50);
  Rng rng(1);
  WorldState w = reset(sc, WorkerMode::replay, rng);
  bool seen = false;
  while (!w.done()) {
    const StepOutcome out = step(w, 0.0);
    if (out.new_collision) {
      seen = true;
      EXPECT_FALSE(out.front_collision);
    }
  }
  EXPECT_TRUE(seen);
}

TEST(Step, MonotoneProgressAndSingleCountPerPartner) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> action(-1.0, 3.0);
  for (const Scenario& sc : testing::synthetic_set().scenarios) {
    for (WorkerMode mode : {WorkerMode::replay, WorkerMode::idm}) {
      Rng r(9);
      WorldState w = reset(sc, mode, r);
      std::set<AgentId> partners;
      double s = w.actor().s;
      while (!w.done()) {
        const StepOutcome out = step(w, action(rng));
        EXPECT_GE(w.actor().s, s);
        s = w.actor().s;
        for (const CollisionEvent& e : out.events) EXPECT_TRUE(partners.insert(e.partner).second);
        EXPECT_EQ(w.actor().pose.position, pose_at(sc.reference_path(), w.actor().s).position);
      }
    }
  }
}

TEST(Step, IdmWorkersStayOnTheirPaths) {
  const Scenario& sc = scenario_with_workers();
  Rng rng(3);
  WorldState w = reset(sc, WorkerMode::idm, rng);
  while (!w.done()) {
    step(w, 1.0);
    for (std::size_t i = 1; i < w.agents.size(); ++i) {
      const AgentState& a = w.agents[i];
      if (!a.active) continue;
      EXPECT_EQ(a.pose.position, pose_at(*a.path, a.s).position);
      EXPECT_EQ(a.box.center, a.pose.position);
    }
  }
}

TEST(Rollout, ReplayFidelityOnTrainingScenarios) {
  const ExpertReplayPolicy expert;
  RolloutOptions opt;
  opt.stochastic = false;
  opt.record_obs = false;
  for (const Scenario& sc : testing::synthetic_set().scenarios) {
    Rng rng(1);
    const Trajectory t = rollout(expert, sc, WorkerMode::replay, rng, opt);
    ASSERT_EQ(t.positions.size(), sc.expert_track.frames.size());
    for (std::size_t k = 0; k < t.positions.size(); ++k) {
      EXPECT_LT(distance(t.positions[k], sc.expert_track.frames[k].position()), 0.1) << sc.id << " step " << k;
    }
    EXPECT_TRUE(t.events.empty()) << sc.id;
  }
}

TEST(Rollout, HorizonAndDone) {
  const Scenario& sc = testing::synthetic_set().scenarios.front();
  ASSERT_EQ(sc.horizon_steps, 25);
  const ConstantPolicy policy(1.0);
  Rng rng(1);
  const Trajectory t = rollout(policy, sc, WorkerMode::replay, rng);
  ASSERT_EQ(t.size(), 25u);
  EXPECT_TRUE(t.done(24));
  EXPECT_FALSE(t.done(23));
  EXPECT_FALSE(t.truncated);
  EXPECT_EQ(t.obs.size(), 25u * kObsDim);

  RolloutOptions opt;
  opt.max_steps = 10;
  Rng rng2(1);
  const Trajectory cut = rollout(policy, sc, WorkerMode::replay, rng2, opt);
  EXPECT_EQ(cut.size(), 10u);
  EXPECT_TRUE(cut.truncated);
  EXPECT_EQ(cut.next_obs.size(), static_cast<std::size_t>(kObsDim));
}

TEST(Rollout, DeterministicPolicyRepeats) {
  const NetworkLayout layout;
  const NetworkPolicy policy(layout, init_params(layout, 3));
  const Scenario& sc = scenario_with_workers();
  RolloutOptions opt;
  opt.stochastic = false;
  Rng a(8), b(8);
  const Trajectory t1 = rollout(policy, sc, WorkerMode::idm, a, opt);
  const Trajectory t2 = rollout(policy, sc, WorkerMode::idm, b, opt);
  EXPECT_EQ(t1.actions, t2.actions);
  EXPECT_EQ(t1.positions, t2.positions);
  EXPECT_EQ(t1.obs, t2.obs);
}

TEST(Rollout, TraceHasOneActorRowPerStep) {
  const Scenario& sc = scenario_with_workers();
  const ConstantPolicy policy(1.0);
  Rng rng(1);
  std::vector<TraceRow> trace;
  rollout(policy, sc, WorkerMode::replay, rng, {}, &trace);
  const auto actor_rows = std::count_if(trace.begin(), trace.end(), [&](const TraceRow& r) { return r.agent_id == sc.actor_id; });
  EXPECT_EQ(actor_rows, sc.horizon_steps + 1);
  std::ostringstream out;
  write_trace(trace, out);
  EXPECT_EQ(out.str().rfind("step,agent_id,x,y,heading,speed,collided\n", 0), 0u);
}

TEST(SplitSeed, DistinctStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10; ++i) {
    for (std::uint64_t j = 0; j < 10; ++j) seen.insert(split_seed(1, i, j));
  }
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(split_seed(1, 2, 3), split_seed(1, 2, 3));
}

}  // namespace
}  // namespace drivelearn
