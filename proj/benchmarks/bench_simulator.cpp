#include <benchmark/benchmark.h>

#include "drivelearn/observation.hpp"
#include "drivelearn/simulator.hpp"
#include "drivelearn/synthetic.hpp"

using namespace drivelearn;

namespace {

const SyntheticSet& data() {
  static const SyntheticSet set = generate_synthetic(SyntheticConfig{}, 1);
  return set;
}

void run_episodes(benchmark::State& state, WorkerMode mode, bool observe) {
  const auto& val = data().validation;
  std::size_t i = 0;
  long steps = 0;
  for (auto _ : state) {
    Rng rng(i);
    WorldState w = reset(val[i++ % val.size()], mode, rng);
    while (!w.done()) {
      if (observe) benchmark::DoNotOptimize(normalize(build_observation(w)));
      step(w, 1.0);
      ++steps;
    }
  }
  state.SetItemsProcessed(steps);
}

void BM_EpisodeReplay(benchmark::State& state) { run_episodes(state, WorkerMode::replay, false); }
void BM_EpisodeIdm(benchmark::State& state) { run_episodes(state, WorkerMode::idm, false); }
void BM_EpisodeIdmWithObservations(benchmark::State& state) { run_episodes(state, WorkerMode::idm, true); }
BENCHMARK(BM_EpisodeReplay);
BENCHMARK(BM_EpisodeIdm);
BENCHMARK(BM_EpisodeIdmWithObservations);

}  // namespace

BENCHMARK_MAIN();
