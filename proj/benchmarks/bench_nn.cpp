#include <benchmark/benchmark.h>

#include <random>

#include "drivelearn/nn.hpp"
#include "drivelearn/observation.hpp"

using namespace drivelearn;

namespace {

Matrix batch(int rows) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 0.5);
  Matrix m(rows, kObsDim);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < kObsDim; ++j) m(i, j) = n(rng);
  }
  return m;
}

void BM_PolicyForward(benchmark::State& state) {
  const NetworkLayout layout;
  const auto params = init_params(layout, 1);
  const Matrix obs = batch(static_cast<int>(state.range(0)));
  PolicyPass pass;
  for (auto _ : state) {
    pass.forward(layout, params, obs);
    benchmark::DoNotOptimize(pass.mu().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PolicyForward)->Arg(1)->Arg(256);

void BM_PolicyForwardBackward(benchmark::State& state) {
  const NetworkLayout layout;
  const auto params = init_params(layout, 1);
  const Matrix obs = batch(static_cast<int>(state.range(0)));
  std::vector<double> grad(layout.size(), 0.0);
  PolicyPass pass;
  for (auto _ : state) {
    pass.forward(layout, params, obs);
    pass.backward(params, Vector::Ones(obs.rows()), 1.0, grad);
    benchmark::DoNotOptimize(grad.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PolicyForwardBackward)->Arg(256);

void BM_DiscriminatorForwardBackward(benchmark::State& state) {
  const NetworkLayout layout;
  const auto params = init_params(layout, 1);
  const Matrix obs = batch(256);
  const Vector actions = Vector::Ones(256);
  std::vector<double> grad(layout.size(), 0.0);
  DiscriminatorPass pass;
  for (auto _ : state) {
    pass.forward(layout, params, obs, actions);
    pass.backward(params, Vector::Ones(256), grad);
    benchmark::DoNotOptimize(grad.data());
  }
}
BENCHMARK(BM_DiscriminatorForwardBackward);

}  // namespace

BENCHMARK_MAIN();
