#include <benchmark/benchmark.h>

#include <random>

#include "drivelearn/geometry.hpp"

using namespace drivelearn;

namespace {

ArcPath ring(int points, double radius) {
  std::vector<Point2> pts;
  for (int i = 0; i <= points; ++i) {
    const double a = 1.5 * std::numbers::pi * i / points;
    pts.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return ArcPath(pts);
}

void BM_ArcProject(benchmark::State& state) {
  const ArcPath path = ring(static_cast<int>(state.range(0)), 25.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-30, 30);
  std::vector<Point2> queries(1024);
  for (Point2& q : queries) q = {u(rng), u(rng)};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(arc_project(path, queries[i++ & 1023]));
  }
}
BENCHMARK(BM_ArcProject)->Arg(100)->Arg(1000);

void BM_ObbOverlap(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> pos(-6, 6), ang(-3.2, 3.2);
  std::vector<OrientedBox> boxes(1024);
  for (OrientedBox& b : boxes) b = {{pos(rng), pos(rng)}, ang(rng), 4.5, 1.8};
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(obb_overlap(boxes[i & 1023], boxes[(i + 1) & 1023]));
    ++i;
  }
}
BENCHMARK(BM_ObbOverlap);

}  // namespace

BENCHMARK_MAIN();
