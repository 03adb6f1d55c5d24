// Microbenchmarks for the hot paths: loop erasure, walk sampling, Wilson
// trees, and curve distance.

#include <benchmark/benchmark.h>

#include "lerw/curve.hpp"
#include "lerw/geometry.hpp"
#include "lerw/path_ops.hpp"
#include "lerw/rng.hpp"
#include "lerw/walk.hpp"
#include "lerw/wilson.hpp"

namespace {

using namespace lerw;

LatticePath free_walk(std::uint64_t steps) {
  RngStream rng(7, 0);
  LatticePath w;
  w.pts.push_back({0, 0, 0});
  for (std::uint64_t i = 0; i < steps; ++i)
    w.pts.push_back(w.pts.back() + kSteps[rng.uniform_below(6)]);
  return w;
}

void BM_LoopErase10k(benchmark::State& state) {
  LatticePath w = free_walk(10000);
  for (auto _ : state) benchmark::DoNotOptimize(loop_erase(w));
  state.SetItemsProcessed(std::int64_t(state.iterations()) * 10000);
}

void BM_SrwExitBall32(benchmark::State& state) {
  Domain dom = Domain::ball({0, 0, 0}, 32.0);
  StopRule rule;
  rule.exit_domain = &dom;
  std::uint64_t u = 0;
  for (auto _ : state) {
    RngStream rng(11, u++);
    benchmark::DoNotOptimize(sample_srw({0, 0, 0}, rule, rng));
  }
}

void BM_LerwExitMesh5(benchmark::State& state) {
  Domain dom = Domain::scaled_ball(0, 0, 0, 1.0, 5);
  std::uint64_t u = 0;
  for (auto _ : state) {
    RngStream rng(13, u++);
    benchmark::DoNotOptimize(sample_lerw_to_exit({0, 0, 0}, dom, rng, 5));
  }
}

void BM_WilsonBox3(benchmark::State& state) {
  Domain dom = Domain::box({1, 1, 1}, 1.0);
  std::uint64_t u = 0;
  for (auto _ : state) {
    RngStream rng(17, u++);
    benchmark::DoNotOptimize(wilson_sample(dom, rng));
  }
}

void BM_RhoDistance(benchmark::State& state) {
  Domain dom = Domain::scaled_ball(0, 0, 0, 1.0, 5);
  RngStream ra(19, 0), rb(19, 1);
  ParamCurve a = rescale_to_curve(sample_lerw_to_exit({0, 0, 0}, dom, ra, 5),
                                  1.5);
  ParamCurve b = rescale_to_curve(sample_lerw_to_exit({0, 0, 0}, dom, rb, 5),
                                  1.5);
  for (auto _ : state) benchmark::DoNotOptimize(rho_distance(a, b));
}

}  // namespace

BENCHMARK(BM_LoopErase10k);
BENCHMARK(BM_SrwExitBall32);
BENCHMARK(BM_LerwExitMesh5);
BENCHMARK(BM_WilsonBox3);
BENCHMARK(BM_RhoDistance);

BENCHMARK_MAIN();
