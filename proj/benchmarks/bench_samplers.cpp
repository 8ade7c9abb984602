#include "tiltlab/rng.hpp"
#include "tiltlab/samplers.hpp"

#include <benchmark/benchmark.h>

using namespace tiltlab;

namespace {

SamplerConfig config(std::size_t n, bool free_boundary) {
  SamplerConfig c;
  c.n = n;
  c.T = 2.0;
  c.dt = 1.0 / 64.0;
  c.tilt = TiltParams(1.0, 2.0, n);
  if (free_boundary) c.boundary = FreeBoundary{};
  else c.boundary = ZeroBoundary{0.1};
  return c;
}

void BM_McmcSweep(benchmark::State& state) {
  const auto c = config(static_cast<std::size_t>(state.range(0)), state.range(1) != 0);
  McmcChain chain(c, Rng(1, 0));
  for (auto _ : state) chain.sweep();
}
BENCHMARK(BM_McmcSweep)->ArgsProduct({{1, 2, 3}, {0, 1}});

void BM_RejectionDraw(benchmark::State& state) {
  auto c = config(1, false);
  c.T = 1.0;
  RejectionSampler sampler(c);
  Rng rng(2, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sampler.draw(rng));
}
BENCHMARK(BM_RejectionDraw);

void BM_Philox(benchmark::State& state) {
  Philox4x32 g(5, 0);
  for (auto _ : state) benchmark::DoNotOptimize(g());
}
BENCHMARK(BM_Philox);

}  // namespace

BENCHMARK_MAIN();
