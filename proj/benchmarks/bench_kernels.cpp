#include "tiltlab/chamber.hpp"
#include "tiltlab/kernels.hpp"

#include <benchmark/benchmark.h>

#include <vector>

using namespace tiltlab;

namespace {

std::vector<double> chamber_point(std::size_t n, double top) {
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = top * static_cast<double>(n - i) / static_cast<double>(n);
  return y;
}

void BM_KarlinMcGregor(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = chamber_point(n, 2.0), y = chamber_point(n, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(km_kernel(1.0, x, y));
}
BENCHMARK(BM_KarlinMcGregor)->DenseRange(1, 4);

void BM_GrabinerCorner(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto y = chamber_point(n, 3.0);
  for (auto _ : state) benchmark::DoNotOptimize(grabiner_corner(1.0, 0.25, y));
}
BENCHMARK(BM_GrabinerCorner)->DenseRange(1, 4);

void BM_AbsorbedKernel(benchmark::State& state) {
  double x = 0.3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(absorbed_kernel_q(0.7, x, 1.1));
    x += 1e-9;
  }
}
BENCHMARK(BM_AbsorbedKernel);

void BM_BridgeSurvival(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(bridge_survival(0.2, 0.4, 1.0 / 64.0));
}
BENCHMARK(BM_BridgeSurvival);

}  // namespace

BENCHMARK_MAIN();
