#include "tiltlab/spectral.hpp"

#include <benchmark/benchmark.h>

using namespace tiltlab;

namespace {

SpectralOptions grid(double R, double h) {
  SpectralOptions o;
  o.R = R;
  o.h = h;
  o.m_tau = 32;
  return o;
}

void BM_ComputeSpectralOneLine(benchmark::State& state) {
  const double h = 1.0 / static_cast<double>(state.range(0));
  for (auto _ : state) {
    const auto s = compute_spectral(TiltParams(1.0, 2.0, 1), grid(8.0, h));
    benchmark::DoNotOptimize(s.lambda1());
  }
}
BENCHMARK(BM_ComputeSpectralOneLine)->Arg(20)->Arg(50)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_ComputeSpectralTwoLines(benchmark::State& state) {
  for (auto _ : state) {
    const auto s = compute_spectral(TiltParams(1.0, 2.0, 2), grid(9.0, 0.3));
    benchmark::DoNotOptimize(s.lambda1());
  }
}
BENCHMARK(BM_ComputeSpectralTwoLines)->Unit(benchmark::kMillisecond);

void BM_FiniteTValues(benchmark::State& state) {
  const auto s = compute_spectral(TiltParams(1.0, 2.0, 1), grid(8.0, 0.05));
  const auto gamma = gamma_operator(PathEvent::endpoint_box(0, 1.0), s);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mu_free_T(gamma, ThetaMeasure::lebesgue(), 8.0, s).value);
    benchmark::DoNotOptimize(mu_zero_T(gamma, 8.0, 1e-3, s).value);
  }
}
BENCHMARK(BM_FiniteTValues)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
