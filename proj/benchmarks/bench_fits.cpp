#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "resq/circlefit.hpp"
#include "resq/tlsfit.hpp"

using namespace resq;

namespace {

const ResonanceParams kRes{4.4e9, 5e5, 1e6, 0.1};
const EnvironmentParams kEnv{0.8, 0.7, 37.5e-9};

void BM_FitCircle(benchmark::State& state) {
  const Trace t = testing::model_trace(kRes, kEnv, static_cast<std::size_t>(state.range(0)), 10.0,
                                       1e-3, 3);
  std::vector<Complex> pts;
  for (const auto& s : t.samples()) pts.push_back(s.s21);
  for (auto _ : state) benchmark::DoNotOptimize(circlefit::fit_circle(pts));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitCircle)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_EstimateDelay(benchmark::State& state) {
  const Trace t = testing::model_trace(kRes, kEnv, 401, 10.0, 1e-3, 3);
  for (auto _ : state) benchmark::DoNotOptimize(circlefit::estimate_delay(t));
}
BENCHMARK(BM_EstimateDelay);

void BM_Extract(benchmark::State& state) {
  const Trace t = testing::model_trace(kRes, kEnv, static_cast<std::size_t>(state.range(0)), 10.0,
                                       1e-3, 3);
  for (auto _ : state) benchmark::DoNotOptimize(circlefit::extract(t));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Extract)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_FitTls(benchmark::State& state) {
  const auto truth = testing::tls_params(testing::reference("1", 1.0));
  const int n_points = static_cast<int>(state.range(0));
  std::vector<calibration::PowerPoint> pts;
  for (int k = 0; k < n_points; ++k) {
    const double n = 0.1 * std::pow(1e7, k / double(n_points - 1));
    const double loss = tls_inverse_q(n, truth) * (1.0 + 0.01 * std::sin(7.0 * k));
    pts.push_back({n, 1.0 / loss, 0.01 / loss, 0.0});
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(tls::fit_tls(pts, testing::kFr, truth.temperature));
  }
}
BENCHMARK(BM_FitTls)->Arg(12)->Arg(40)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
