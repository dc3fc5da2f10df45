#include <benchmark/benchmark.h>

#include <map>

#include "argoskit/bayes.hpp"
#include "argoskit/freq_screen.hpp"
#include "argoskit/library.hpp"
#include "argoskit/smoothing.hpp"

using namespace argoskit;

namespace {

const Trajectory& lorenz(int n) {
  static std::map<int, Trajectory> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    const auto sys = builtin_system("lorenz");
    Trajectory t = simulate(sys, sample_initial_condition(sys, 1), sys.default_dt, n);
    it = cache.emplace(n, add_noise(t, {49.0, 2})).first;
  }
  return it->second;
}

}  // namespace

static void BM_Simulate(benchmark::State& state) {
  const auto sys = builtin_system("lorenz");
  const Vector ic = sample_initial_condition(sys, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(sys, ic, sys.default_dt, static_cast<int>(state.range(0))));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Simulate)->RangeMultiplier(4)->Range(1000, 16000)->Unit(benchmark::kMillisecond);

static void BM_SgFilter(benchmark::State& state) {
  const Vector x = lorenz(5000).states.col(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sg_filter(x, kSgOrder, static_cast<int>(state.range(0)), 1, 0.001));
  }
}
BENCHMARK(BM_SgFilter)->Arg(13)->Arg(51)->Arg(101);

static void BM_SmoothAndDifferentiate(benchmark::State& state) {
  const Trajectory& t = lorenz(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(smooth_and_differentiate(t));
}
BENCHMARK(BM_SmoothAndDifferentiate)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

static void BM_BuildLibrary(benchmark::State& state) {
  const Matrix& X = lorenz(5000).states;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_library(X, static_cast<int>(state.range(0)), false));
  }
}
BENCHMARK(BM_BuildLibrary)->DenseRange(2, 5)->Unit(benchmark::kMicrosecond);

static void BM_LassoFit(benchmark::State& state) {
  const Trajectory& t = lorenz(5000);
  const SmoothedData s = smooth_and_differentiate(t);
  const CandidateLibrary lib = build_library(s.X, 5, false);
  const Vector y = s.Xdot.col(1);
  const Vector w = adaptive_weights(lib, ridge_fit(lib, y, 1e-6));
  const double lambda = 1e-3 * lambda_max(lib, y, w);
  for (auto _ : state) benchmark::DoNotOptimize(lasso_fit(lib, y, w, lambda));
}
BENCHMARK(BM_LassoFit)->Unit(benchmark::kMillisecond);

static void BM_Screen(benchmark::State& state) {
  const SmoothedData s = smooth_and_differentiate(lorenz(5000));
  const CandidateLibrary lib = build_library(s.X, 5, false);
  for (auto _ : state) benchmark::DoNotOptimize(screen(lib, s.X, s.Xdot.col(1), 3));
}
BENCHMARK(BM_Screen)->Unit(benchmark::kMillisecond);

static void BM_HmcSample(benchmark::State& state) {
  const SmoothedData s = smooth_and_differentiate(lorenz(5000));
  const CandidateLibrary full = build_library(s.X, 2, false);
  const CandidateLibrary lib = select_columns(full, {1, 2, 6});  // x1, x2, x1*x3
  BayesConfig cfg;
  cfg.seed = 5;
  for (auto _ : state) benchmark::DoNotOptimize(hmc_sample(lib, s.Xdot.col(1), cfg));
}
BENCHMARK(BM_HmcSample)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
