#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "condcov/bandwidth.hpp"
#include "condcov/forest.hpp"
#include "condcov/kernel.hpp"
#include "condcov/rng.hpp"

using namespace condcov;

namespace {

Dataset synthetic(std::size_t n, std::size_t p, std::size_t q) {
  StreamRng rng(7, {n, p, q});
  Matrix z(n, q), x(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t k = 0; k < q; ++k) {
      z(i, k) = rng.uniform(-2, 2);
      s += z(i, k);
    }
    const double common = rng.normal();
    for (std::size_t j = 0; j < p; ++j) x(i, j) = 0.3 * s + (1 + 0.5 * std::abs(s)) * (common + rng.normal());
  }
  return Dataset(std::move(z), std::move(x));
}

void BM_NwCovariance(benchmark::State& state) {
  const auto d = synthetic(static_cast<std::size_t>(state.range(0)), 8, 2);
  const auto model = fit(d, 0.5, KernelSpec::global(0.5));
  const std::vector<double> z{0.1, -0.3};
  for (auto _ : state) benchmark::DoNotOptimize(nw_covariance(model, z));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NwCovariance)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oN);

void BM_BestSplit(benchmark::State& state) {
  const auto d = synthetic(static_cast<std::size_t>(state.range(0)), 8, 2);
  const auto cfg = ForestConfig{}.resolved(8, 2);
  std::vector<std::size_t> rows(d.n());
  std::iota(rows.begin(), rows.end(), 0);
  for (auto _ : state) {
    StreamRng rng(1, {});
    benchmark::DoNotOptimize(best_split(rows, d.outputs(), d.covariates(), cfg, rng));
  }
}
BENCHMARK(BM_BestSplit)->RangeMultiplier(4)->Range(256, 16384);

void BM_FitForest(benchmark::State& state) {
  const auto d = synthetic(2000, 8, 2);
  ForestConfig cfg;
  cfg.n_trees = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(fit_forest(d, d.outputs(), cfg));
}
BENCHMARK(BM_FitForest)->Arg(10)->Arg(50)->Unit(benchmark::kMillisecond);

void BM_CvLosses(benchmark::State& state) {
  const auto d = synthetic(static_cast<std::size_t>(state.range(0)), 4, 2);
  const auto grid = default_bandwidth_grid(d.covariates(), 5);
  for (auto _ : state) benchmark::DoNotOptimize(cv_losses(d.covariates(), d.outputs(), grid, 5, 1e-8));
}
BENCHMARK(BM_CvLosses)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
