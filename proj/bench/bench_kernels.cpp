// Serial reference vs OpenMP sweep, and the fair-share kernel alone.

#include <benchmark/benchmark.h>

#include <numeric>

#include "pubopt/isp_monopoly.hpp"
#include "pubopt/parallel.hpp"

using namespace pubopt;

namespace {

const std::vector<ContentProvider>& cps() {
  static const auto p = generate_population(default_population_spec());
  return p;
}

const std::vector<double> kKappa{0.0, 0.5, 1.0};
const std::vector<double> kPrice{0.1, 0.3, 0.5, 0.7};

void BM_FairShareLevel(benchmark::State& state) {
  const CpTable t(cps());
  std::vector<int> all(t.size());
  std::iota(all.begin(), all.end(), 0);
  const double nu = static_cast<double>(state.range(0));
  int iters = 0;
  for (auto _ : state) benchmark::DoNotOptimize(fair_share_level(t, all, nu, -1.0, iters));
  state.counters["newton_iters"] = iters;
}
BENCHMARK(BM_FairShareLevel)->Arg(10)->Arg(150)->Arg(230);

void BM_ClassGame(benchmark::State& state) {
  const CpTable t(cps());
  for (auto _ : state) benchmark::DoNotOptimize(solve_class_game(t, {0.6, 0.3}, 150.0));
}
BENCHMARK(BM_ClassGame)->Unit(benchmark::kMillisecond);

void BM_SweepSerial(benchmark::State& state) {
  const auto nu = log_grid(1.0, 500.0, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(monopoly_sweep_serial(cps(), kKappa, kPrice, nu));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(kKappa.size() * kPrice.size() * nu.size()));
}
BENCHMARK(BM_SweepSerial)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_SweepParallel(benchmark::State& state) {
  const auto nu = log_grid(1.0, 500.0, static_cast<int>(state.range(0)));
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(monopoly_sweep(cps(), kKappa, kPrice, nu, threads));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(kKappa.size() * kPrice.size() * nu.size()));
  state.counters["threads"] = effective_threads(threads);
}
BENCHMARK(BM_SweepParallel)->Args({8, 1})->Args({8, 0})->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
