#include <map>

#include <benchmark/benchmark.h>

#include "srsattr/optimizer.hpp"
#include "srsattr/report.hpp"
#include "srsattr/sampling.hpp"

namespace {

using namespace srsattr;

const Population& population(std::size_t N) {
  static std::map<std::size_t, Population> cache;
  auto it = cache.find(N);
  if (it == cache.end()) {
    it = cache.emplace(N, synthesize_population(synth_params_for_correlation(N, 0.3, 0.6, 10.0, 3.0, 1))).first;
  }
  return it->second;
}

void BM_Moments(benchmark::State& state) {
  const Population& pop = population(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(moments(pop));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Moments)->Arg(1'000)->Arg(100'000);

void BM_ExactMomentTable(benchmark::State& state) {
  const Population& pop = population(20);
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(exact_moment_table(pop, n));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(subset_count(20, n)));
}
BENCHMARK(BM_ExactMomentTable)->Arg(5)->Arg(10);

void BM_EngineSecondOrder(benchmark::State& state) {
  const Population& pop = population(1'000);
  const auto mp = MomentProvider::lemma_based(moments(pop), design_coefficients(1'000, 50));
  const Solanki spec{0.8, 0.3};
  for (auto _ : state) {
    benchmark::DoNotOptimize(bias_second_order(spec, mp));
    benchmark::DoNotOptimize(mse_second_order(spec, mp));
  }
}
BENCHMARK(BM_EngineSecondOrder);

void BM_SecondOrderOptimum(benchmark::State& state) {
  const Population& pop = population(1'000);
  const MomentSet ms = moments(pop);
  const auto dc = design_coefficients(1'000, 50);
  const auto family = static_cast<Family>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(second_order_optimum(family, ms, dc));
}
BENCHMARK(BM_SecondOrderOptimum)->DenseRange(0, 3);

void BM_Simulate(benchmark::State& state) {
  const Population& pop = population(1'000);
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate(pop, 50, SahaiRay{0.7}, 20'000, 3, DegeneratePolicy::Skip, threads));
  }
  state.SetItemsProcessed(state.iterations() * 20'000);
}
BENCHMARK(BM_Simulate)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
