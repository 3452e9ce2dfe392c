// Serial vs OpenMP timings for the Monte Carlo kernel and the coverage loop.
#include "pacb/bounds.hpp"
#include "pacb/experiments.hpp"

#include <benchmark/benchmark.h>

using namespace pacb;

namespace {

const IIDIsotropic kIid{Vector::Constant(2, 0.5), 1.0, 0.5};

void BM_PsiThm3(benchmark::State& state) {
  const auto exec = state.range(0) ? Execution::parallel : Execution::serial;
  const McSettings mc{state.range(1), {1, 0}, exec};
  const PriorSpec prior = PriorSpec::gaussian(2, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(psi_thm3_exact(prior, kIid, 1.0, 100, mc));
  state.SetItemsProcessed(state.iterations() * state.range(1));
  state.SetLabel(exec == Execution::parallel ? "parallel" : "serial");
}
BENCHMARK(BM_PsiThm3)->ArgsProduct({{0, 1}, {1 << 16, 1 << 20}})->Unit(benchmark::kMillisecond);

void BM_Coverage(benchmark::State& state) {
  CoverageSettings s;
  s.bound.lambda = 1.0;
  s.n = 50;
  s.trials = state.range(1);
  s.exec = state.range(0) ? Execution::parallel : Execution::serial;
  s.mc = {20000, {2, 0}, s.exec};
  const PriorSpec prior = PriorSpec::gaussian(2, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(coverage_experiment(kIid, prior, s));
  state.SetItemsProcessed(state.iterations() * state.range(1));
  state.SetLabel(s.exec == Execution::parallel ? "parallel" : "serial");
}
BENCHMARK(BM_Coverage)->ArgsProduct({{0, 1}, {1000}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
