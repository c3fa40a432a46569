#include <benchmark/benchmark.h>

#include <limits>
#include <vector>

#include "qdetect/detector.hpp"
#include "qdetect/montecarlo.hpp"
#include "qdetect/pde_verifier.hpp"
#include "qdetect/sde_sim.hpp"

using namespace qdetect;

namespace {

void BM_PathStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  PathStepper stepper(n, 0.01, std::vector<ChangeStep>(n, std::nullopt), DriftModel::constant(1.0), 1);
  for (auto _ : state) {
    stepper.step();
    benchmark::DoNotOptimize(stepper.state().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_PathStep)->Arg(1)->Arg(2)->Arg(4);

void BM_DetectorStep(benchmark::State& state) {
  const auto monitoring = state.range(0) ? Monitoring::BrownianBridge : Monitoring::Grid;
  const std::size_t n = 2;
  PathStepper stepper(n, 0.01, std::vector<ChangeStep>(n, std::nullopt), DriftModel::constant(1.0), 1);
  DetectorOptions options;
  options.monitoring = monitoring;
  MultichartCusum detector(n, 1e9, 0.01, options);
  for (auto _ : state) {
    stepper.step();
    detector.step(stepper.increment(), stepper.model_alpha());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
  state.SetLabel(monitoring == Monitoring::Grid ? "grid" : "bridge");
}
BENCHMARK(BM_DetectorStep)->Arg(0)->Arg(1);

void BM_FalseAlarmReplication(benchmark::State& state) {
  auto s = false_alarm_scenario(2, static_cast<double>(state.range(0)));
  s.dt = 0.02;
  std::uint64_t rep = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_replication(s, rep++));
}
BENCHMARK(BM_FalseAlarmReplication)->Arg(4)->Arg(6)->Unit(benchmark::kMicrosecond);

void BM_SolveT(benchmark::State& state) {
  const Grid2D grid{0.2, static_cast<std::size_t>(state.range(0))};
  for (auto _ : state) benchmark::DoNotOptimize(solve_T(grid).corner_value);
}
BENCHMARK(BM_SolveT)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Survival(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(survival_1d(0.2, -1, {}).integral);
}
BENCHMARK(BM_Survival)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
