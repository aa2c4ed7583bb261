#include <benchmark/benchmark.h>

#include "followup/effects.hpp"
#include "followup/quantifiers.hpp"
#include "followup/sim.hpp"
#include "followup/stability.hpp"

using namespace followup;

namespace {

Snapshot design_snapshot(std::size_t patients) {
  SimConfig config;
  config.max_patients = patients;
  config.cutoff.events = patients * 389 / 1000;
  return snapshot_at_cutoff(simulate_trial(config, 7), config.cutoff);
}

TwoArmSample arms(std::size_t patients) {
  return to_two_arm(design_snapshot(patients), "control", "treatment");
}

void BM_KmFit(benchmark::State& state) {
  const auto s = arms(state.range(0));
  ObservedSample pooled = s.control;
  pooled.insert(pooled.end(), s.treatment.begin(), s.treatment.end());
  for (auto _ : state) benchmark::DoNotOptimize(km_fit(pooled));
  state.SetComplexityN(state.range(0));
}

void BM_Logrank(benchmark::State& state) {
  const auto s = arms(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(logrank(s));
  state.SetComplexityN(state.range(0));
}

void BM_Cox(benchmark::State& state) {
  const auto s = arms(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(cox_two_group(s));
  state.SetComplexityN(state.range(0));
}

void BM_StabilityIndex(benchmark::State& state) {
  const auto s = arms(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(stability_index(s.control));
  state.SetComplexityN(state.range(0));
}

void BM_Quantifiers(benchmark::State& state) {
  const auto snapshot = design_snapshot(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(summarize_all(snapshot));
  state.SetComplexityN(state.range(0));
}

void BM_SimulateAndCut(benchmark::State& state) {
  SimConfig config;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto latent = simulate_trial(config, ++seed);
    benchmark::DoNotOptimize(snapshot_at_cutoff(latent, config.cutoff));
  }
}

}  // namespace

BENCHMARK(BM_KmFit)->RangeMultiplier(4)->Range(256, 16384)->Complexity();
BENCHMARK(BM_Logrank)->RangeMultiplier(4)->Range(256, 16384)->Complexity();
BENCHMARK(BM_Cox)->RangeMultiplier(4)->Range(256, 16384)->Complexity();
BENCHMARK(BM_StabilityIndex)->RangeMultiplier(4)->Range(256, 16384)->Complexity();
BENCHMARK(BM_Quantifiers)->RangeMultiplier(4)->Range(256, 16384)->Complexity();
BENCHMARK(BM_SimulateAndCut);
BENCHMARK_MAIN();
