#include <benchmark/benchmark.h>

#include <random>

#include "cestrade/participation.hpp"
#include "cestrade/scenario.hpp"
#include "cestrade/stackelberg.hpp"

using namespace cestrade;

namespace {

Scenario fixture(const char* name) {
  return load_scenario(std::filesystem::path(CESTRADE_DATA_DIR) / name / "config.json");
}

SlotContext random_context(std::mt19937_64& rng, int players) {
  auto draw = [&rng](double lo, double hi) {
    return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
  };
  SlotContext ctx;
  ctx.phi = draw(0.01, 1.0);
  ctx.delta = draw(0.0, 0.5);
  ctx.ces_price = draw(-1.0, 1.0);
  ctx.operator_trade = draw(-5.0, 5.0);
  ctx.background_load = draw(0.0, 10.0);
  for (int k = 0; k < players; ++k) {
    const double s = draw(-5.0, 5.0);
    ctx.participants.push_back({k + 1, s, trade_box(s)});
  }
  return ctx;
}

void BM_ProjectNash(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::vector<SlotContext> contexts;
  for (int i = 0; i < 64; ++i)
    contexts.push_back(random_context(rng, static_cast<int>(state.range(0))));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(project_nash(contexts[i++ % contexts.size()]));
  }
}
BENCHMARK(BM_ProjectNash)->Arg(2)->Arg(4)->Arg(6);

void BM_ChargeTrajectory(benchmark::State& state) {
  BatteryParams battery{80.0, 20.0, 0.9978, 0.9, 1.1};
  std::vector<double> lplus(24, 1.0), lminus(24, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(charge_trajectory(battery, lplus, lminus));
}
BENCHMARK(BM_ChargeTrajectory);

void BM_SolveLeaderDay(benchmark::State& state) {
  const auto s = fixture("default24");
  const StartProfile h{1, 12, 17, 1, 12, 17};
  for (auto _ : state) benchmark::DoNotOptimize(solve_leader(s, h));
}
BENCHMARK(BM_SolveLeaderDay)->Unit(benchmark::kMillisecond);

void BM_SolveStackelbergDay(benchmark::State& state) {
  const auto s = fixture("default24");
  const StartProfile h{1, 12, 17, 1, 12, 17};
  for (auto _ : state) benchmark::DoNotOptimize(solve_stackelberg(s, h));
}
BENCHMARK(BM_SolveStackelbergDay)->Unit(benchmark::kMillisecond);

void BM_CostTableSmall(benchmark::State& state) {
  const auto s = fixture("synthetic3");
  for (auto _ : state) benchmark::DoNotOptimize(build_cost_table(s));
}
BENCHMARK(BM_CostTableSmall)->Unit(benchmark::kMillisecond);

void BM_DynamicsIteration(benchmark::State& state) {
  const auto s = fixture("synthetic3");
  const auto table = build_cost_table(s);
  const auto pt = PTParams::constant(0.5, table.participants());
  MixedProfile y = uniform_profile(table);
  int i = 1;
  for (auto _ : state) {
    y = fictitious_step(y, i++, 0.7, table, BehaviorModel::kPt, pt);
    benchmark::DoNotOptimize(y);
  }
}
BENCHMARK(BM_DynamicsIteration);

}  // namespace

BENCHMARK_MAIN();
