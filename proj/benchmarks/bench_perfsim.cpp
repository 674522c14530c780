#include <benchmark/benchmark.h>

#include "kraken/model/presets.hpp"
#include "kraken/perfsim/comparison.hpp"
#include "kraken/perfsim/schedule.hpp"
#include "kraken/perfsim/simulator.hpp"

namespace {

using namespace kraken;

void BM_SimulateKraken175B(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const perfsim::Calibration cal = perfsim::default_calibration();
  const perfsim::Topology topo{n, cal.link_bw, cal.base_latency};
  const auto sched = perfsim::build_schedule(engine_config(engine_preset("175B"), Arch::Kraken, n), topo, 2048);
  for (auto _ : state) benchmark::DoNotOptimize(perfsim::simulate(sched, topo, cal.device).ttft);
}
BENCHMARK(BM_SimulateKraken175B)->Arg(4)->Arg(8);

void BM_ReferenceGrid(benchmark::State& state) {
  const auto grid = perfsim::reference_grid();
  for (auto _ : state)
    benchmark::DoNotOptimize(perfsim::ttft_comparison(grid, perfsim::default_calibration()));
}
BENCHMARK(BM_ReferenceGrid)->Unit(benchmark::kMillisecond);

}  // namespace
