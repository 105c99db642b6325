#include <benchmark/benchmark.h>

#include <memory>

#include "linkdrift/ltc.hpp"
#include "linkdrift/scenario.hpp"
#include "linkdrift/simulator.hpp"
#include "linkdrift/topology.hpp"

using namespace linkdrift;

namespace {

std::shared_ptr<const Topology> euro28() {
  static auto t = std::make_shared<const Topology>(load_topology_file(default_topology_path()));
  return t;
}

void BM_LtcForward(benchmark::State& state) {
  LtcNetwork net;
  net = LtcNetwork(LtcDims{});
  net.initialize(1);
  const std::vector<double> window{0.2, 0.4, 0.3};
  std::vector<double> x(30, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(window, x));
}
BENCHMARK(BM_LtcForward);

void BM_LtcForwardBackward(benchmark::State& state) {
  LtcNetwork net(LtcDims{});
  net.initialize(1);
  const std::vector<double> window{0.2, 0.4, 0.3};
  std::vector<double> grad(net.param_count(), 0.0);
  LtcTape tape;
  for (auto _ : state) {
    std::vector<double> x(30, 0.1);
    const double y = net.forward(window, x, &tape);
    net.backward(tape, y - 0.5, grad);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_LtcForwardBackward);

void BM_KShortestPaths(benchmark::State& state) {
  const auto t = euro28();
  const NodeId s = t->node_id("LIS"), d = t->node_id("ATH");
  for (auto _ : state) benchmark::DoNotOptimize(k_shortest_paths(*t, s, d, 10));
}
BENCHMARK(BM_KShortestPaths);

void BM_SelectLightpath(benchmark::State& state) {
  const auto t = euro28();
  PathCache cache(*t, 10);
  SpectrumGrid grid(t->link_count(), 320);
  Demand d;
  d.s = t->node_id("LON");
  d.t = t->node_id("VIE");
  d.gbps = 250;
  d.holding = 10;
  // Half-full spectrum so first-fit has to scan.
  for (LinkId l = 0; l < t->link_count(); ++l) grid.occupy(std::vector<LinkId>{l}, 0, 160, 1);
  for (auto _ : state) benchmark::DoNotOptimize(select_lightpath(*t, grid, d, cache));
}
BENCHMARK(BM_SelectLightpath);

void BM_SimulationStep(benchmark::State& state) {
  const auto t = euro28();
  ScenarioConfig cfg;
  cfg.traffic.total_load_tbps = 2.8;
  cfg.traffic.steps = 100000;
  auto traffic = std::make_shared<const TrafficModel>(*t, cfg.traffic_config());
  Simulation sim(t, traffic, cfg.sim, cfg.demand_seed());
  sim.state().set_keep_event_log(false);
  sim.run_until(100);  // past the initial fill
  for (auto _ : state) sim.step();
}
BENCHMARK(BM_SimulationStep);

}  // namespace

BENCHMARK_MAIN();
