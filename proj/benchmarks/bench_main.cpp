#include <benchmark/benchmark.h>

#include "uavrelay/dqn.hpp"
#include "uavrelay/harness.hpp"
#include "uavrelay/oracle.hpp"

namespace {

using namespace uavrelay;

ScenarioConfig scenario(int m, int n, int l, int k, int horizon) {
  ScenarioConfig cfg;
  cfg.num_devices = m;
  cfg.num_uavs = n;
  cfg.sample_channels = l;
  cfg.update_channels = k;
  cfg.horizon = horizon;
  cfg.sample_loss.assign(static_cast<std::size_t>(m), 0.2);
  cfg.update_loss.assign(static_cast<std::size_t>(m), 0.2);
  cfg.association = AssociationMode::ExplicitEqualSplit;
  cfg.seed = 1;
  return cfg;
}

void BM_EnvStep(benchmark::State& state) {
  const auto cfg = scenario(static_cast<int>(state.range(0)), 2, 1, 1, 10);
  Rng topo_rng(cfg.seed);
  Env env(cfg, build_topology(cfg, topo_rng));
  Rng rng(7);
  NetworkState s = env.reset();
  const PolicyView view = make_view(s, env);
  const JointAction action = maf_mad(view);
  for (auto _ : state) {
    auto out = env.step(s, action, rng);
    benchmark::DoNotOptimize(out.reward);
  }
}
BENCHMARK(BM_EnvStep)->Arg(12)->Arg(60);

void BM_MafMadDecide(benchmark::State& state) {
  const auto cfg = scenario(static_cast<int>(state.range(0)), 3, 2, 2, 10);
  Rng topo_rng(cfg.seed);
  Env env(cfg, build_topology(cfg, topo_rng));
  NetworkState s = env.reset();
  Rng rng(7);
  for (int t = 0; t < 5; ++t) s = env.step(s, maf_mad(make_view(s, env)), rng).next;
  const PolicyView view = make_view(s, env);
  for (auto _ : state) {
    auto action = maf_mad(view);
    benchmark::DoNotOptimize(action.update_set.data());
  }
}
BENCHMARK(BM_MafMadDecide)->Arg(12)->Arg(60);

void BM_ActionUnrank(benchmark::State& state) {
  const auto cfg = scenario(12, 2, 2, 2, 10);
  Rng topo_rng(cfg.seed);
  const Topology topo = build_topology(cfg, topo_rng);
  const ActionSpace space(topo, 2, 2);
  std::uint64_t i = 0;
  for (auto _ : state) {
    auto action = space.action_at(i);
    benchmark::DoNotOptimize(action.update_set.data());
    i = (i + 1) % space.size();
  }
}
BENCHMARK(BM_ActionUnrank);

void BM_MlpTrainStep(benchmark::State& state) {
  Rng rng(3);
  Mlp net = Mlp::glorot({9, 64, 64, 16}, rng);
  AdamState adam(net.parameter_count(), {});
  std::vector<QSample> batch(16);
  for (auto& s : batch) {
    s.x.resize(9);
    for (auto& v : s.x) v = rng.uniform01();
    s.action = rng.uniform_int(0, 15);
    s.target = -rng.uniform01() * 100.0;
  }
  for (auto _ : state) {
    const double loss = backward_and_step(net, adam, batch);
    benchmark::DoNotOptimize(loss);
  }
}
BENCHMARK(BM_MlpTrainStep);

void BM_OracleTiny(benchmark::State& state) {
  auto cfg = scenario(2, 1, 1, 1, 3);
  cfg.sample_loss.assign(2, 0.0);
  cfg.update_loss.assign(2, 0.0);
  Rng topo_rng(cfg.seed);
  const Topology topo = build_topology(cfg, topo_rng);
  for (auto _ : state) {
    auto result = optimal_cost(cfg, topo);
    benchmark::DoNotOptimize(result.cost);
  }
}
BENCHMARK(BM_OracleTiny);

}  // namespace

BENCHMARK_MAIN();
