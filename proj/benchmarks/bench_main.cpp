#include "efrl/dqn.hpp"
#include "efrl/metrics.hpp"
#include "efrl/solver.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

efrl::VelocityField field(int n) {
  return efrl::init_decaying_turbulence(efrl::GridSpec(n), efrl::peaked_spectrum(10.0), 0.5, 42);
}

void BM_EvolveStep(benchmark::State& state) {
  const auto u = field(static_cast<int>(state.range(0)));
  const auto p = efrl::FluidParams::from_reynolds(4e4, 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(efrl::evolve_step(u, p));
}
BENCHMARK(BM_EvolveStep)->Arg(32)->Arg(64)->Arg(256)->Unit(benchmark::kMicrosecond);

void BM_DnsStep(benchmark::State& state) {
  const auto u = field(static_cast<int>(state.range(0)));
  const auto p = efrl::FluidParams::from_reynolds(4e4, 2.5e-4);
  for (auto _ : state) benchmark::DoNotOptimize(efrl::dns_step(u, p));
}
BENCHMARK(BM_DnsStep)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_DifferentialFilter(benchmark::State& state) {
  const auto u = field(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(efrl::differential_filter(u, 5e-4));
}
BENCHMARK(BM_DifferentialFilter)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_EnergySpectrum(benchmark::State& state) {
  const auto u = field(64);
  for (auto _ : state) benchmark::DoNotOptimize(efrl::energy_spectrum(u));
}
BENCHMARK(BM_EnergySpectrum)->Unit(benchmark::kMicrosecond);

void BM_QForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  const auto params = efrl::MlpParams::random({2 * n * n, 64, 64, efrl::kNumActions}, rng);
  const std::vector<double> obs(static_cast<std::size_t>(2 * n * n), 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(efrl::q_forward(params, obs));
}
BENCHMARK(BM_QForward)->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

void BM_TrainStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto dim = static_cast<std::size_t>(2 * n * n);
  std::mt19937_64 rng(2);
  efrl::AgentConfig cfg;
  auto params = efrl::MlpParams::random({static_cast<int>(dim), 64, 64, efrl::kNumActions}, rng);
  const auto target = params;
  auto adam = efrl::AdamState::for_params(params);
  efrl::ReplayBuffer buffer(1024, dim);
  std::normal_distribution<double> nd(0.0, 1.0);
  efrl::Observation obs(dim);
  for (auto& v : obs) v = nd(rng);
  for (int i = 0; i < 512; ++i) {
    efrl::Observation next(dim);
    for (auto& v : next) v = nd(rng);
    buffer.push({obs, i % efrl::kNumActions, nd(rng), next, false});
    obs = std::move(next);
  }
  for (auto _ : state) benchmark::DoNotOptimize(efrl::train_step(params, adam, buffer, target, cfg, rng));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
