// Serial reference vs OpenMP kernels on the per-sample loss/gradient reduction.

#include <array>
#include <cstddef>

#include <benchmark/benchmark.h>

#include "lyacert/kernels.hpp"
#include "lyacert/learner.hpp"
#include "lyacert/synth.hpp"

namespace {

using namespace lyacert;

UniformTrajectory oscillator(std::size_t samples) {
  const double dt = 0.01;
  const auto system = LtiSystem::damped_oscillator(0.05, 1.0);
  Vector xi0(2);
  xi0 << 1.0, 0.0;
  const auto raw = add_noise(simulate(system, xi0, dt * static_cast<double>(samples + 1), dt), {0.01, 1});
  return differentiate(raw, dt);
}

template <class Objective>
void run(benchmark::State& state, const Objective& objective, bool parallel) {
  auto term = [&](std::size_t k, std::span<double> g) { return objective.loss_grad(k, g); };
  for (auto _ : state) {
    auto out = parallel ? kernels::parallel::mean_loss_grad(objective.samples(), objective.dim(), term)
                        : kernels::serial::mean_loss_grad(objective.samples(), objective.dim(), term);
    benchmark::DoNotOptimize(out.loss);
    benchmark::DoNotOptimize(out.grad.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * objective.samples()));
}

void constant_grad(benchmark::State& state, bool parallel) {
  const auto traj = oscillator(static_cast<std::size_t>(state.range(0)));
  const auto params = CholeskyParams::initial(2, 0);
  run(state, ConstantObjective(params, traj, 1e-3), parallel);
}

void mlp_grad(benchmark::State& state, bool parallel) {
  const auto traj = oscillator(static_cast<std::size_t>(state.range(0)));
  const std::array<std::size_t, 1> hidden{32};
  const auto params = MlpParams::initial(2, hidden, 0);
  run(state, MlpObjective(params, traj, 1e-3), parallel);
}

}  // namespace

BENCHMARK_CAPTURE(constant_grad, serial, false)->RangeMultiplier(10)->Range(1000, 100000)->UseRealTime();
BENCHMARK_CAPTURE(constant_grad, parallel, true)->RangeMultiplier(10)->Range(1000, 100000)->UseRealTime();
BENCHMARK_CAPTURE(mlp_grad, serial, false)->RangeMultiplier(10)->Range(1000, 100000)->UseRealTime();
BENCHMARK_CAPTURE(mlp_grad, parallel, true)->RangeMultiplier(10)->Range(1000, 100000)->UseRealTime();

BENCHMARK_MAIN();
