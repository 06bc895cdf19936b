#include <benchmark/benchmark.h>

#include "gnrg/optimizer.hpp"

using namespace gnrg;

namespace {

const MlpArchitecture& arch() {
  static const MlpArchitecture a = MlpArchitecture::parse("2-10-10-1");
  return a;
}

TransitionBatch batch(int n) {
  const MountainCar env;
  return collect_transitions(env, sample_states(env, n, 1), mountain_car_velocity_policy, 0.99);
}

void BM_Forward(benchmark::State& state) {
  const ParameterSet p = init_uniform(arch(), 1);
  const Vector x{{-0.5, 0.01}};
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(arch(), p, as_span(x)));
}
BENCHMARK(BM_Forward);

void BM_ResidualJacobian(benchmark::State& state) {
  const ParameterSet p = init_uniform(arch(), 1);
  const TransitionBatch b = batch(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(residual_jacobian(arch(), p, b.states, b.successors, b.gamma));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ResidualJacobian)->Arg(100)->Arg(2000);

void BM_GaussNewtonIteration(benchmark::State& state) {
  const ParameterSet p = init_uniform(arch(), 1);
  const SampledObjective obj(arch(), batch(static_cast<int>(state.range(0))));
  OptimizerConfig cfg;
  cfg.alpha = 1e-2;
  const Vector w = vectorize(p);
  for (auto _ : state) {
    const ObjectiveEvaluation ev = obj.evaluate(p, cfg.method);
    benchmark::DoNotOptimize(descend_step(w, ev, cfg));
  }
}
BENCHMARK(BM_GaussNewtonIteration)->Arg(100)->Arg(2000)->Unit(benchmark::kMillisecond);

void BM_NewtonStep(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix a = Matrix::Random(2 * n, n);
  const Matrix h = a.transpose() * a;
  const Vector g = Vector::Ones(n);
  for (auto _ : state) benchmark::DoNotOptimize(newton_step(h, g, 1e-5));
}
BENCHMARK(BM_NewtonStep)->Arg(151)->Arg(181);

}  // namespace

BENCHMARK_MAIN();
