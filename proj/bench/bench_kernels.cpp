#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "htrt/integrator.hpp"
#include "htrt/mesh_dg.hpp"

using namespace htrt;

namespace {

const Closure& closure_h22() {
  static const Closure closure(2, 2);
  return closure;
}

DgField smooth_field(int cells) {
  const Closure& closure = closure_h22();
  DgField field(Mesh1D(0.0, 1.0, cells), closure.size());
  const PhysicalConstants k;
  for (int i = 0; i < cells; ++i) {
    for (int node = 0; node < 2; ++node) {
      const double z = field.mesh().node(i, node);
      const double level = 0.5 * k.a * k.c * (1.2 + std::sin(12.0 * z));
      auto u = field.at(i, node);
      for (int j = 0; j < closure.bands(); ++j) {
        u[j * closure.block_size()] = level * closure.delta_mu();
        u[j * closure.block_size() + 1] = 0.1 * level * std::cos(40.0 * z);
      }
      field.theta(i, node) = 0.5 + 0.2 * std::cos(7.0 * z);
    }
  }
  return field;
}

const BoundarySpec kBoundaries{BoundaryCondition::vacuum(),
                               BoundaryCondition::reflective()};

void BM_StreamingParallel(benchmark::State& state) {
  const DgField field = smooth_field(static_cast<int>(state.range(0)));
  StreamingOperator op(closure_h22(), kBoundaries);
  std::vector<double> rhs(field.moment_data().size());
  for (auto _ : state) {
    op.apply(field, rhs);
    benchmark::DoNotOptimize(rhs.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_StreamingSerial(benchmark::State& state) {
  const DgField field = smooth_field(static_cast<int>(state.range(0)));
  std::vector<double> rhs(field.moment_data().size());
  for (auto _ : state) {
    reference::streaming_rhs(field, kBoundaries, closure_h22(), rhs);
    benchmark::DoNotOptimize(rhs.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LimiterParallel(benchmark::State& state) {
  const DgField source = smooth_field(static_cast<int>(state.range(0)));
  DgField field = source;
  for (auto _ : state) {
    state.PauseTiming();
    field.moment_data() = source.moment_data();
    state.ResumeTiming();
    limit(field, kBoundaries, closure_h22(), 2.0);
    benchmark::DoNotOptimize(field.moment_data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_LimiterSerial(benchmark::State& state) {
  const DgField source = smooth_field(static_cast<int>(state.range(0)));
  DgField field = source;
  for (auto _ : state) {
    state.PauseTiming();
    field.moment_data() = source.moment_data();
    state.ResumeTiming();
    reference::limit(field, kBoundaries, closure_h22(), 2.0);
    benchmark::DoNotOptimize(field.moment_data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void step_benchmark(benchmark::State& state, Execution execution) {
  DgField field = smooth_field(static_cast<int>(state.range(0)));
  const MaterialModel material{OpacityModel::power_law(3.0),
                               HeatCapacityModel::constant(0.3e16)};
  SemiImplicitStepper stepper(closure_h22(), kBoundaries, material, {}, {}, {},
                              execution);
  const double dt = stepper.stable_dt(field.mesh());
  double t = 0.0;
  for (auto _ : state) {
    stepper.step(field, t, dt);
    t += dt;
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_StepParallel(benchmark::State& state) {
  step_benchmark(state, Execution::parallel);
}

void BM_StepSerial(benchmark::State& state) {
  step_benchmark(state, Execution::serial);
}

}  // namespace

BENCHMARK(BM_StreamingParallel)->RangeMultiplier(4)->Range(256, 65536);
BENCHMARK(BM_StreamingSerial)->RangeMultiplier(4)->Range(256, 65536);
BENCHMARK(BM_LimiterParallel)->RangeMultiplier(4)->Range(256, 65536);
BENCHMARK(BM_LimiterSerial)->RangeMultiplier(4)->Range(256, 65536);
BENCHMARK(BM_StepParallel)->RangeMultiplier(4)->Range(256, 65536);
BENCHMARK(BM_StepSerial)->RangeMultiplier(4)->Range(256, 65536);

BENCHMARK_MAIN();
