// Particle sweep throughput: OpenMP/SIMD kernels vs the serial reference.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "varsmc/data.hpp"
#include "varsmc/kernels.hpp"

using namespace varsmc;

namespace {

struct Fixture {
  SyntheticMarket market;
  HarInputs inputs;
  std::vector<rnn::ParamVector> particles;

  Fixture(std::size_t days, std::size_t m) : market(generate_synthetic_market(11, days)) {
    inputs = build_har_inputs(market.series);
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd(0.0, 0.1);
    particles.resize(m);
    for (auto& p : particles)
      for (double& v : p) v = nd(gen);
  }
};

void sweep(benchmark::State& state, kernels::Backend backend) {
  const auto days = static_cast<std::size_t>(state.range(0));
  const auto m = static_cast<std::size_t>(state.range(1));
  Fixture f(days, m);
  const kernels::LossProblem pb{&f.inputs, f.market.series.returns,
                                {rnn::first_target_day(f.inputs), days}, 0.025};
  kernels::SweepOutput out;
  for (auto _ : state) {
    kernels::sweep_loss(f.particles, pb, out, backend);
    benchmark::DoNotOptimize(out.loss.data());
  }
  state.counters["particle_days/s"] = benchmark::Counter(
      static_cast<double>(m * (days - pb.range.first)), benchmark::Counter::kIsIterationInvariantRate);
}

void step(benchmark::State& state, kernels::Backend backend) {
  const auto m = static_cast<std::size_t>(state.range(0));
  Fixture f(500, m);
  std::vector<rnn::HiddenState> hidden(m);
  std::vector<double> q(m);
  std::size_t t = 100;
  for (auto _ : state) {
    kernels::step_particles(f.particles, f.inputs, t, hidden, q, backend);
    benchmark::DoNotOptimize(q.data());
    t = t + 1 < 499 ? t + 1 : 100;
  }
}

void BM_SweepParallel(benchmark::State& s) { sweep(s, kernels::Backend::parallel); }
void BM_SweepSerial(benchmark::State& s) { sweep(s, kernels::Backend::serial); }
void BM_StepParallel(benchmark::State& s) { step(s, kernels::Backend::parallel); }
void BM_StepSerial(benchmark::State& s) { step(s, kernels::Backend::serial); }

}  // namespace

BENCHMARK(BM_SweepParallel)->Args({2000, 500})->Args({2000, 2000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SweepSerial)->Args({2000, 500})->Args({2000, 2000})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_StepParallel)->Arg(2000);
BENCHMARK(BM_StepSerial)->Arg(2000);

BENCHMARK_MAIN();
