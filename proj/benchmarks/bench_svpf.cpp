#include <vector>

#include <benchmark/benchmark.h>

#include "svpf/identification.hpp"
#include "svpf/particle_filter.hpp"
#include "svpf/sparse_gp.hpp"

using namespace svpf;

namespace {

InitConfig config(std::size_t particles, std::size_t inducing) {
  InitConfig c;
  c.filter.particles = particles;
  c.model.grid_size = inducing;
  c.model.noise_var = 1e-2;
  c.measurement.noise_var = 1e-3;
  return c;
}

MiniBatch batch_of(std::size_t n, Rng& rng) {
  MiniBatch b;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform();
    b.push_back(x, x + 0.1 * rng.normal());
  }
  return b;
}

// One tracker/learner iteration: filter, bound gradient and update.
void BM_IdentStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto l = static_cast<std::size_t>(state.range(1));
  Rng rng(1);
  IdentState s = init(config(n, l), rng);
  double z = 0.5;
  for (auto _ : state) {
    StepOutcome o = step(s, z, rng);
    benchmark::DoNotOptimize(o.estimate);
    s = std::move(o.state);
    z = 0.5 + 0.05 * rng.normal();
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_IdentStep)->ArgsProduct({{100, 500, 2000}, {10, 30, 100}})->Unit(benchmark::kMillisecond);

void BM_ElboGrad(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto l = static_cast<std::size_t>(state.range(1));
  Rng rng(2);
  const SparseGPModel m = config(n, l).model.build();
  const MiniBatch b = batch_of(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(elbo_grad(m, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_ElboGrad)->ArgsProduct({{100, 500, 2000}, {10, 30, 100}})->Unit(benchmark::kMicrosecond);

void BM_Predict(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto l = static_cast<std::size_t>(state.range(1));
  Rng rng(3);
  const SparseGPModel m = config(n, l).model.build();
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(predict(m, std::span<const double>(xs)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Predict)->ArgsProduct({{500, 10000}, {30, 100}})->Unit(benchmark::kMicrosecond);

void BM_FilterStepLinear(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  std::vector<double> xs(n);
  for (auto& x : xs) x = rng.normal();
  ParticleSet ps = ParticleSet::uniform(xs);
  const LinearGaussianTransition dyn{0.9, 0.0, 0.5};
  const MeasurementModel mm{{}, 0.3};
  FilterConfig fc;
  fc.particles = n;
  for (auto _ : state) {
    FilterStepResult r = filter_step(ps, dyn, 0.1 * rng.normal(), mm, fc, rng);
    ps = std::move(r.resampled);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_FilterStepLinear)->Arg(500)->Arg(10000)->Unit(benchmark::kMicrosecond);

void BM_Resample(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(5);
  ParticleSet ps;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ps.current.push_back(rng.normal());
    ps.previous.push_back(rng.normal());
    ps.weights.push_back(rng.uniform());
    total += ps.weights.back();
  }
  for (auto& w : ps.weights) w /= total;
  for (auto _ : state) benchmark::DoNotOptimize(resample_minkl(ps, rng));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Resample)->Arg(500)->Arg(10000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
