#include "svpf/identification.hpp"

#include <cmath>

#include "svpf/error.hpp"

namespace svpf {

double InitialDistribution::sample(Rng& rng) const {
  if (kind == Kind::Uniform) return rng.uniform(a, b);
  return rng.normal(a, std::sqrt(std::max(b, kMinPredictiveVariance)));
}

void InitialDistribution::validate() const {
  if (!std::isfinite(a) || !std::isfinite(b)) throw InvalidArgument("initial distribution parameters must be finite");
  if (kind == Kind::Uniform && !(b > a)) throw InvalidArgument("uniform initial distribution needs hi > lo");
  if (kind == Kind::Gaussian && !(b >= 0.0)) throw InvalidArgument("Gaussian initial variance must be >= 0");
}

SparseGPModel ModelInit::build() const {
  const InducingSet z = InducingSet::grid(grid_lo, grid_hi, grid_size);
  KernelParams k = kernel;
  if (k.lengthscale <= 0.0) k.lengthscale = 0.1 * (grid_hi - grid_lo);
  return SparseGPModel::at_prior(k, mean, noise_var, z);
}

void InitConfig::validate() const {
  initial.validate();
  filter.validate();
  optimizer.validate();
  measurement.validate();
  if (inner_steps == 0) throw InvalidArgument("inner_steps must be at least 1");
  if (!(elbo_scale > 0.0)) throw InvalidArgument("elbo scale must be positive");
}

ParticleSet draw_initial_particles(const InitConfig& config, Rng& rng) {
  std::vector<double> states(config.filter.particles);
  for (double& x : states) x = config.initial.sample(rng);
  return ParticleSet::uniform(std::move(states));
}

IdentState init(const InitConfig& config, Rng& rng) {
  config.validate();
  SparseGPModel dyn = config.model.build();
  ParticleSet particles = draw_initial_particles(config, rng);
  return IdentState{config, std::move(particles), std::move(dyn), OptimizerState{0, config.optimizer}, 0};
}

StepOutcome step(const IdentState& s, double z, Rng& rng) {
  const FilterStepResult f = filter_step(s.particles, s.dyn, z, s.config.measurement, s.config.filter, rng);

  StepOutcome out{s, f.estimate, {}, 0.0, f.degenerate};
  out.pairs.inputs = f.resampled.previous;
  out.pairs.targets = f.resampled.current;

  SparseGPModel dyn = s.dyn;
  OptimizerState opt = s.opt;
  for (std::size_t k = 0; k < s.config.inner_steps; ++k) {
    const ElboResult bound = elbo_with_grad(dyn, out.pairs, s.config.elbo_scale);
    if (k == 0) out.elbo = bound.value;
    auto [next_dyn, next_opt] = sgd_step(dyn, bound.grad, opt);
    dyn = std::move(next_dyn);
    opt = next_opt;
  }

  out.state.particles = f.resampled;
  out.state.dyn = std::move(dyn);
  out.state.opt = opt;
  out.state.t = s.t + 1;
  return out;
}

TrajectoryRun run_trajectory(const IdentState& s, std::span<const double> measurements, Rng& rng) {
  TrajectoryRun run{s, {}, {}};
  if (measurements.empty()) return run;
  run.state.particles = draw_initial_particles(s.config, rng);
  run.estimates.reserve(measurements.size());
  run.elbos.reserve(measurements.size());
  for (double z : measurements) {
    StepOutcome o = step(run.state, z, rng);
    run.estimates.push_back(o.estimate);
    run.elbos.push_back(o.elbo);
    run.state = std::move(o.state);
  }
  return run;
}

}  // namespace svpf
