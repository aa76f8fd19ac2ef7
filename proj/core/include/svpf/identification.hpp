#ifndef SVPF_IDENTIFICATION_HPP
#define SVPF_IDENTIFICATION_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "svpf/particle_filter.hpp"
#include "svpf/random.hpp"
#include "svpf/sparse_gp.hpp"

namespace svpf {

/// Initial-state distribution p0: uniform(lo, hi) or Gaussian(mean, variance).
struct InitialDistribution {
  enum class Kind { Uniform, Gaussian };

  Kind kind = Kind::Uniform;
  double a = 0.0;  // lo or mean
  double b = 1.0;  // hi or variance

  static InitialDistribution uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static InitialDistribution gaussian(double mean, double variance) { return {Kind::Gaussian, mean, variance}; }

  double sample(Rng& rng) const;
  void validate() const;

  friend bool operator==(const InitialDistribution&, const InitialDistribution&) = default;
};

/// Prior initialization of the learned transition model.
struct ModelInit {
  KernelParams kernel{1.0, 0.0, MaternOrder::FiveHalves};  // lengthscale <= 0: 0.1 * grid span
  MeanFn mean{MeanKind::Identity};
  double noise_var = 0.1;
  double grid_lo = 0.0;
  double grid_hi = 1.0;
  std::size_t grid_size = 30;

  SparseGPModel build() const;
};

struct InitConfig {
  InitialDistribution initial;
  FilterConfig filter;
  ModelInit model;
  OptimizerConfig optimizer;
  MeasurementModel measurement{{}, 1e-3};
  /// SGD steps taken on each resampled particle batch.
  std::size_t inner_steps = 1;
  /// Multiplier of the data sum in the bound.
  double elbo_scale = 1.0;

  void validate() const;
};

/// Joint recursion state: filter particles plus the current model snapshot.
struct IdentState {
  InitConfig config;
  ParticleSet particles;
  SparseGPModel dyn;
  OptimizerState opt;
  std::uint64_t t = 0;
};

IdentState init(const InitConfig& config, Rng& rng);

/// Redraws the particle cloud from p0 (x_prev = x_curr, uniform weights).
ParticleSet draw_initial_particles(const InitConfig& config, Rng& rng);

struct StepOutcome {
  IdentState state;
  double estimate = 0.0;
  /// Equally weighted (x_{t-1}, x_t) pairs the model was trained on.
  MiniBatch pairs;
  /// Bound evaluated on `pairs` before the update.
  double elbo = 0.0;
  bool degenerate = false;
};

/// One tracker/learner iteration for measurement z. The model used for
/// propagation is the snapshot in `s`; the update lands in the returned state.
StepOutcome step(const IdentState& s, double z, Rng& rng);

struct TrajectoryRun {
  IdentState state;
  std::vector<double> estimates;
  std::vector<double> elbos;
};

/// Feeds one trajectory's measurements. The particle cloud is redrawn from p0
/// first; the model and optimizer carry over. An empty sequence is a no-op.
TrajectoryRun run_trajectory(const IdentState& s, std::span<const double> measurements, Rng& rng);

}  // namespace svpf

#endif  // SVPF_IDENTIFICATION_HPP
