#ifndef SVPF_PARTICLE_FILTER_HPP
#define SVPF_PARTICLE_FILTER_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "svpf/error.hpp"
#include "svpf/random.hpp"
#include "svpf/sparse_gp.hpp"

namespace svpf {

/// Lag-1 joint particle (x_t, x_{t-1}).
struct ParticlePair {
  double current = 0.0;
  double previous = 0.0;
};

/// N weighted lag-1 particles, stored column-wise.
struct ParticleSet {
  std::vector<double> current;
  std::vector<double> previous;
  std::vector<double> weights;

  std::size_t size() const { return current.size(); }
  ParticlePair pair(std::size_t i) const { return {current[i], previous[i]}; }

  /// N copies of x with x_prev = x_curr and uniform weights.
  static ParticleSet uniform(std::vector<double> states);

  /// Throws InvalidArgument unless sizes agree, N >= 2 and all entries are finite
  /// with non-negative weights.
  void validate() const;

  friend bool operator==(const ParticleSet&, const ParticleSet&) = default;
};

/// z = g(x) + nu, nu ~ N(0, noise_var). An empty `g` is the identity.
struct MeasurementModel {
  std::function<double(double)> g;
  double noise_var = 1.0;

  double observe(double x) const { return g ? g(x) : x; }
  double log_likelihood(double z, double x) const;
  void validate() const;
};

/// Known linear-Gaussian transition x_t = slope * x_{t-1} + intercept + N(0, noise_var).
struct LinearGaussianTransition {
  double slope = 1.0;
  double intercept = 0.0;
  double noise_var = 1.0;
};

Predictions predict(const LinearGaussianTransition& transition, std::span<const double> xs);

/// Anything that yields a Gaussian predictive p(x_t | x_{t-1}) for a batch of inputs.
template <class T>
concept TransitionModel = requires(const T& model, std::span<const double> xs) {
  { predict(model, xs) } -> std::same_as<Predictions>;
};

/// Floor on sampled predictive variances.
inline constexpr double kMinPredictiveVariance = 1e-300;

/// Draws x_t ~ N(predict(x_{t-1})) for every particle; the old x_curr becomes x_prev.
template <TransitionModel Model>
ParticleSet propagate(const ParticleSet& ps, const Model& dynamics, Rng& rng) {
  const Predictions pred = predict(dynamics, std::span<const double>(ps.current));
  ParticleSet out;
  out.previous = ps.current;
  out.weights = ps.weights;
  out.current.resize(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const auto idx = static_cast<Eigen::Index>(i);
    const double sd = std::sqrt(std::max(pred.variance(idx), kMinPredictiveVariance));
    out.current[i] = rng.normal(pred.mean(idx), sd);
  }
  return out;
}

struct ReweightResult {
  ParticleSet particles;
  /// Every weighted likelihood vanished; weights were reset to uniform.
  bool degenerate = false;
};

/// Multiplies each weight by p(z | x_curr) in log space and normalizes.
ReweightResult reweight(const ParticleSet& ps, double z, const MeasurementModel& mm);

/// Effective sample size 1 / sum(w^2) of normalized weights.
double ess(const ParticleSet& ps);

/// Weighted mean of x_curr.
double estimate(const ParticleSet& ps);

enum class ResampleScheme { Systematic, Multinomial };

/// Ancestor indices (sorted ascending) of `count` equally weighted draws.
std::vector<std::size_t> resample_indices(std::span<const double> weights, std::size_t count,
                                          ResampleScheme scheme, Rng& rng);

/// Replaces the weighted set by N equally weighted pairs. With the systematic
/// scheme each pair i is replicated floor(N w_i) or ceil(N w_i) times, which
/// minimizes sum_i w_i log(N w_i / eta_i) over integer replication counts.
ParticleSet resample_minkl(const ParticleSet& ps, Rng& rng,
                           ResampleScheme scheme = ResampleScheme::Systematic);

/// KL(p || q) between weighted particles and their equally weighted replication counts.
double resampling_kl(std::span<const double> weights, std::span<const std::size_t> counts);

struct FilterConfig {
  std::size_t particles = 500;
  /// Resample before propagation when ESS < ess_fraction * N.
  double ess_fraction = 0.5;
  ResampleScheme scheme = ResampleScheme::Systematic;

  void validate() const;
};

struct FilterStepResult {
  /// Weighted set after the measurement update.
  ParticleSet weighted;
  /// Equally weighted pairs that survive into the next step.
  ParticleSet resampled;
  double estimate = 0.0;
  double ess = 0.0;
  bool resampled_before_propagation = false;
  bool degenerate = false;
};

/// One SIR iteration: optional ESS-gated resample, propagate, reweight, resample.
template <TransitionModel Model>
FilterStepResult filter_step(const ParticleSet& ps, const Model& dynamics, double z,
                             const MeasurementModel& mm, const FilterConfig& config, Rng& rng) {
  if (!std::isfinite(z)) throw InvalidArgument("measurement is not finite");
  FilterStepResult out;
  ParticleSet start = ps;
  if (ess(ps) < config.ess_fraction * static_cast<double>(ps.size())) {
    start = resample_minkl(ps, rng, config.scheme);
    out.resampled_before_propagation = true;
  }
  ReweightResult rw = reweight(propagate(start, dynamics, rng), z, mm);
  out.degenerate = rw.degenerate;
  out.weighted = std::move(rw.particles);
  out.estimate = estimate(out.weighted);
  out.ess = ess(out.weighted);
  out.resampled = resample_minkl(out.weighted, rng, config.scheme);
  return out;
}

}  // namespace svpf

#endif  // SVPF_PARTICLE_FILTER_HPP
