#include "svpf/particle_filter.hpp"

#include <limits>
#include <numbers>
#include <numeric>

namespace svpf {

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

ParticleSet ParticleSet::uniform(std::vector<double> states) {
  ParticleSet ps;
  ps.previous = states;
  ps.current = std::move(states);
  ps.weights.assign(ps.current.size(), ps.current.empty() ? 0.0 : 1.0 / static_cast<double>(ps.current.size()));
  return ps;
}

void ParticleSet::validate() const {
  if (previous.size() != current.size() || weights.size() != current.size()) {
    throw InvalidArgument("particle arrays differ in length");
  }
  if (current.size() < 2) throw InvalidArgument("a particle set needs at least two particles");
  if (!all_finite(current) || !all_finite(previous) || !all_finite(weights)) {
    throw InvalidArgument("particle set contains non-finite values");
  }
  if (std::any_of(weights.begin(), weights.end(), [](double w) { return w < 0.0; })) {
    throw InvalidArgument("particle weights must be non-negative");
  }
}

double MeasurementModel::log_likelihood(double z, double x) const {
  const double e = z - observe(x);
  return -0.5 * (std::log(2.0 * std::numbers::pi * noise_var) + e * e / noise_var);
}

void MeasurementModel::validate() const {
  if (!(noise_var > 0.0) || !std::isfinite(noise_var)) {
    throw InvalidArgument("measurement noise variance must be positive");
  }
}

Predictions predict(const LinearGaussianTransition& transition, std::span<const double> xs) {
  Predictions out;
  const auto n = static_cast<Eigen::Index>(xs.size());
  out.mean = transition.slope * Eigen::Map<const Eigen::VectorXd>(xs.data(), n).array() + transition.intercept;
  out.variance = Eigen::VectorXd::Constant(n, transition.noise_var);
  return out;
}

ReweightResult reweight(const ParticleSet& ps, double z, const MeasurementModel& mm) {
  ReweightResult out{ps, false};
  auto& w = out.particles.weights;
  const std::size_t n = ps.size();
  std::vector<double> log_w(n);
  double max_log = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    log_w[i] = std::log(ps.weights[i]) + mm.log_likelihood(z, ps.current[i]);
    if (std::isnan(log_w[i])) log_w[i] = -std::numeric_limits<double>::infinity();
    max_log = std::max(max_log, log_w[i]);
  }
  if (!std::isfinite(max_log)) {
    w.assign(n, 1.0 / static_cast<double>(n));
    out.degenerate = true;
    return out;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = std::exp(log_w[i] - max_log);
    total += w[i];
  }
  for (double& wi : w) wi /= total;
  return out;
}

double ess(const ParticleSet& ps) {
  double sum_sq = 0.0;
  for (double w : ps.weights) sum_sq += w * w;
  return 1.0 / sum_sq;
}

double estimate(const ParticleSet& ps) {
  double acc = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) acc += ps.weights[i] * ps.current[i];
  return acc;
}

std::vector<std::size_t> resample_indices(std::span<const double> weights, std::size_t count,
                                          ResampleScheme scheme, Rng& rng) {
  const std::size_t n = weights.size();
  if (n == 0 || count == 0) throw InvalidArgument("cannot resample an empty set");
  std::vector<double> cumulative(n);
  std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
  const double total = cumulative.back();
  if (!(total > 0.0) || !std::isfinite(total)) throw InvalidArgument("resampling weights do not sum to a positive value");

  std::vector<std::size_t> idx(count);
  if (scheme == ResampleScheme::Systematic) {
    // Points (u + k) / count with a single u ~ U(0, 1).
    const double scale = static_cast<double>(count) / total;
    const double u = rng.uniform();
    std::size_t i = 0;
    for (std::size_t k = 0; k < count; ++k) {
      const double point = u + static_cast<double>(k);
      while (i + 1 < n && cumulative[i] * scale <= point) ++i;
      idx[k] = i;
    }
  } else {
    std::vector<double> points(count);
    for (double& p : points) p = rng.uniform(0.0, total);
    std::sort(points.begin(), points.end());
    std::size_t i = 0;
    for (std::size_t k = 0; k < count; ++k) {
      while (i + 1 < n && cumulative[i] <= points[k]) ++i;
      idx[k] = i;
    }
  }
  return idx;
}

ParticleSet resample_minkl(const ParticleSet& ps, Rng& rng, ResampleScheme scheme) {
  const std::size_t n = ps.size();
  const auto idx = resample_indices(ps.weights, n, scheme, rng);
  ParticleSet out;
  out.current.resize(n);
  out.previous.resize(n);
  out.weights.assign(n, 1.0 / static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) {
    out.current[k] = ps.current[idx[k]];
    out.previous[k] = ps.previous[idx[k]];
  }
  return out;
}

double resampling_kl(std::span<const double> weights, std::span<const std::size_t> counts) {
  if (weights.size() != counts.size()) throw InvalidArgument("weights and counts differ in length");
  const double n = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  double kl = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    if (counts[i] == 0) return std::numeric_limits<double>::infinity();
    kl += weights[i] * std::log(n * weights[i] / static_cast<double>(counts[i]));
  }
  return kl;
}

void FilterConfig::validate() const {
  if (particles < 2) throw InvalidArgument("particle filter needs at least two particles");
  if (!(ess_fraction >= 0.0 && ess_fraction <= 1.0)) throw InvalidArgument("ESS fraction must lie in [0, 1]");
}

}  // namespace svpf
