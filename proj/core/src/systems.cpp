#include "svpf/systems.hpp"

#include <algorithm>
#include <cmath>

#include "svpf/error.hpp"

namespace svpf {

double testfunc_eval(double x) { return x < 4.0 ? x + 1.0 : -4.0 * x + 21.0; }

void PiecewiseLinearModel::validate() const {
  if (breakpoints.size() < 2 || breakpoints.size() != offsets.size()) {
    throw InvalidArgument("piecewise model needs matching breakpoints and offsets (at least two)");
  }
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) throw InvalidArgument("breakpoints must be strictly increasing");
  }
}

double piecewise_eval(const PiecewiseLinearModel& model, double x) {
  const auto& a = model.breakpoints;
  const auto& b = model.offsets;
  if (x <= a.front()) return x + b.front();
  if (x >= a.back()) return x + b.back();
  // Active segment: a[i-1] <= x < a[i].
  const auto i = static_cast<std::size_t>(std::upper_bound(a.begin(), a.end(), x) - a.begin());
  const double slope = (b[i] - b[i - 1]) / (a[i] - a[i - 1]);
  return x + b[i - 1] + slope * (x - a[i - 1]);
}

PiecewiseLinearModel sample_random_model(Rng& rng, std::size_t segments) {
  if (segments == 0) throw InvalidArgument("piecewise model needs at least one segment");
  PiecewiseLinearModel m;
  m.breakpoints.assign(1, 0.0);
  m.offsets.assign(1, 0.0);
  const double offset_sd = std::sqrt(1e-3);
  for (std::size_t i = 0; i < segments; ++i) {
    m.breakpoints.push_back(m.breakpoints.back() + rng.uniform(0.08, 0.15));
    m.offsets.push_back(m.offsets.back() + rng.normal(0.0, offset_sd));
  }
  return m;
}

double SystemSpec::transition_mean(double x) const {
  return dynamics == Dynamics::TestFunction ? testfunc_eval(x) : piecewise_eval(piecewise, x);
}

void SystemSpec::validate() const {
  if (!(process_noise_var > 0.0) || !(meas_noise_var > 0.0)) {
    throw InvalidArgument("noise variances must be positive");
  }
  if (dynamics == Dynamics::Piecewise) piecewise.validate();
  initial.validate();
  if (domain && !(domain->hi > domain->lo)) throw InvalidArgument("domain needs hi > lo");
}

Trajectory simulate(const SystemSpec& spec, std::size_t steps, Rng& rng) {
  if (steps == 0) throw InvalidArgument("simulate needs at least one step");
  spec.validate();
  const double process_sd = std::sqrt(spec.process_noise_var);
  const double meas_sd = std::sqrt(spec.meas_noise_var);

  Trajectory traj;
  const double x0 = spec.initial.sample(rng);
  if (spec.domain && !spec.domain->contains(x0)) {
    traj.truncated = true;
    return traj;
  }
  traj.states.push_back(x0);
  for (std::size_t t = 0; t < steps; ++t) {
    const double x = spec.transition_mean(traj.states.back()) + process_sd * rng.normal();
    const double z = x + meas_sd * rng.normal();
    if (spec.domain && !spec.domain->contains(x)) {
      traj.truncated = true;
      break;
    }
    traj.states.push_back(x);
    traj.measurements.push_back(z);
  }
  return traj;
}

}  // namespace svpf
