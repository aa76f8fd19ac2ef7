#ifndef SVPF_SYSTEMS_HPP
#define SVPF_SYSTEMS_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "svpf/identification.hpp"
#include "svpf/random.hpp"

namespace svpf {

/// Kinked benchmark map: x + 1 below 4, 21 - 4x from 4 on.
double testfunc_eval(double x);

/// f(x) = x + piecewise-linear interpolation of offsets b_i at breakpoints a_i.
/// Outside [a_0, a_n] the end offsets are held constant.
struct PiecewiseLinearModel {
  std::vector<double> breakpoints;
  std::vector<double> offsets;

  std::size_t segments() const { return breakpoints.empty() ? 0 : breakpoints.size() - 1; }
  void validate() const;

  friend bool operator==(const PiecewiseLinearModel&, const PiecewiseLinearModel&) = default;
};

double piecewise_eval(const PiecewiseLinearModel& model, double x);

/// Breakpoint spacings ~ U(0.08, 0.15), offset increments ~ N(0, 1e-3),
/// anchored at a_0 = b_0 = 0.
PiecewiseLinearModel sample_random_model(Rng& rng, std::size_t segments = 20);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

struct SystemSpec {
  enum class Dynamics { TestFunction, Piecewise };

  Dynamics dynamics = Dynamics::TestFunction;
  PiecewiseLinearModel piecewise;
  double process_noise_var = 1.0;
  double meas_noise_var = 1.0;
  InitialDistribution initial = InitialDistribution::gaussian(0.0, 1.0);
  std::optional<Interval> domain;

  double transition_mean(double x) const;
  void validate() const;
};

/// states x_0..x_T and measurements z_1..z_T.
struct Trajectory {
  std::vector<double> states;
  std::vector<double> measurements;
  /// The next state left the domain; the sequence stops before it.
  bool truncated = false;

  std::size_t steps() const { return measurements.size(); }
};

/// Simulates up to `steps` transitions. With a domain the run ends just before
/// the first state outside it; if x_0 itself is outside, no states are kept.
Trajectory simulate(const SystemSpec& spec, std::size_t steps, Rng& rng);

}  // namespace svpf

#endif  // SVPF_SYSTEMS_HPP
