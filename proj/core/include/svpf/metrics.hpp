#ifndef SVPF_METRICS_HPP
#define SVPF_METRICS_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "svpf/sparse_gp.hpp"

namespace svpf {

struct TransitionPair {
  double previous = 0.0;
  double current = 0.0;
};

/// Consecutive state pairs (x_{t-1}, x_t) of a state sequence.
std::vector<TransitionPair> transition_pairs(std::span<const double> states);

/// Mean squared error of the predictive mean against x_t.
double test_mse(const SparseGPModel& dyn, std::span<const TransitionPair> test);

/// Mean log N(x_t; predictive mean, predictive variance).
double test_mll(const SparseGPModel& dyn, std::span<const TransitionPair> test);

inline constexpr double kTrackingMseFloorDb = -120.0;

/// 10 log10(sum (estimate - truth)^2 / T), floored at `floor_db`.
double tracking_mse_db(std::span<const double> estimates, std::span<const double> truth,
                       double floor_db = kTrackingMseFloorDb);

/// Log-density of [f(x*_1) .. f(x*_n)] on a uniform grid over [lo, hi] under the
/// model's joint predictive. Values in different blocks of `block_size` grid
/// points are treated as independent given u, so the covariance is
/// blockdiag(K - Q + noise I) + A^T S A with A = K_LL^{-1} K_L*.
double groundtruth_likelihood(const SparseGPModel& dyn, const std::function<double(double)>& truth,
                              std::size_t n_points = 10000, std::size_t block_size = 500,
                              double lo = 0.0, double hi = 1.0);

/// Same block model evaluated at arbitrary points by forming the dense covariance.
double groundtruth_likelihood_dense(const SparseGPModel& dyn, std::span<const double> points,
                                    std::span<const double> values, std::size_t block_size);

struct CurvePoint {
  double x = 0.0;
  double y = 0.0;
};

/// For each query, the mean y of the k points nearest in x (ties: lower index first).
std::vector<double> knn_average(std::span<const CurvePoint> points, std::size_t k,
                                std::span<const double> queries);

/// knn_average evaluated at each data point's own x.
std::vector<double> knn_average(std::span<const CurvePoint> points, std::size_t k);

}  // namespace svpf

#endif  // SVPF_METRICS_HPP
