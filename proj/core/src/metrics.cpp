#include "svpf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "svpf/error.hpp"

namespace svpf {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

std::vector<double> previous_states(std::span<const TransitionPair> test) {
  std::vector<double> xs(test.size());
  std::transform(test.begin(), test.end(), xs.begin(), [](const TransitionPair& p) { return p.previous; });
  return xs;
}

// Whitened cross-covariance W = L_K^{-1} K_LX and U = chol(S)^T K_LL^{-1} K_LX.
struct Projection {
  MatrixXd w;
  MatrixXd u;
  VectorXd mean;
};

Projection project(const SparseGPModel& dyn, std::span<const double> xs) {
  const auto& lk = dyn.prior_chol();
  const MatrixXd k_lx = kernel_matrix(dyn.kernel(), dyn.inducing().points, xs);
  Projection p;
  p.w = lk.triangularView<Eigen::Lower>().solve(k_lx);
  const MatrixXd a = lk.transpose().triangularView<Eigen::Upper>().solve(p.w);
  p.u = dyn.q().chol.transpose() * a;
  const VectorXd alpha = lk.transpose().triangularView<Eigen::Upper>().solve(
      lk.triangularView<Eigen::Lower>().solve(dyn.q().mean - dyn.prior_mean()));
  p.mean = dyn.mean_fn()(xs) + k_lx.transpose() * alpha;
  return p;
}

MatrixXd block_cov(const SparseGPModel& dyn, std::span<const double> xs, const MatrixXd& w_block) {
  MatrixXd c = kernel_matrix(dyn.kernel(), xs, xs) - w_block.transpose() * w_block;
  c.diagonal().array() += dyn.noise_var();
  return c;
}

}  // namespace

std::vector<TransitionPair> transition_pairs(std::span<const double> states) {
  std::vector<TransitionPair> pairs;
  for (std::size_t t = 1; t < states.size(); ++t) pairs.push_back({states[t - 1], states[t]});
  return pairs;
}

double test_mse(const SparseGPModel& dyn, std::span<const TransitionPair> test) {
  if (test.empty()) throw InvalidArgument("test set is empty");
  const auto xs = previous_states(test);
  const Predictions pred = predict(dyn, xs);
  double acc = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const double e = test[i].current - pred.mean(static_cast<Index>(i));
    acc += e * e;
  }
  return acc / static_cast<double>(test.size());
}

double test_mll(const SparseGPModel& dyn, std::span<const TransitionPair> test) {
  if (test.empty()) throw InvalidArgument("test set is empty");
  const auto xs = previous_states(test);
  const Predictions pred = predict(dyn, xs);
  double acc = 0.0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto idx = static_cast<Index>(i);
    const double e = test[i].current - pred.mean(idx);
    acc += -0.5 * (kLog2Pi + std::log(pred.variance(idx)) + e * e / pred.variance(idx));
  }
  return acc / static_cast<double>(test.size());
}

double tracking_mse_db(std::span<const double> estimates, std::span<const double> truth, double floor_db) {
  if (estimates.size() != truth.size()) throw InvalidArgument("estimate and truth sequences differ in length");
  if (estimates.empty()) throw InvalidArgument("tracking MSE needs at least one step");
  double acc = 0.0;
  for (std::size_t t = 0; t < truth.size(); ++t) {
    const double e = estimates[t] - truth[t];
    acc += e * e;
  }
  const double mse = acc / static_cast<double>(truth.size());
  if (!(mse > 0.0)) return floor_db;
  return std::max(10.0 * std::log10(mse), floor_db);
}

double groundtruth_likelihood(const SparseGPModel& dyn, const std::function<double(double)>& truth,
                              std::size_t n_points, std::size_t block_size, double lo, double hi) {
  if (n_points == 0 || block_size == 0) throw InvalidArgument("likelihood grid needs at least one point");
  std::vector<double> xs(n_points);
  std::vector<double> ys(n_points);
  const double cell = (hi - lo) / static_cast<double>(n_points);
  for (std::size_t j = 0; j < n_points; ++j) {
    xs[j] = lo + (static_cast<double>(j) + 0.5) * cell;
    ys[j] = truth(xs[j]);
  }

  const Projection p = project(dyn, xs);
  const auto n = static_cast<Index>(n_points);
  const Index l = p.u.rows();
  const VectorXd r = Eigen::Map<const VectorXd>(ys.data(), n) - p.mean;

  // Woodbury: Sigma = D + U^T U with block-diagonal D.
  VectorXd d_inv_r(n);
  MatrixXd d_inv_ut(n, l);
  double log_det_d = 0.0;
  for (std::size_t start = 0; start < n_points; start += block_size) {
    const std::size_t len = std::min(block_size, n_points - start);
    const auto s = static_cast<Index>(start);
    const auto m = static_cast<Index>(len);
    const MatrixXd c = block_cov(dyn, std::span<const double>(xs).subspan(start, len), p.w.middleCols(s, m));
    Eigen::LLT<MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) throw ConditioningError("block predictive covariance is not positive definite");
    log_det_d += 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    d_inv_r.segment(s, m) = llt.solve(r.segment(s, m));
    d_inv_ut.middleRows(s, m) = llt.solve(p.u.middleCols(s, m).transpose());
  }
  MatrixXd inner = MatrixXd::Identity(l, l) + p.u * d_inv_ut;
  Eigen::LLT<MatrixXd> inner_llt(inner);
  if (inner_llt.info() != Eigen::Success) throw ConditioningError("low-rank correction is not positive definite");
  const VectorXd ud = p.u * d_inv_r;
  const double quad = r.dot(d_inv_r) - ud.dot(inner_llt.solve(ud));
  const double log_det = log_det_d + 2.0 * inner_llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (quad + log_det + static_cast<double>(n) * kLog2Pi);
}

double groundtruth_likelihood_dense(const SparseGPModel& dyn, std::span<const double> points,
                                    std::span<const double> values, std::size_t block_size) {
  if (points.size() != values.size() || points.empty()) throw InvalidArgument("points and values must match");
  const Projection p = project(dyn, points);
  const auto n = static_cast<Index>(points.size());
  MatrixXd cov = p.u.transpose() * p.u;
  for (std::size_t start = 0; start < points.size(); start += block_size) {
    const std::size_t len = std::min(block_size, points.size() - start);
    const auto s = static_cast<Index>(start);
    const auto m = static_cast<Index>(len);
    cov.block(s, s, m, m) += block_cov(dyn, points.subspan(start, len), p.w.middleCols(s, m));
  }
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) throw ConditioningError("dense predictive covariance is not positive definite");
  const VectorXd r = Eigen::Map<const VectorXd>(values.data(), n) - p.mean;
  const VectorXd white = llt.matrixL().solve(r);
  return -0.5 * (white.squaredNorm() + 2.0 * llt.matrixLLT().diagonal().array().log().sum() +
                 static_cast<double>(n) * kLog2Pi);
}

std::vector<double> knn_average(std::span<const CurvePoint> points, std::size_t k,
                                std::span<const double> queries) {
  if (points.empty()) throw InvalidArgument("KNN average needs data");
  if (k == 0 || k > points.size()) throw InvalidArgument("KNN k must lie in [1, number of points]");
  std::vector<std::size_t> order(points.size());
  std::vector<double> out;
  out.reserve(queries.size());
  for (double q : queries) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto closer = [&](std::size_t a, std::size_t b) {
      const double da = std::abs(points[a].x - q);
      const double db = std::abs(points[b].x - q);
      return da < db || (da == db && a < b);
    };
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(), closer);
    // nth_element leaves the k smallest (under a strict total order) in front.
    double acc = 0.0;
    for (std::size_t i = 0; i < k; ++i) acc += points[order[i]].y;
    out.push_back(acc / static_cast<double>(k));
  }
  return out;
}

std::vector<double> knn_average(std::span<const CurvePoint> points, std::size_t k) {
  std::vector<double> xs(points.size());
  std::transform(points.begin(), points.end(), xs.begin(), [](const CurvePoint& p) { return p.x; });
  return knn_average(points, k, xs);
}

}  // namespace svpf
