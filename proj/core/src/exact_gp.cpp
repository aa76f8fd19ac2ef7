#include "svpf/exact_gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "svpf/error.hpp"

namespace svpf {

namespace {

Eigen::LLT<Eigen::MatrixXd> factor_training(const Dataset& data, const KernelParams& kernel,
                                            double noise_var) {
  Eigen::MatrixXd k = kernel_matrix(kernel, data.inputs, data.inputs);
  k.diagonal().array() += std::max(noise_var, jitter(kernel));
  Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("training covariance K_NN + noise I is not positive definite");
  }
  return llt;
}

void check_inputs(const Dataset& data, const KernelParams& kernel, double noise_var) {
  data.validate();
  kernel.validate();
  if (!(noise_var >= 0.0) || !std::isfinite(noise_var)) {
    throw InvalidArgument("noise variance must be non-negative and finite");
  }
}

}  // namespace

void Dataset::validate() const {
  if (inputs.size() != targets.size()) {
    throw InvalidArgument("dataset inputs and targets differ in length");
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(inputs.begin(), inputs.end(), finite) ||
      !std::all_of(targets.begin(), targets.end(), finite)) {
    throw InvalidArgument("dataset contains non-finite values");
  }
}

GaussianPosterior gp_posterior(const Dataset& data, const KernelParams& kernel, const MeanFn& mean,
                               double noise_var, std::span<const double> test_inputs) {
  check_inputs(data, kernel, noise_var);
  GaussianPosterior post{mean(test_inputs), kernel_matrix(kernel, test_inputs, test_inputs)};
  if (data.empty()) return post;

  const auto llt = factor_training(data, kernel, noise_var);
  const Eigen::VectorXd residual =
      Eigen::Map<const Eigen::VectorXd>(data.targets.data(), static_cast<Eigen::Index>(data.size())) -
      mean(std::span<const double>(data.inputs));
  const Eigen::MatrixXd k_test_train = kernel_matrix(kernel, test_inputs, data.inputs);

  post.mean += k_test_train * llt.solve(residual);
  const Eigen::MatrixXd v = llt.matrixL().solve(k_test_train.transpose());
  post.cov -= v.transpose() * v;
  post.cov = 0.5 * (post.cov + post.cov.transpose());
  return post;
}

double gp_log_marginal(const Dataset& data, const KernelParams& kernel, const MeanFn& mean,
                       double noise_var) {
  check_inputs(data, kernel, noise_var);
  if (data.empty()) return 0.0;

  const auto llt = factor_training(data, kernel, noise_var);
  const Eigen::VectorXd residual =
      Eigen::Map<const Eigen::VectorXd>(data.targets.data(), static_cast<Eigen::Index>(data.size())) -
      mean(std::span<const double>(data.inputs));
  const Eigen::VectorXd white = llt.matrixL().solve(residual);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const auto n = static_cast<double>(data.size());
  return -0.5 * (white.squaredNorm() + log_det + n * std::log(2.0 * std::numbers::pi));
}

}  // namespace svpf
