#ifndef SVPF_EXACT_GP_HPP
#define SVPF_EXACT_GP_HPP

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "svpf/kernel.hpp"

namespace svpf {

/// Training set of noisy function values y_i = f(x_i) + e_i.
struct Dataset {
  std::vector<double> inputs;
  std::vector<double> targets;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
  void validate() const;
};

struct GaussianPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Dense GP regression posterior of f at `test_inputs`.
///
/// The noise variance enters the training covariance as K_NN + noise_var * I.
/// When noise_var is below the kernel jitter the jitter is used in its place,
/// so the noiseless case still factorizes.
GaussianPosterior gp_posterior(const Dataset& data, const KernelParams& kernel, const MeanFn& mean,
                               double noise_var, std::span<const double> test_inputs);

/// log N(y; mean(X), K_NN + noise_var * I). Zero for an empty dataset.
double gp_log_marginal(const Dataset& data, const KernelParams& kernel, const MeanFn& mean,
                       double noise_var);

}  // namespace svpf

#endif  // SVPF_EXACT_GP_HPP
