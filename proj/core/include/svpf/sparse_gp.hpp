#ifndef SVPF_SPARSE_GP_HPP
#define SVPF_SPARSE_GP_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "svpf/exact_gp.hpp"
#include "svpf/kernel.hpp"

namespace svpf {

/// Inducing inputs Z. Grid layouts are kept fixed during learning.
struct InducingSet {
  enum class Layout { Grid, Explicit };

  std::vector<double> points;
  Layout layout = Layout::Explicit;
  double lo = 0.0;
  double hi = 0.0;

  static InducingSet grid(double lo, double hi, std::size_t count);
  static InducingSet explicit_points(std::vector<double> points);

  std::size_t size() const { return points.size(); }
  double span() const;
  void validate() const;

  friend bool operator==(const InducingSet&, const InducingSet&) = default;
};

/// q(u) = N(mean, chol * chol^T); `chol` is lower triangular with a positive diagonal.
struct VariationalParams {
  Eigen::VectorXd mean;
  Eigen::MatrixXd chol;

  Eigen::MatrixXd covariance() const { return chol * chol.transpose(); }
};

/// Equally weighted transition pairs (x_{t-1}, x_t) used as regression data.
struct MiniBatch {
  std::vector<double> inputs;
  std::vector<double> targets;

  std::size_t size() const { return inputs.size(); }
  bool empty() const { return inputs.empty(); }
  void push_back(double input, double target) {
    inputs.push_back(input);
    targets.push_back(target);
  }
  Dataset as_dataset() const { return Dataset{inputs, targets}; }
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

struct Predictions {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// The learned transition model: a sparse GP with explicit variational
/// posterior over the inducing values u = f(Z).
///
/// Instances are immutable. The prior factorization chol(K_LL + jitter I) is
/// computed once at construction; every update yields a new model.
class SparseGPModel {
 public:
  SparseGPModel(KernelParams kernel, MeanFn mean, double noise_var, InducingSet inducing,
                VariationalParams q);

  /// Model with q(u) equal to the prior p(u) = N(mean(Z), K_LL).
  static SparseGPModel at_prior(KernelParams kernel, MeanFn mean, double noise_var,
                                InducingSet inducing);

  const KernelParams& kernel() const { return kernel_; }
  const MeanFn& mean_fn() const { return mean_; }
  double noise_var() const { return noise_var_; }
  const InducingSet& inducing() const { return inducing_; }
  const VariationalParams& q() const { return q_; }
  std::size_t num_inducing() const { return inducing_.size(); }

  /// Lower Cholesky factor of K_LL + jitter I.
  const Eigen::MatrixXd& prior_chol() const { return prior_chol_; }
  /// Prior mean of u, i.e. mean(Z).
  const Eigen::VectorXd& prior_mean() const { return prior_mean_; }

  SparseGPModel with_q(VariationalParams q) const;
  SparseGPModel with_hyperparameters(KernelParams kernel, double noise_var) const;

 private:
  KernelParams kernel_;
  MeanFn mean_;
  double noise_var_;
  InducingSet inducing_;
  VariationalParams q_;
  Eigen::MatrixXd prior_chol_;
  Eigen::VectorXd prior_mean_;
  Eigen::VectorXd alpha_;  // (K_LL + jitter I)^{-1} (m - mean(Z))

  friend Predictions predict(const SparseGPModel&, std::span<const double>);
};

/// Total predictive distribution of x_t given x_{t-1} = x, including process noise.
Prediction predict(const SparseGPModel& model, double x);
Predictions predict(const SparseGPModel& model, std::span<const double> xs);

/// KL(q(u) || p(u)).
double kl_q_p(const SparseGPModel& model);

/// Stochastic variational lower bound on log p(y) over `batch`; the data sum is
/// multiplied by `scale`.
double elbo(const SparseGPModel& model, const MiniBatch& batch, double scale = 1.0);

/// Gradient of elbo() with respect to the free parameters
/// (log noise_var, log signal_variance, log lengthscale, m, chol). Entries of
/// `chol` on the diagonal are derivatives with respect to the log of the
/// diagonal; the strict upper triangle is zero.
struct ElboGradient {
  double log_noise_var = 0.0;
  double log_signal_variance = 0.0;
  double log_lengthscale = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd chol;
  std::size_t batch_size = 0;
  /// Weight of the data sum: scale * batch_size.
  double data_weight = 0.0;

  bool all_finite() const;
  Eigen::VectorXd flatten() const;
};

struct ElboResult {
  double value = 0.0;
  ElboGradient grad;
};

ElboGradient elbo_grad(const SparseGPModel& model, const MiniBatch& batch, double scale = 1.0);
ElboResult elbo_with_grad(const SparseGPModel& model, const MiniBatch& batch, double scale = 1.0);

/// Flat free-parameter vector in the elbo_grad layout:
/// [log noise_var, log signal_variance, log lengthscale, m..., chol lower
/// triangle column-major with log diagonal...].
Eigen::VectorXd pack_parameters(const SparseGPModel& model);
SparseGPModel unpack_parameters(const SparseGPModel& like, const Eigen::VectorXd& params);

struct OptimizerConfig {
  double base_rate = 1.0;
  double decay_steps = 100.0;
  double hyper_rate_scale = 0.1;
  bool learn_hyperparameters = true;
  /// Largest change of any log hyperparameter in one step; 0 disables the clip.
  double max_hyper_step = 0.0;

  void validate() const;
  friend bool operator==(const OptimizerConfig&, const OptimizerConfig&) = default;
};

/// Robbins-Monro schedule rate(t) = base_rate / (1 + t / decay_steps).
struct OptimizerState {
  std::uint64_t step_count = 0;
  OptimizerConfig config;

  double rate() const { return rate_at(step_count); }
  double rate_at(std::uint64_t step) const {
    return config.base_rate / (1.0 + static_cast<double>(step) / config.decay_steps);
  }

  friend bool operator==(const OptimizerState&, const OptimizerState&) = default;
};

/// Gradient of the same bound in the prior-whitened coordinates the optimizer
/// steps in: v = L_K^{-1}(m - mean(Z)), R~ = L_K^{-1} chol (log diagonal),
/// where L_K = chol(K_LL + jitter I). Hyperparameter derivatives hold (v, R~)
/// fixed.
struct WhitenedGradient {
  double log_noise_var = 0.0;
  double log_signal_variance = 0.0;
  double log_lengthscale = 0.0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd chol;
};

WhitenedGradient whiten_gradient(const SparseGPModel& model, const ElboGradient& grad);

/// One gradient-ascent step on the bound. Throws (leaving the inputs untouched)
/// if the gradient or the resulting parameters are not finite.
std::pair<SparseGPModel, OptimizerState> sgd_step(const SparseGPModel& model,
                                                  const ElboGradient& grad,
                                                  const OptimizerState& opt);

}  // namespace svpf

#endif  // SVPF_SPARSE_GP_HPP
