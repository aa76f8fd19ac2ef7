#ifndef SVPF_KERNEL_HPP
#define SVPF_KERNEL_HPP

#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace svpf {

/// Smoothness of the Matérn covariance: nu = 1/2, 3/2 or 5/2.
enum class MaternOrder { Half, ThreeHalves, FiveHalves };

std::string_view to_string(MaternOrder order);
MaternOrder matern_order_from_string(std::string_view name);

/// Stationary Matérn covariance k(x, x') = signal_variance * m(|x - x'| / lengthscale).
struct KernelParams {
  double signal_variance = 1.0;
  double lengthscale = 1.0;
  MaternOrder order = MaternOrder::FiveHalves;

  /// Throws InvalidArgument unless both scales are positive and finite.
  void validate() const;

  friend bool operator==(const KernelParams&, const KernelParams&) = default;
};

/// Prior mean of the latent transition function.
enum class MeanKind { Zero, Identity };

struct MeanFn {
  MeanKind kind = MeanKind::Identity;

  double operator()(double x) const { return kind == MeanKind::Identity ? x : 0.0; }
  Eigen::VectorXd operator()(std::span<const double> xs) const;

  friend bool operator==(const MeanFn&, const MeanFn&) = default;
};

std::string_view to_string(MeanKind kind);
MeanKind mean_kind_from_string(std::string_view name);

/// Derivatives of k(x, x') with respect to the log hyperparameters.
struct KernelGrad {
  double d_log_signal_variance = 0.0;
  double d_log_lengthscale = 0.0;

  /// Same derivatives in the linear parameterization (d/d signal_variance, d/d lengthscale).
  double d_signal_variance(const KernelParams& p) const { return d_log_signal_variance / p.signal_variance; }
  double d_lengthscale(const KernelParams& p) const { return d_log_lengthscale / p.lengthscale; }
};

double kernel_eval(const KernelParams& p, double x, double x_prime);

KernelGrad kernel_grad(const KernelParams& p, double x, double x_prime);

/// Entry (i, j) is kernel_eval(p, a[i], b[j]).
Eigen::MatrixXd kernel_matrix(const KernelParams& p, std::span<const double> a,
                              std::span<const double> b);

/// Elementwise d/d log(lengthscale) of kernel_matrix(p, a, b).
Eigen::MatrixXd kernel_matrix_dlog_lengthscale(const KernelParams& p, std::span<const double> a,
                                               std::span<const double> b);

/// Diagonal jitter added before any Cholesky factorization of a kernel matrix.
inline double jitter(const KernelParams& p) { return 1e-8 * p.signal_variance; }

}  // namespace svpf

#endif  // SVPF_KERNEL_HPP
