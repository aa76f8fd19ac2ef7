#include "svpf/kernel.hpp"

#include <cmath>
#include <string>

#include "svpf/error.hpp"

namespace svpf {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kSqrt5 = 2.2360679774997896;

void require_finite(double x, double x_prime) {
  if (!std::isfinite(x) || !std::isfinite(x_prime)) {
    throw InvalidArgument("kernel evaluated at a non-finite input");
  }
}

// Unit-variance Matérn correlation at scaled distance r >= 0.
double correlation(MaternOrder order, double r) {
  switch (order) {
    case MaternOrder::Half:
      return std::exp(-r);
    case MaternOrder::ThreeHalves:
      return (1.0 + kSqrt3 * r) * std::exp(-kSqrt3 * r);
    case MaternOrder::FiveHalves:
      return (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) * std::exp(-kSqrt5 * r);
  }
  return 0.0;
}

// -r * d(correlation)/dr, which is d(correlation)/d log(lengthscale).
double correlation_dlog_lengthscale(MaternOrder order, double r) {
  switch (order) {
    case MaternOrder::Half:
      return r * std::exp(-r);
    case MaternOrder::ThreeHalves:
      return 3.0 * r * r * std::exp(-kSqrt3 * r);
    case MaternOrder::FiveHalves:
      return 5.0 / 3.0 * r * r * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(MaternOrder order) {
  switch (order) {
    case MaternOrder::Half:
      return "half";
    case MaternOrder::ThreeHalves:
      return "three_halves";
    case MaternOrder::FiveHalves:
      return "five_halves";
  }
  return "five_halves";
}

MaternOrder matern_order_from_string(std::string_view name) {
  if (name == "half") return MaternOrder::Half;
  if (name == "three_halves") return MaternOrder::ThreeHalves;
  if (name == "five_halves") return MaternOrder::FiveHalves;
  throw InvalidArgument("unknown Matern order '" + std::string(name) + "'");
}

std::string_view to_string(MeanKind kind) { return kind == MeanKind::Identity ? "identity" : "zero"; }

MeanKind mean_kind_from_string(std::string_view name) {
  if (name == "identity") return MeanKind::Identity;
  if (name == "zero") return MeanKind::Zero;
  throw InvalidArgument("unknown mean function '" + std::string(name) + "'");
}

Eigen::VectorXd MeanFn::operator()(std::span<const double> xs) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) out(static_cast<Eigen::Index>(i)) = (*this)(xs[i]);
  return out;
}

void KernelParams::validate() const {
  if (!(signal_variance > 0.0) || !std::isfinite(signal_variance)) {
    throw InvalidArgument("kernel signal variance must be positive and finite");
  }
  if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
    throw InvalidArgument("kernel lengthscale must be positive and finite");
  }
}

double kernel_eval(const KernelParams& p, double x, double x_prime) {
  require_finite(x, x_prime);
  const double r = std::abs(x - x_prime) / p.lengthscale;
  return p.signal_variance * correlation(p.order, r);
}

KernelGrad kernel_grad(const KernelParams& p, double x, double x_prime) {
  require_finite(x, x_prime);
  const double r = std::abs(x - x_prime) / p.lengthscale;
  return KernelGrad{p.signal_variance * correlation(p.order, r),
                    p.signal_variance * correlation_dlog_lengthscale(p.order, r)};
}

Eigen::MatrixXd kernel_matrix(const KernelParams& p, std::span<const double> a,
                              std::span<const double> b) {
  const auto rows = static_cast<Eigen::Index>(a.size());
  const auto cols = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd k(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      k(i, j) = kernel_eval(p, a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]);
    }
  }
  return k;
}

Eigen::MatrixXd kernel_matrix_dlog_lengthscale(const KernelParams& p, std::span<const double> a,
                                               std::span<const double> b) {
  const auto rows = static_cast<Eigen::Index>(a.size());
  const auto cols = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd k(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      const double x = a[static_cast<std::size_t>(i)];
      const double y = b[static_cast<std::size_t>(j)];
      require_finite(x, y);
      k(i, j) = p.signal_variance * correlation_dlog_lengthscale(p.order, std::abs(x - y) / p.lengthscale);
    }
  }
  return k;
}

}  // namespace svpf
