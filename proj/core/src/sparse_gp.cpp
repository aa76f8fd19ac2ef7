#include "svpf/sparse_gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "svpf/error.hpp"

namespace svpf {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

MatrixXd prior_cov(const KernelParams& kernel, const InducingSet& inducing) {
  MatrixXd k = kernel_matrix(kernel, inducing.points, inducing.points);
  k.diagonal().array() += jitter(kernel);
  return k;
}

MatrixXd cholesky_lower(const MatrixXd& k) {
  Eigen::LLT<MatrixXd> llt(k);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("inducing covariance K_LL is not positive definite");
  }
  return llt.matrixL();
}

MatrixXd lower_inverse(const MatrixXd& lower) {
  return lower.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(lower.rows(), lower.cols()));
}

// Per-datum quantities shared by the bound and its gradient.
struct BatchTerms {
  MatrixXd k_ln;       // K_LN
  MatrixXd a;          // K^{-1} K_LN, columns a_i
  VectorXd residual;   // y_i - mean_i - a_i^T (m - mean(Z))
  VectorXd k_tilde;    // var - k_i^T a_i
  VectorXd q_var;      // a_i^T S a_i
};

BatchTerms batch_terms(const SparseGPModel& model, const MiniBatch& batch) {
  BatchTerms t;
  const auto& lk = model.prior_chol();
  t.k_ln = kernel_matrix(model.kernel(), model.inducing().points, batch.inputs);
  const MatrixXd w = lk.triangularView<Eigen::Lower>().solve(t.k_ln);
  t.a = lk.transpose().triangularView<Eigen::Upper>().solve(w);

  const VectorXd d = model.q().mean - model.prior_mean();
  const auto n = static_cast<Index>(batch.size());
  const Eigen::Map<const VectorXd> y(batch.targets.data(), n);
  t.residual = y - model.mean_fn()(std::span<const double>(batch.inputs)) - t.a.transpose() * d;
  t.k_tilde = (model.kernel().signal_variance - w.colwise().squaredNorm().array()).matrix().transpose();
  t.q_var = (model.q().chol.transpose() * t.a).colwise().squaredNorm().transpose();
  return t;
}

double data_term(const BatchTerms& t, double noise_var) {
  const auto n = static_cast<double>(t.residual.size());
  const double quad = t.residual.squaredNorm() + t.k_tilde.sum() + t.q_var.sum();
  return -0.5 * n * (kLog2Pi + std::log(noise_var)) - quad / (2.0 * noise_var);
}

void check_batch(const MiniBatch& batch, double scale) {
  if (batch.inputs.size() != batch.targets.size()) {
    throw InvalidArgument("mini-batch inputs and targets differ in length");
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(batch.inputs.begin(), batch.inputs.end(), finite) ||
      !std::all_of(batch.targets.begin(), batch.targets.end(), finite)) {
    throw InvalidArgument("mini-batch contains non-finite values");
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw InvalidArgument("elbo scale must be positive and finite");
  }
}

// Derivative of chol(K) given dK: L * Phi(L^{-1} dK L^{-T}).
MatrixXd cholesky_derivative(const MatrixXd& lk, const MatrixXd& lk_inv, const MatrixXd& dk) {
  MatrixXd x = lk_inv * dk * lk_inv.transpose();
  MatrixXd phi = x.triangularView<Eigen::Lower>();
  phi.diagonal() *= 0.5;
  return lk * phi;
}

}  // namespace

InducingSet InducingSet::grid(double lo, double hi, std::size_t count) {
  if (count == 0) throw InvalidArgument("inducing grid needs at least one point");
  if (!std::isfinite(lo) || !std::isfinite(hi) || (count > 1 && !(hi > lo))) {
    throw InvalidArgument("inducing grid interval must be finite with hi > lo");
  }
  InducingSet set;
  set.layout = Layout::Grid;
  set.lo = lo;
  set.hi = hi;
  set.points.resize(count);
  if (count == 1) {
    set.points[0] = 0.5 * (lo + hi);
  } else {
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) set.points[i] = lo + step * static_cast<double>(i);
    set.points.back() = hi;
  }
  return set;
}

InducingSet InducingSet::explicit_points(std::vector<double> points) {
  InducingSet set;
  set.layout = Layout::Explicit;
  set.points = std::move(points);
  if (!set.points.empty()) {
    const auto [lo, hi] = std::minmax_element(set.points.begin(), set.points.end());
    set.lo = *lo;
    set.hi = *hi;
  }
  set.validate();
  return set;
}

double InducingSet::span() const { return hi - lo; }

void InducingSet::validate() const {
  if (points.empty()) throw InvalidArgument("inducing set is empty");
  if (!std::all_of(points.begin(), points.end(), [](double v) { return std::isfinite(v); })) {
    throw InvalidArgument("inducing set contains non-finite points");
  }
  if (layout == Layout::Grid && !std::is_sorted(points.begin(), points.end(), std::less_equal<>())) {
    throw InvalidArgument("grid inducing points must be strictly increasing");
  }
}

SparseGPModel::SparseGPModel(KernelParams kernel, MeanFn mean, double noise_var,
                             InducingSet inducing, VariationalParams q)
    : kernel_(kernel), mean_(mean), noise_var_(noise_var), inducing_(std::move(inducing)), q_(std::move(q)) {
  kernel_.validate();
  inducing_.validate();
  if (!(noise_var_ > 0.0) || !std::isfinite(noise_var_)) {
    throw InvalidArgument("noise variance must be positive and finite");
  }
  const auto l = static_cast<Index>(inducing_.size());
  if (q_.mean.size() != l || q_.chol.rows() != l || q_.chol.cols() != l) {
    throw InvalidArgument("variational parameters do not match the inducing set");
  }
  if (!q_.mean.allFinite() || !q_.chol.allFinite()) {
    throw InvalidArgument("variational parameters are not finite");
  }
  if ((q_.chol.diagonal().array() <= 0.0).any()) {
    throw InvalidArgument("variational Cholesky factor needs a positive diagonal");
  }
  q_.chol.triangularView<Eigen::StrictlyUpper>().setZero();

  prior_chol_ = cholesky_lower(prior_cov(kernel_, inducing_));
  prior_mean_ = mean_(std::span<const double>(inducing_.points));
  alpha_ = prior_chol_.transpose().triangularView<Eigen::Upper>().solve(
      prior_chol_.triangularView<Eigen::Lower>().solve(q_.mean - prior_mean_));
}

SparseGPModel SparseGPModel::at_prior(KernelParams kernel, MeanFn mean, double noise_var,
                                      InducingSet inducing) {
  kernel.validate();
  inducing.validate();
  VariationalParams q;
  q.mean = mean(std::span<const double>(inducing.points));
  q.chol = cholesky_lower(prior_cov(kernel, inducing));
  return SparseGPModel(kernel, mean, noise_var, std::move(inducing), std::move(q));
}

SparseGPModel SparseGPModel::with_q(VariationalParams q) const {
  return SparseGPModel(kernel_, mean_, noise_var_, inducing_, std::move(q));
}

SparseGPModel SparseGPModel::with_hyperparameters(KernelParams kernel, double noise_var) const {
  return SparseGPModel(kernel, mean_, noise_var, inducing_, q_);
}

Predictions predict(const SparseGPModel& model, std::span<const double> xs) {
  const auto& lk = model.prior_chol_;
  const MatrixXd k_lx = kernel_matrix(model.kernel_, model.inducing_.points, xs);
  const MatrixXd w = lk.triangularView<Eigen::Lower>().solve(k_lx);
  const MatrixXd c = lk.transpose().triangularView<Eigen::Upper>().solve(w);

  Predictions out;
  out.mean = model.mean_(xs) + k_lx.transpose() * model.alpha_;
  const VectorXd conditional =
      (model.kernel_.signal_variance - w.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
  const VectorXd from_q = (model.q_.chol.transpose() * c).colwise().squaredNorm().transpose();
  out.variance = conditional + from_q;
  out.variance.array() += model.noise_var_;
  return out;
}

Prediction predict(const SparseGPModel& model, double x) {
  const Predictions p = predict(model, std::span<const double>(&x, 1));
  return Prediction{p.mean(0), p.variance(0)};
}

double kl_q_p(const SparseGPModel& model) {
  const auto& lk = model.prior_chol();
  const auto& r = model.q().chol;
  const auto l = static_cast<double>(model.num_inducing());
  const MatrixXd white_chol = lk.triangularView<Eigen::Lower>().solve(r);
  const VectorXd white_mean = lk.triangularView<Eigen::Lower>().solve(model.q().mean - model.prior_mean());
  const double log_det_k = 2.0 * lk.diagonal().array().log().sum();
  const double log_det_s = 2.0 * r.diagonal().array().log().sum();
  return 0.5 * (white_chol.squaredNorm() + white_mean.squaredNorm() - l + log_det_k - log_det_s);
}

double elbo(const SparseGPModel& model, const MiniBatch& batch, double scale) {
  check_batch(batch, scale);
  const double kl = kl_q_p(model);
  if (batch.empty()) return -kl;
  return scale * data_term(batch_terms(model, batch), model.noise_var()) - kl;
}

ElboResult elbo_with_grad(const SparseGPModel& model, const MiniBatch& batch, double scale) {
  check_batch(batch, scale);
  const auto& kernel = model.kernel();
  const auto& lk = model.prior_chol();
  const auto& r = model.q().chol;
  const double sigma = model.noise_var();
  const auto n = static_cast<Index>(batch.size());

  const MatrixXd lk_inv = lower_inverse(lk);
  const MatrixXd k_inv = lk_inv.transpose() * lk_inv;
  const VectorXd d = model.q().mean - model.prior_mean();
  const VectorXd alpha = k_inv * d;
  const MatrixXd s = r * r.transpose();
  const MatrixXd k_inv_r = k_inv * r;

  ElboResult out;
  out.value = -kl_q_p(model);
  ElboGradient& g = out.grad;
  g.batch_size = batch.size();
  g.data_weight = scale * static_cast<double>(batch.size());

  // KL contributions.
  g.mean = -alpha;
  MatrixXd grad_r = -k_inv_r;
  grad_r.diagonal() += r.diagonal().cwiseInverse();
  // d KL / d K = 0.5 (K^{-1} - K^{-1} S K^{-1} - alpha alpha^T)
  const MatrixXd kl_dk = 0.5 * (k_inv - k_inv_r * k_inv_r.transpose() - alpha * alpha.transpose());

  const MatrixXd dk_ls = kernel_matrix_dlog_lengthscale(kernel, model.inducing().points, model.inducing().points);
  MatrixXd dk_var = kernel_matrix(kernel, model.inducing().points, model.inducing().points);
  dk_var.diagonal().array() += jitter(kernel);

  g.log_signal_variance = -(kl_dk.cwiseProduct(dk_var)).sum();
  g.log_lengthscale = -(kl_dk.cwiseProduct(dk_ls)).sum();
  g.log_noise_var = 0.0;

  if (n > 0) {
    const BatchTerms t = batch_terms(model, batch);
    out.value += scale * data_term(t, sigma);

    const double quad = t.residual.squaredNorm() + t.k_tilde.sum() + t.q_var.sum();
    g.log_noise_var = scale * (-0.5 * static_cast<double>(n) + quad / (2.0 * sigma));

    g.mean += (scale / sigma) * (t.a * t.residual);
    grad_r -= (scale / sigma) * (t.a * (t.a.transpose() * r));

    // Data-term derivative for a hyperparameter with derivatives (dK, dK_LN, dk_ii):
    //   sum(dK_LN o (B + A / sigma)) - sum(dK o (A B^T + A A^T / (2 sigma))) - n dk_ii / (2 sigma)
    // with B = K^{-1} (d r^T - S A) / sigma.
    const MatrixXd b = k_inv * ((d * t.residual.transpose() - s * t.a) / sigma);
    const MatrixXd ln_weight = b + t.a / sigma;
    const MatrixXd ll_weight = t.a * b.transpose() + (t.a * t.a.transpose()) / (2.0 * sigma);
    const MatrixXd dk_ln_ls = kernel_matrix_dlog_lengthscale(kernel, model.inducing().points, batch.inputs);

    const double data_var = t.k_ln.cwiseProduct(ln_weight).sum() - dk_var.cwiseProduct(ll_weight).sum() -
                            static_cast<double>(n) * kernel.signal_variance / (2.0 * sigma);
    const double data_ls = dk_ln_ls.cwiseProduct(ln_weight).sum() - dk_ls.cwiseProduct(ll_weight).sum();
    g.log_signal_variance += scale * data_var;
    g.log_lengthscale += scale * data_ls;
  }

  g.chol = grad_r.triangularView<Eigen::Lower>();
  g.chol.diagonal() = g.chol.diagonal().cwiseProduct(r.diagonal());
  return out;
}

ElboGradient elbo_grad(const SparseGPModel& model, const MiniBatch& batch, double scale) {
  return elbo_with_grad(model, batch, scale).grad;
}

bool ElboGradient::all_finite() const {
  return std::isfinite(log_noise_var) && std::isfinite(log_signal_variance) && std::isfinite(log_lengthscale) &&
         mean.allFinite() && chol.allFinite();
}

Eigen::VectorXd ElboGradient::flatten() const {
  const Index l = mean.size();
  VectorXd out(3 + l + l * (l + 1) / 2);
  out(0) = log_noise_var;
  out(1) = log_signal_variance;
  out(2) = log_lengthscale;
  out.segment(3, l) = mean;
  Index k = 3 + l;
  for (Index j = 0; j < l; ++j) {
    for (Index i = j; i < l; ++i) out(k++) = chol(i, j);
  }
  return out;
}

Eigen::VectorXd pack_parameters(const SparseGPModel& model) {
  const auto l = static_cast<Index>(model.num_inducing());
  const auto& r = model.q().chol;
  VectorXd out(3 + l + l * (l + 1) / 2);
  out(0) = std::log(model.noise_var());
  out(1) = std::log(model.kernel().signal_variance);
  out(2) = std::log(model.kernel().lengthscale);
  out.segment(3, l) = model.q().mean;
  Index k = 3 + l;
  for (Index j = 0; j < l; ++j) {
    for (Index i = j; i < l; ++i) out(k++) = i == j ? std::log(r(i, j)) : r(i, j);
  }
  return out;
}

SparseGPModel unpack_parameters(const SparseGPModel& like, const Eigen::VectorXd& params) {
  const auto l = static_cast<Index>(like.num_inducing());
  if (params.size() != 3 + l + l * (l + 1) / 2) {
    throw InvalidArgument("parameter vector has the wrong length");
  }
  KernelParams kernel = like.kernel();
  kernel.signal_variance = std::exp(params(1));
  kernel.lengthscale = std::exp(params(2));
  VariationalParams q;
  q.mean = params.segment(3, l);
  q.chol = MatrixXd::Zero(l, l);
  Index k = 3 + l;
  for (Index j = 0; j < l; ++j) {
    for (Index i = j; i < l; ++i) {
      q.chol(i, j) = i == j ? std::exp(params(k)) : params(k);
      ++k;
    }
  }
  return SparseGPModel(kernel, like.mean_fn(), std::exp(params(0)), like.inducing(), std::move(q));
}

void OptimizerConfig::validate() const {
  if (!(base_rate >= 0.0) || !std::isfinite(base_rate)) throw InvalidArgument("base learning rate must be >= 0");
  if (!(decay_steps > 0.0)) throw InvalidArgument("learning-rate decay steps must be positive");
  if (!(hyper_rate_scale >= 0.0) || !std::isfinite(hyper_rate_scale)) {
    throw InvalidArgument("hyperparameter rate multiplier must be >= 0");
  }
  if (!(max_hyper_step >= 0.0) || !std::isfinite(max_hyper_step)) {
    throw InvalidArgument("max_hyper_step must be >= 0");
  }
}

namespace {

struct WhitenedState {
  MatrixXd lk_inv;
  VectorXd v;
  MatrixXd r_tilde;
};

WhitenedState whiten(const SparseGPModel& model) {
  WhitenedState w;
  w.lk_inv = lower_inverse(model.prior_chol());
  w.v = w.lk_inv * (model.q().mean - model.prior_mean());
  w.r_tilde = (w.lk_inv * model.q().chol).triangularView<Eigen::Lower>();
  return w;
}

WhitenedGradient whiten_gradient(const SparseGPModel& model, const ElboGradient& grad, const WhitenedState& w) {
  const auto& lk = model.prior_chol();
  const auto& r = model.q().chol;

  MatrixXd g_r = grad.chol.triangularView<Eigen::Lower>();
  g_r.diagonal() = g_r.diagonal().cwiseQuotient(r.diagonal());

  WhitenedGradient out;
  out.log_noise_var = grad.log_noise_var;
  out.mean = lk.transpose() * grad.mean;
  out.chol = (lk.transpose() * g_r).triangularView<Eigen::Lower>();
  out.chol.diagonal() = out.chol.diagonal().cwiseProduct(w.r_tilde.diagonal());

  // Moving a hyperparameter with (v, R~) fixed also moves m and chol through L_K.
  const auto through_factor = [&](const MatrixXd& d_lk) {
    return grad.mean.dot(d_lk * w.v) + g_r.cwiseProduct(d_lk * w.r_tilde).sum();
  };
  out.log_signal_variance = grad.log_signal_variance + through_factor(0.5 * lk);
  const MatrixXd dk_ls = kernel_matrix_dlog_lengthscale(model.kernel(), model.inducing().points,
                                                        model.inducing().points);
  out.log_lengthscale = grad.log_lengthscale + through_factor(cholesky_derivative(lk, w.lk_inv, dk_ls));
  return out;
}

}  // namespace

WhitenedGradient whiten_gradient(const SparseGPModel& model, const ElboGradient& grad) {
  return whiten_gradient(model, grad, whiten(model));
}

std::pair<SparseGPModel, OptimizerState> sgd_step(const SparseGPModel& model, const ElboGradient& grad,
                                                  const OptimizerState& opt) {
  opt.config.validate();
  const auto l = static_cast<Index>(model.num_inducing());
  if (grad.mean.size() != l || grad.chol.rows() != l || grad.chol.cols() != l) {
    throw InvalidArgument("gradient does not match the model dimensions");
  }
  if (!grad.all_finite()) throw InvalidArgument("gradient is not finite");

  const WhitenedState w = whiten(model);
  const WhitenedGradient wg = whiten_gradient(model, grad, w);

  // The variational block is preconditioned by an upper bound on its
  // curvature in whitened coordinates, data_weight * signal_variance /
  // noise_var from the data plus one from the KL term. Hyperparameter steps
  // are taken per datum.
  const double rate = opt.rate();
  const double var_rate = rate / (grad.data_weight * model.kernel().signal_variance / model.noise_var() + 1.0);
  const double hyper_rate = opt.config.learn_hyperparameters
                                ? rate * opt.config.hyper_rate_scale / std::max(grad.data_weight, 1.0)
                                : 0.0;
  const auto hyper_step = [&](double g) {
    const double step = hyper_rate * g;
    const double cap = opt.config.max_hyper_step;
    return cap > 0.0 ? std::clamp(step, -cap, cap) : step;
  };

  KernelParams kernel = model.kernel();
  double noise_var = model.noise_var();
  if (hyper_rate > 0.0) {
    noise_var *= std::exp(hyper_step(wg.log_noise_var));
    kernel.signal_variance *= std::exp(hyper_step(wg.log_signal_variance));
    kernel.lengthscale *= std::exp(hyper_step(wg.log_lengthscale));
  }

  const VectorXd dv = var_rate * wg.mean;
  MatrixXd d_r_tilde = var_rate * wg.chol;
  for (Index k = 0; k < l; ++k) {
    d_r_tilde(k, k) = w.r_tilde(k, k) * std::expm1(var_rate * wg.chol(k, k));
  }

  const bool finite = std::isfinite(noise_var) && noise_var > 0.0 && std::isfinite(kernel.signal_variance) &&
                      kernel.signal_variance > 0.0 && std::isfinite(kernel.lengthscale) &&
                      kernel.lengthscale > 0.0 && dv.allFinite() && d_r_tilde.allFinite();
  if (!finite) throw InvalidArgument("gradient step produced non-finite parameters");

  const auto& lk_old = model.prior_chol();
  MatrixXd lk_new = lk_old;
  if (!(kernel == model.kernel())) lk_new = cholesky_lower(prior_cov(kernel, model.inducing()));

  // m' = mean(Z) + L_K' (v + dv), written as an update of m so that a zero
  // step leaves the model bit-for-bit unchanged.
  VariationalParams q;
  q.mean = model.q().mean + (lk_new - lk_old) * w.v + lk_new * dv;
  const MatrixXd d_r = (lk_new - lk_old) * w.r_tilde + lk_new * d_r_tilde;
  q.chol = model.q().chol;
  q.chol.triangularView<Eigen::Lower>() += d_r;
  for (Index k = 0; k < l; ++k) {
    // Exact arithmetic gives L_K'(k,k) * R~'(k,k) > 0; guard against cancellation.
    if (!(q.chol(k, k) > 0.0)) q.chol(k, k) = lk_new(k, k) * (w.r_tilde(k, k) + d_r_tilde(k, k));
  }
  if (!q.mean.allFinite() || !q.chol.allFinite()) throw InvalidArgument("gradient step produced non-finite parameters");

  OptimizerState next = opt;
  ++next.step_count;
  return {SparseGPModel(kernel, model.mean_fn(), noise_var, model.inducing(), std::move(q)), next};
}

}  // namespace svpf
