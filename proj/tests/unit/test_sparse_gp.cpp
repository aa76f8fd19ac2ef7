#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "svpf/error.hpp"
#include "svpf/sparse_gp.hpp"

using namespace svpf;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Random model with a moderately conditioned inducing covariance and q away from the prior.
SparseGPModel random_model(std::mt19937_64& gen, Eigen::Index l, MeanKind mean = MeanKind::Identity) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const KernelParams k{0.5 + 1.5 * u(gen), 0.25 + 0.35 * u(gen),
                       static_cast<MaternOrder>(gen() % 3)};
  const auto z = InducingSet::grid(0.0, 1.0, static_cast<std::size_t>(l));
  const SparseGPModel prior = SparseGPModel::at_prior(k, MeanFn{mean}, 0.05 + 0.4 * u(gen), z);
  std::normal_distribution<double> n;
  VariationalParams q;
  q.mean = prior.prior_mean();
  for (Eigen::Index i = 0; i < l; ++i) q.mean(i) += 0.5 * n(gen);
  q.chol = oracle::random_lower(gen, l, 0.2, 0.2, 0.8);
  return prior.with_q(q);
}

MiniBatch random_batch(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(-0.1, 1.1);
  std::normal_distribution<double> e(0.0, 0.3);
  MiniBatch b;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(gen);
    b.push_back(x, x + 0.3 * std::sin(6.0 * x) + e(gen));
  }
  return b;
}

// Closed-form maximizer of the bound over q for fixed hyperparameters.
VariationalParams optimal_q(const SparseGPModel& m, const MiniBatch& b) {
  MatrixXd k = kernel_matrix(m.kernel(), m.inducing().points, m.inducing().points);
  k.diagonal().array() += jitter(m.kernel());
  const MatrixXd k_inv = k.inverse();
  const MatrixXd k_ln = kernel_matrix(m.kernel(), m.inducing().points, b.inputs);
  const MatrixXd a = k_inv * k_ln;
  const MatrixXd precision = k_inv + a * a.transpose() / m.noise_var();
  const MatrixXd s = precision.inverse();
  VectorXd resid(static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < b.size(); ++i) resid(static_cast<Eigen::Index>(i)) = b.targets[i] - m.mean_fn()(b.inputs[i]);
  VariationalParams q;
  q.mean = m.prior_mean() + s * a * resid / m.noise_var();
  q.chol = Eigen::LLT<MatrixXd>(0.5 * (s + s.transpose())).matrixL();
  return q;
}

struct Blocks {
  VectorXd noise, kernel, mean, chol;
};

Blocks split(const VectorXd& flat, Eigen::Index l) {
  return {flat.segment(0, 1), flat.segment(1, 2), flat.segment(3, l), flat.tail(flat.size() - 3 - l)};
}

}  // namespace

TEST_CASE("prior initialization: zero KL and zero bound on an empty batch") {
  const auto z = InducingSet::grid(0.0, 1.0, 30);
  const auto m = SparseGPModel::at_prior(KernelParams{1.0, 0.1}, MeanFn{}, 0.1, z);
  CHECK(std::abs(kl_q_p(m)) < 1e-9);
  CHECK(std::abs(elbo(m, MiniBatch{})) < 1e-9);
}

TEST_CASE("scalar KL with unit covariances and unit mean offset is one half") {
  const auto z = InducingSet::explicit_points({0.4});
  // Signal variance chosen so that K_LL + jitter is exactly representable as ~1.
  const KernelParams k{1.0 / (1.0 + 1e-8), 0.3};
  VariationalParams q{VectorXd::Constant(1, 0.4 + 1.0), MatrixXd::Constant(1, 1, 1.0)};
  const SparseGPModel m(k, MeanFn{MeanKind::Identity}, 0.1, z, q);
  CHECK(kl_q_p(m) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("KL matches a Monte-Carlo estimate") {
  std::mt19937_64 gen(4242);
  const SparseGPModel m = random_model(gen, 4);
  MatrixXd k = kernel_matrix(m.kernel(), m.inducing().points, m.inducing().points);
  k.diagonal().array() += jitter(m.kernel());
  const MatrixXd s = m.q().covariance();
  const Eigen::LLT<MatrixXd> k_llt(k);
  const Eigen::LLT<MatrixXd> s_llt(s);
  const double log_det_k = 2.0 * MatrixXd(k_llt.matrixL()).diagonal().array().log().sum();
  const double log_det_s = 2.0 * m.q().chol.diagonal().array().log().sum();

  std::normal_distribution<double> n;
  const int samples = 1000000;
  double sum = 0.0;
  double sum_sq = 0.0;
  VectorXd e(4);
  for (int i = 0; i < samples; ++i) {
    for (int j = 0; j < 4; ++j) e(j) = n(gen);
    const VectorXd u = m.q().mean + m.q().chol * e;
    const VectorXd du = u - m.prior_mean();
    const double log_q = -0.5 * (e.squaredNorm() + log_det_s);
    const double log_p = -0.5 * (du.dot(k_llt.solve(du)) + log_det_k);
    const double v = log_q - log_p;
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / samples;
  const double se = std::sqrt((sum_sq / samples - mean * mean) / samples);
  CHECK(std::abs(kl_q_p(m) - mean) < 3.0 * se);
  CHECK(kl_q_p(m) >= 0.0);
}

TEST_CASE("bound never exceeds the exact log marginal") {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 50; ++trial) {
    const auto l = static_cast<Eigen::Index>(2 + gen() % 10);
    const SparseGPModel m = random_model(gen, l);
    const MiniBatch b = random_batch(gen, 1 + gen() % 20);
    const double exact = gp_log_marginal(b.as_dataset(), m.kernel(), m.mean_fn(), m.noise_var());
    CHECK(elbo(m, b) <= exact + 1e-8);
    CHECK(elbo(m.with_q(optimal_q(m, b)), b) <= exact + 1e-8);
  }
}

TEST_CASE("bound is tight with inducing inputs at the data and optimal q") {
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 10; ++trial) {
    const MiniBatch b = random_batch(gen, 5);
    const KernelParams k{1.0, 0.4};
    const auto z = InducingSet::explicit_points(b.inputs);
    const SparseGPModel prior = SparseGPModel::at_prior(k, MeanFn{}, 0.1, z);
    const SparseGPModel opt = prior.with_q(optimal_q(prior, b));
    const double exact = gp_log_marginal(b.as_dataset(), k, MeanFn{}, 0.1);
    CHECK(std::abs(elbo(opt, b) - exact) < 1e-4);
    // Stationary in the variational block.
    const ElboGradient g = elbo_grad(opt, b);
    CHECK(g.mean.cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("bound is invariant to permutation of the batch") {
  std::mt19937_64 gen(12);
  const SparseGPModel m = random_model(gen, 6);
  const MiniBatch b = random_batch(gen, 15);
  std::vector<std::size_t> perm(b.size());
  std::iota(perm.begin(), perm.end(), 0u);
  std::shuffle(perm.begin(), perm.end(), gen);
  MiniBatch p;
  for (auto i : perm) p.push_back(b.inputs[i], b.targets[i]);
  CHECK(elbo(m, p) == doctest::Approx(elbo(m, b)).epsilon(1e-12));
}

TEST_CASE("analytic gradient matches finite differences in every block") {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const auto l = static_cast<Eigen::Index>(2 + gen() % 7);
    const SparseGPModel m = random_model(gen, l, trial % 2 ? MeanKind::Zero : MeanKind::Identity);
    const MiniBatch b = random_batch(gen, 1 + gen() % 12);
    const double scale = trial % 3 == 0 ? 2.5 : 1.0;
    const auto f = [&](const VectorXd& p) { return elbo(unpack_parameters(m, p), b, scale); };
    const VectorXd fd = oracle::finite_difference(f, pack_parameters(m), 1e-4);
    const VectorXd an = elbo_grad(m, b, scale).flatten();
    const Blocks a = split(an, l);
    const Blocks n = split(fd, l);
    CAPTURE(trial);
    CHECK(oracle::block_rel_err(a.noise, n.noise) < 1e-4);
    CHECK(oracle::block_rel_err(a.kernel, n.kernel) < 1e-4);
    CHECK(oracle::block_rel_err(a.mean, n.mean) < 1e-4);
    CHECK(oracle::block_rel_err(a.chol, n.chol) < 1e-4);
  }
}

TEST_CASE("whitened gradient matches finite differences of the whitened parameterization") {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index l = 5;
    const SparseGPModel m = random_model(gen, l);
    const MiniBatch b = random_batch(gen, 8);
    const MatrixXd lk_inv = m.prior_chol().inverse();
    const VectorXd v = lk_inv * (m.q().mean - m.prior_mean());
    const MatrixXd rt = (lk_inv * m.q().chol).triangularView<Eigen::Lower>();

    // phi = [log noise, log var, log ls, v, R~ lower (log diag)]
    const auto build = [&](const VectorXd& phi) {
      KernelParams k = m.kernel();
      k.signal_variance = std::exp(phi(1));
      k.lengthscale = std::exp(phi(2));
      const SparseGPModel base = SparseGPModel::at_prior(k, m.mean_fn(), std::exp(phi(0)), m.inducing());
      MatrixXd r_tilde = MatrixXd::Zero(l, l);
      Eigen::Index idx = 3 + l;
      for (Eigen::Index j = 0; j < l; ++j)
        for (Eigen::Index i = j; i < l; ++i) r_tilde(i, j) = i == j ? std::exp(phi(idx++)) : phi(idx++);
      VariationalParams q{base.prior_mean() + base.prior_chol() * phi.segment(3, l), base.prior_chol() * r_tilde};
      return base.with_q(q);
    };
    VectorXd phi(3 + l + l * (l + 1) / 2);
    phi(0) = std::log(m.noise_var());
    phi(1) = std::log(m.kernel().signal_variance);
    phi(2) = std::log(m.kernel().lengthscale);
    phi.segment(3, l) = v;
    Eigen::Index idx = 3 + l;
    for (Eigen::Index j = 0; j < l; ++j)
      for (Eigen::Index i = j; i < l; ++i) phi(idx++) = i == j ? std::log(rt(i, j)) : rt(i, j);

    const VectorXd fd = oracle::finite_difference([&](const VectorXd& p) { return elbo(build(p), b); }, phi, 1e-4);
    const WhitenedGradient w = whiten_gradient(m, elbo_grad(m, b));
    CHECK(std::abs(w.log_noise_var - fd(0)) / std::max(std::abs(fd(0)), 1e-8) < 1e-4);
    CHECK(oracle::block_rel_err(Eigen::Vector2d(w.log_signal_variance, w.log_lengthscale), fd.segment(1, 2)) < 1e-4);
    CHECK(oracle::block_rel_err(w.mean, fd.segment(3, l)) < 1e-4);
    VectorXd chol_flat(l * (l + 1) / 2);
    idx = 0;
    for (Eigen::Index j = 0; j < l; ++j)
      for (Eigen::Index i = j; i < l; ++i) chol_flat(idx++) = w.chol(i, j);
    CHECK(oracle::block_rel_err(chol_flat, fd.tail(l * (l + 1) / 2)) < 1e-4);
  }
}

TEST_CASE("at the prior with vanishing data weight the mean gradient vanishes") {
  const auto z = InducingSet::grid(0.0, 1.0, 8);
  const auto m = SparseGPModel::at_prior(KernelParams{1.0, 0.3}, MeanFn{}, 0.1, z);
  MiniBatch b;
  b.push_back(0.3, 0.9);
  const ElboGradient g = elbo_grad(m, b, 1e-14);
  CHECK(g.mean.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gradient data term is additive over repeated pairs") {
  std::mt19937_64 gen(90);
  const SparseGPModel m = random_model(gen, 5);
  MiniBatch one;
  one.push_back(0.37, 0.52);
  MiniBatch many;
  for (int i = 0; i < 7; ++i) many.push_back(0.37, 0.52);
  const VectorXd g0 = elbo_grad(m, MiniBatch{}).flatten();
  const VectorXd g1 = elbo_grad(m, one).flatten() - g0;
  const VectorXd g7 = elbo_grad(m, many).flatten() - g0;
  CHECK((g7 - 7.0 * g1).norm() <= 1e-9 * std::max(1.0, g7.norm()));
}

TEST_CASE("predictive at the prior is the prior predictive") {
  const auto z = InducingSet::grid(0.0, 1.0, 10);
  const auto m = SparseGPModel::at_prior(KernelParams{1.4, 0.2}, MeanFn{MeanKind::Identity}, 0.1, z);
  for (double x : {-0.3, 0.05, 0.5, 0.77, 1.4}) {
    const Prediction p = predict(m, x);
    CHECK(p.mean == doctest::Approx(x).epsilon(1e-9));
    CHECK(p.variance == doctest::Approx(1.4 + 0.1).epsilon(1e-6));
  }
}

TEST_CASE("predictive far from inducing points reverts to the prior") {
  std::mt19937_64 gen(3);
  const SparseGPModel m = random_model(gen, 6);
  const double x = 1.0 + 10.0 * m.kernel().lengthscale * 3.0;
  const Prediction p = predict(m, x);
  CHECK(std::abs(p.mean - x) < 1e-6);
  CHECK(std::abs(p.variance - (m.kernel().signal_variance + m.noise_var())) < 1e-6);
}

TEST_CASE("predictive matches Monte-Carlo over u ~ q") {
  std::mt19937_64 gen(515);
  const SparseGPModel m = random_model(gen, 5);
  const double x = 0.43;
  MatrixXd k = kernel_matrix(m.kernel(), m.inducing().points, m.inducing().points);
  k.diagonal().array() += jitter(m.kernel());
  const std::vector<double> xs{x};
  const VectorXd kx = kernel_matrix(m.kernel(), m.inducing().points, xs).col(0);
  const VectorXd a = k.fullPivLu().solve(kx);
  const double cond_var = m.kernel().signal_variance - kx.dot(a);

  std::normal_distribution<double> n;
  const int samples = 100000;
  double sum = 0.0, sum_sq = 0.0;
  VectorXd e(5);
  for (int i = 0; i < samples; ++i) {
    for (int j = 0; j < 5; ++j) e(j) = n(gen);
    const VectorXd u = m.q().mean + m.q().chol * e;
    const double f = x + a.dot(u - m.prior_mean()) + std::sqrt(cond_var + m.noise_var()) * n(gen);
    sum += f;
    sum_sq += f * f;
  }
  const double mc_mean = sum / samples;
  const double mc_var = sum_sq / samples - mc_mean * mc_mean;
  const Prediction p = predict(m, x);
  const double se_mean = std::sqrt(mc_var / samples);
  const double se_var = mc_var * std::sqrt(2.0 / samples);
  CHECK(std::abs(p.mean - mc_mean) < 3.0 * se_mean);
  CHECK(std::abs(p.variance - mc_var) < 3.0 * se_var);
}

TEST_CASE("predictive variance is at least the noise variance") {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 20; ++trial) {
    const SparseGPModel m = random_model(gen, 8);
    std::vector<double> xs(40);
    std::uniform_real_distribution<double> u(-1.0, 2.0);
    for (double& x : xs) x = u(gen);
    const Predictions p = predict(m, xs);
    CHECK((p.variance.array() >= m.noise_var()).all());
  }
}

TEST_CASE("zero gradient leaves the model unchanged and advances the step count") {
  std::mt19937_64 gen(14);
  const SparseGPModel m = random_model(gen, 6);
  ElboGradient zero = elbo_grad(m, random_batch(gen, 4));
  zero.log_noise_var = zero.log_signal_variance = zero.log_lengthscale = 0.0;
  zero.mean.setZero();
  zero.chol.setZero();
  const auto [next, opt] = sgd_step(m, zero, OptimizerState{});
  CHECK(opt.step_count == 1);
  CHECK(next.noise_var() == m.noise_var());
  CHECK(next.kernel() == m.kernel());
  CHECK(next.q().mean == m.q().mean);
  CHECK(next.q().chol == m.q().chol);
}

TEST_CASE("learning rate follows the decay schedule") {
  OptimizerState s;
  s.config.base_rate = 0.05;
  s.config.decay_steps = 1000.0;
  for (std::uint64_t t : {0u, 1u, 500u, 1000u, 25000u}) {
    s.step_count = t;
    CHECK(s.rate() == doctest::Approx(0.05 / (1.0 + static_cast<double>(t) / 1000.0)).epsilon(1e-15));
  }
}

TEST_CASE("steps keep S positive definite and the noise variance positive") {
  std::mt19937_64 gen(88);
  std::normal_distribution<double> n(0.0, 50.0);
  for (int trial = 0; trial < 30; ++trial) {
    const SparseGPModel m = random_model(gen, 5);
    ElboGradient g = elbo_grad(m, random_batch(gen, 3));
    g.log_noise_var = n(gen);
    for (Eigen::Index i = 0; i < g.mean.size(); ++i) g.mean(i) = n(gen);
    g.chol = oracle::random_lower(gen, 5, 50.0, -50.0, 50.0);
    OptimizerState opt;
    opt.config.base_rate = 0.5;
    try {
      const auto [next, o] = sgd_step(m, g, opt);
      CHECK(next.noise_var() > 0.0);
      CHECK((next.q().chol.diagonal().array() > 0.0).all());
      Eigen::LLT<MatrixXd> llt(next.q().covariance());
      CHECK(llt.info() == Eigen::Success);
    } catch (const InvalidArgument&) {
      // Overflowing steps are refused; that is also acceptable.
    }
  }
}

TEST_CASE("non-finite gradients are refused") {
  std::mt19937_64 gen(1);
  const SparseGPModel m = random_model(gen, 4);
  ElboGradient g = elbo_grad(m, random_batch(gen, 3));
  g.mean(0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sgd_step(m, g, OptimizerState{}), InvalidArgument);
}

TEST_CASE("repeated full-batch steps ascend the bound") {
  std::mt19937_64 gen(17);
  const auto z = InducingSet::grid(0.0, 1.0, 10);
  SparseGPModel m = SparseGPModel::at_prior(KernelParams{1.0, 0.1}, MeanFn{}, 0.1, z);
  const MiniBatch b = random_batch(gen, 20);
  OptimizerState opt;
  opt.config.base_rate = 0.05;
  std::vector<double> values;
  for (int i = 0; i < 500; ++i) {
    const ElboResult r = elbo_with_grad(m, b);
    values.push_back(r.value);
    std::tie(m, opt) = sgd_step(m, r.grad, opt);
  }
  values.push_back(elbo(m, b));
  for (std::size_t i = values.size() - 100; i < values.size(); ++i) CHECK(values[i] >= values[i - 1] - 1e-6);
  CHECK(values.back() > values.front());
}
