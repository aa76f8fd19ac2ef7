#include <algorithm>
#include <cmath>

#include "output.hpp"
#include "svpf/sparse_gp.hpp"
#include "svpf_tools/commands.hpp"
#include "svpf_tools/csv.hpp"

namespace svpf::cli {

namespace {

using Eigen::Index;
using Eigen::VectorXd;

// Central differences at h and h/2 combined by one Richardson step.
VectorXd central_differences(const SparseGPModel& model, const MiniBatch& batch, double scale, double h) {
  const VectorXd x = pack_parameters(model);
  const auto f = [&](const VectorXd& p) { return elbo(unpack_parameters(model, p), batch, scale); };
  VectorXd g(x.size());
  for (Index i = 0; i < x.size(); ++i) {
    const auto diff = [&](double step) {
      VectorXd a = x, b = x;
      a(i) += step;
      b(i) -= step;
      return (f(a) - f(b)) / (2.0 * step);
    };
    const double d1 = diff(h);
    const double d2 = diff(0.5 * h);
    g(i) = (4.0 * d2 - d1) / 3.0;
  }
  return g;
}

double block_error(const VectorXd& analytic, const VectorXd& numeric) {
  const double denom = std::max(numeric.cwiseAbs().maxCoeff(), 1e-8);
  return (analytic - numeric).cwiseAbs().maxCoeff() / denom;
}

struct Case {
  SparseGPModel model;
  MiniBatch batch;
  double scale;
};

Case random_case(Rng& rng, std::size_t index) {
  const auto l = static_cast<std::size_t>(2 + rng.next_u64() % 9);
  KernelParams k;
  k.signal_variance = rng.uniform(0.5, 2.0);
  k.lengthscale = rng.uniform(0.2, 0.6);
  k.order = static_cast<MaternOrder>(rng.next_u64() % 3);
  const MeanFn mean{index % 2 == 0 ? MeanKind::Identity : MeanKind::Zero};
  const SparseGPModel prior = SparseGPModel::at_prior(k, mean, rng.uniform(0.05, 0.5), InducingSet::grid(0.0, 1.0, l));

  const auto n = static_cast<Index>(l);
  VariationalParams q;
  q.mean = prior.prior_mean();
  for (Index i = 0; i < n; ++i) q.mean(i) += 0.5 * rng.normal();
  q.chol = Eigen::MatrixXd::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    q.chol(j, j) = rng.uniform(0.2, 0.8);
    for (Index i = j + 1; i < n; ++i) q.chol(i, j) = 0.2 * rng.normal();
  }

  MiniBatch batch;
  const std::size_t size = 1 + rng.next_u64() % 20;
  for (std::size_t i = 0; i < size; ++i) {
    const double x = rng.uniform(-0.1, 1.1);
    batch.push_back(x, x + 0.3 * std::sin(6.0 * x) + 0.3 * rng.normal());
  }
  return {prior.with_q(q), batch, index % 3 == 0 ? 2.5 : 1.0};
}

}  // namespace

GradcheckResult cmd_gradcheck(const RunConfig& cfg) {
  cfg.validate();
  prepare_out(cfg.out);
  Rng rng(cfg.seed);

  GradcheckResult result;
  const std::array<const char*, 4> names{"noise", "kernel", "mean", "chol"};
  for (std::size_t b = 0; b < 4; ++b) result.blocks[b].name = names[b];

  for (std::size_t c = 0; c < cfg.gradcheck_configs; ++c) {
    const Case tc = random_case(rng, c);
    const auto l = static_cast<Index>(tc.model.inducing().size());
    VectorXd analytic = elbo_grad(tc.model, tc.batch, tc.scale).flatten();
    const VectorXd numeric = central_differences(tc.model, tc.batch, tc.scale, 1e-4);

    const std::array<std::pair<Index, Index>, 4> spans{
        std::pair<Index, Index>{0, 1}, {1, 2}, {3, l}, {3 + l, analytic.size() - 3 - l}};
    for (std::size_t b = 0; b < 4; ++b) {
      auto seg = analytic.segment(spans[b].first, spans[b].second);
      if (cfg.gradcheck_corrupt == names[b]) seg.array() += 1e-2 * (1.0 + seg.array().abs());
      const double err = block_error(seg, numeric.segment(spans[b].first, spans[b].second));
      result.blocks[b].max_rel_err = std::max(result.blocks[b].max_rel_err, err);
    }
  }

  result.passed = true;
  CsvWriter csv(config_hash_hex(cfg), {"block", "max_rel_err", "tolerance", "passed"});
  for (auto& block : result.blocks) {
    block.passed = block.max_rel_err < cfg.gradcheck_tolerance;
    result.passed = result.passed && block.passed;
    csv.cell(block.name).cell(block.max_rel_err).cell(cfg.gradcheck_tolerance).cell(block.passed ? "1" : "0").end_row();
  }
  csv.write(cfg.out / "gradcheck.csv");
  return result;
}

}  // namespace svpf::cli
