#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "svpf/particle_filter.hpp"

using namespace svpf;

namespace {

std::vector<std::size_t> counts_of(const std::vector<std::size_t>& idx, std::size_t n) {
  std::vector<std::size_t> c(n, 0);
  for (auto i : idx) ++c[i];
  return c;
}

std::vector<double> random_weights(std::mt19937_64& gen, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(n);
  for (double& x : w) x = e(gen);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;
  return w;
}

ParticleSet weighted_set(std::vector<double> states, std::vector<double> weights) {
  ParticleSet ps = ParticleSet::uniform(std::move(states));
  ps.weights = std::move(weights);
  return ps;
}

}  // namespace

TEST_CASE("ESS examples") {
  CHECK(ess(ParticleSet::uniform(std::vector<double>(100, 0.0))) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(ess(weighted_set({0.0, 1.0, 2.0}, {0.0, 1.0, 0.0})) == 1.0);
  CHECK(ess(weighted_set({0.0, 1.0, 2.0, 3.0}, {0.5, 0.5, 0.0, 0.0})) == 2.0);
}

TEST_CASE("estimate examples") {
  CHECK(estimate(ParticleSet::uniform({0.0, 1.0})) == 0.5);
  CHECK(estimate(weighted_set({3.0, -7.25, 2.0}, {0.0, 1.0, 0.0})) == -7.25);
}

TEST_CASE("particle set validation") {
  CHECK_THROWS_AS(ParticleSet::uniform({1.0}).validate(), InvalidArgument);
  CHECK_THROWS_AS(weighted_set({1.0, 2.0}, {0.5, -0.5}).validate(), InvalidArgument);
  CHECK_THROWS_AS(weighted_set({1.0, NAN}, {0.5, 0.5}).validate(), InvalidArgument);
  CHECK_NOTHROW(ParticleSet::uniform({1.0, 2.0}).validate());
}

TEST_CASE("propagate keeps weights and the lag pairing") {
  Rng rng(5);
  ParticleSet ps = weighted_set({0.1, 0.5, -2.0, 3.0}, {0.1, 0.2, 0.3, 0.4});
  const ParticleSet out = propagate(ps, LinearGaussianTransition{0.9, 0.0, 1.0}, rng);
  CHECK(out.size() == ps.size());
  CHECK(out.previous == ps.current);
  CHECK(out.weights == ps.weights);
}

TEST_CASE("propagate with vanishing variance returns the predictive mean") {
  Rng rng(6);
  const ParticleSet out = propagate(ParticleSet::uniform({0.0, 1.0, 2.0}), LinearGaussianTransition{2.0, 1.0, 0.0}, rng);
  CHECK(out.current[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(out.current[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(out.current[2] == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("propagated copies have the predictive mean") {
  Rng rng(7);
  const auto z = InducingSet::grid(0.0, 1.0, 10);
  const auto m = SparseGPModel::at_prior(KernelParams{1.0, 0.1}, MeanFn{}, 0.1, z);
  const std::size_t n = 100000;
  const ParticleSet out = propagate(ParticleSet::uniform(std::vector<double>(n, 0.4)), m, rng);
  const double mean = std::accumulate(out.current.begin(), out.current.end(), 0.0) / static_cast<double>(n);
  const Prediction p = predict(m, 0.4);
  CHECK(std::abs(mean - p.mean) < 3.0 * std::sqrt(p.variance / static_cast<double>(n)));
}

TEST_CASE("reweight symmetry and normalization") {
  const MeasurementModel mm{{}, 0.2};
  SUBCASE("identical particles keep uniform weights") {
    const auto r = reweight(ParticleSet::uniform(std::vector<double>(5, 1.3)), 0.2, mm);
    for (double w : r.particles.weights) CHECK(w == doctest::Approx(0.2).epsilon(1e-15));
    CHECK_FALSE(r.degenerate);
  }
  SUBCASE("particles equidistant from z get equal weight") {
    const auto r = reweight(ParticleSet::uniform({0.25, 0.75}), 0.5, mm);
    CHECK(r.particles.weights[0] == r.particles.weights[1]);
  }
  SUBCASE("weights sum to one") {
    std::mt19937_64 gen(1);
    std::normal_distribution<double> n(0.0, 3.0);
    std::vector<double> xs(200);
    for (double& x : xs) x = n(gen);
    const auto r = reweight(weighted_set(xs, random_weights(gen, 200)), 0.7, mm);
    const double total = std::accumulate(r.particles.weights.begin(), r.particles.weights.end(), 0.0);
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("reweight survives likelihood underflow") {
  const MeasurementModel mm{{}, 1e-6};
  const auto far = reweight(ParticleSet::uniform({1e6, 1e6 + 1.0}), 0.0, mm);
  // Log-space weighting keeps the relative ordering even when every density underflows.
  CHECK_FALSE(far.degenerate);
  CHECK(far.particles.weights[0] == 1.0);
  const auto dead = reweight(weighted_set({1.0, 2.0}, {0.0, 0.0}), 0.0, mm);
  CHECK(dead.degenerate);
  CHECK(dead.particles.weights == std::vector<double>{0.5, 0.5});
}

TEST_CASE("reweight applies a nonlinear measurement function") {
  const MeasurementModel mm{[](double x) { return x * x; }, 0.5};
  const auto r = reweight(ParticleSet::uniform({-1.0, 1.0, 0.0}), 1.0, mm);
  CHECK(r.particles.weights[0] == r.particles.weights[1]);
  CHECK(r.particles.weights[0] > r.particles.weights[2]);
}

TEST_CASE("systematic resampling examples") {
  Rng rng(9);
  SUBCASE("uniform weights pick every particle once") {
    const auto idx = resample_indices(std::vector<double>(7, 1.0 / 7.0), 7, ResampleScheme::Systematic, rng);
    CHECK(counts_of(idx, 7) == std::vector<std::size_t>(7, 1));
  }
  SUBCASE("exactly proportional weights") {
    for (int rep = 0; rep < 100; ++rep) {
      const auto idx = resample_indices(std::vector<double>{0.5, 0.25, 0.25}, 4, ResampleScheme::Systematic, rng);
      CHECK(counts_of(idx, 3) == std::vector<std::size_t>{2, 1, 1});
    }
  }
  SUBCASE("zero weights are never selected") {
    const auto idx = resample_indices(std::vector<double>{0.0, 0.5, 0.0, 0.5, 0.0}, 10, ResampleScheme::Systematic, rng);
    CHECK(counts_of(idx, 5) == std::vector<std::size_t>{0, 5, 0, 5, 0});
  }
}

TEST_CASE("systematic counts lie between floor and ceiling of N w") {
  std::mt19937_64 gen(10);
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1000;
    const auto w = random_weights(gen, n);
    const auto c = counts_of(resample_indices(w, n, ResampleScheme::Systematic, rng), n);
    CHECK(std::accumulate(c.begin(), c.end(), std::size_t{0}) == n);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double nw = static_cast<double>(n) * w[i];
      ok = ok && static_cast<double>(c[i]) >= std::floor(nw) - 1e-9 * nw && static_cast<double>(c[i]) <= std::ceil(nw) + 1e-9 * nw;
      ok = ok && std::abs(static_cast<double>(c[i]) / static_cast<double>(n) - w[i]) <= 1.0 / static_cast<double>(n);
    }
    CHECK(ok);
  }
}

TEST_CASE("resample_minkl returns equally weighted joint pairs") {
  Rng rng(12);
  ParticleSet ps = weighted_set({1.0, 2.0, 3.0, 4.0}, {0.1, 0.4, 0.1, 0.4});
  ps.previous = {-1.0, -2.0, -3.0, -4.0};
  for (auto scheme : {ResampleScheme::Systematic, ResampleScheme::Multinomial}) {
    const ParticleSet out = resample_minkl(ps, rng, scheme);
    CHECK(out.size() == 4);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(out.previous[i] == -out.current[i]);
      CHECK(out.weights[i] == 0.25);
    }
  }
}

TEST_CASE("multinomial resampling matches weights on average") {
  Rng rng(13);
  const std::vector<double> w{0.1, 0.6, 0.3};
  std::vector<double> freq(3, 0.0);
  const std::size_t draws = 200000;
  for (auto i : resample_indices(w, draws, ResampleScheme::Multinomial, rng)) freq[i] += 1.0 / static_cast<double>(draws);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(freq[i] - w[i]) < 3.0 * std::sqrt(w[i] * (1 - w[i]) / draws));
}

TEST_CASE("systematic replication KL is no worse than multinomial on average") {
  std::mt19937_64 gen(14);
  Rng rng(15);
  const std::size_t n = 50;
  const std::size_t draws = 500;
  // Weights bounded below by 1/(2n) so systematic counts are never zero at 10 n draws.
  std::uniform_real_distribution<double> u(1.0, 3.0);
  std::vector<double> w(n);
  for (double& x : w) x = u(gen);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= total;

  double systematic = 0.0;
  double multinomial = 0.0;
  const int trials = 1000;
  for (int t = 0; t < trials; ++t) {
    systematic += resampling_kl(w, counts_of(resample_indices(w, draws, ResampleScheme::Systematic, rng), n)) / trials;
    multinomial += resampling_kl(w, counts_of(resample_indices(w, draws, ResampleScheme::Multinomial, rng), n)) / trials;
  }
  CHECK(std::isfinite(systematic));
  CHECK(systematic <= multinomial);
}

TEST_CASE("resampling KL examples") {
  const std::vector<double> w{0.5, 0.25, 0.25};
  CHECK(resampling_kl(w, std::vector<std::size_t>{2, 1, 1}) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  CHECK(std::isinf(resampling_kl(w, std::vector<std::size_t>{3, 1, 0})));
  CHECK(resampling_kl(w, std::vector<std::size_t>{3, 1, 1}) ==
        doctest::Approx(0.5 * std::log(0.5 * 5 / 3.0) + 0.5 * std::log(0.25 * 5 / 1.0)).epsilon(1e-14));
}

TEST_CASE("one measurement update agrees with the Kalman filter") {
  Rng rng(16);
  const std::size_t n = 10000;
  oracle::ScalarKalman kf{0.9, 1.0, 0.5, 0.3, 2.0};
  std::vector<double> xs(n);
  for (double& x : xs) x = rng.normal(kf.mean, std::sqrt(kf.var));
  const ParticleSet prior = ParticleSet::uniform(xs);
  const double z = 1.1;
  const MeasurementModel mm{{}, kf.r};
  const auto post = reweight(propagate(prior, LinearGaussianTransition{kf.a, 0.0, kf.q}, rng), z, mm);
  kf.update(z);
  const double est = estimate(post.particles);
  const double se = std::sqrt(kf.var / ess(post.particles));
  CHECK(std::abs(est - kf.mean) < 3.0 * se);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += post.particles.weights[i] * (post.particles.current[i] - est) * (post.particles.current[i] - est);
  CHECK(std::abs(var - kf.var) < 3.0 * kf.var * std::sqrt(2.0 / ess(post.particles)));
}

TEST_CASE("filter_step gates the first resample on ESS") {
  Rng rng(17);
  const LinearGaussianTransition dyn{1.0, 0.0, 0.1};
  const MeasurementModel mm{{}, 0.1};
  const FilterConfig cfg{};
  const auto even = filter_step(ParticleSet::uniform({0.0, 1.0, 2.0, 3.0}), dyn, 1.0, mm, cfg, rng);
  CHECK_FALSE(even.resampled_before_propagation);
  const auto skewed = filter_step(weighted_set({0.0, 1.0, 2.0, 3.0}, {0.97, 0.01, 0.01, 0.01}), dyn, 1.0, mm, cfg, rng);
  CHECK(skewed.resampled_before_propagation);
  for (double w : skewed.resampled.weights) CHECK(w == 0.25);
  CHECK(skewed.resampled.size() == 4);
  CHECK_THROWS_AS(filter_step(ParticleSet::uniform({0.0, 1.0}), dyn, NAN, mm, cfg, rng), InvalidArgument);
}
