#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "helpers.hpp"
#include "pthmm/diagnostics.hpp"
#include "pthmm/hmm.hpp"
#include "pthmm/mcmc.hpp"
#include "pthmm/target.hpp"

using namespace pthmm;

namespace {

// 1-state Poisson model: the lambda posterior is conjugate,
// Gamma(1.5 + sum y, 0.5 + T) under the default prior.
struct ConjugateSetup {
  ModelSpec spec;
  ObservationSet data;
  PriorConfig prior;
  double post_shape = 0.0;
  double post_rate = 0.0;
};

ConjugateSetup conjugate_poisson(std::size_t t_len, std::uint64_t seed) {
  ConjugateSetup s;
  s.spec.n_states = 1;
  s.spec.streams = {StreamFamily::Poisson};
  s.prior = PriorConfig::defaults(s.spec);

  ParamVector truth;
  truth.delta = {1.0};
  truth.alpha0 = {{}};
  truth.zeta = {0.1};
  EmissionParams e;
  e.family = StreamFamily::Poisson;
  e.rate = {4.2};
  truth.emissions = {e};
  s.data = simulate(s.spec, truth, {t_len}, {}, seed);

  double sum = 0.0;
  for (double y : s.data.sequences[0].values) sum += y;
  s.post_shape = 1.5 + sum;
  s.post_rate = 0.5 + static_cast<double>(t_len);
  return s;
}

// Runs sweeps with burn-in adaptation and returns the lambda chain.
std::vector<double> run_lambda_chain(const ConjugateSetup& s,
                                     std::size_t n_sweeps, double beta,
                                     std::uint64_t seed,
                                     std::vector<double>* ll_trace = nullptr) {
  const HmmTarget target(s.spec, s.data, s.prior);
  Rng rng(seed);
  std::vector<double> x = target.draw_init(rng);
  double lp = target.log_prior(x);
  double ll = target.log_likelihood(x);
  REQUIRE(std::isfinite(lp + ll));
  ProposalScales scales = ProposalScales::for_target(target);

  const int lambda_index = static_cast<int>(target.dim()) - 1;
  const std::size_t burn = n_sweeps / 5;
  std::vector<double> chain;
  chain.reserve(n_sweeps - burn);
  for (std::size_t h = 1; h <= n_sweeps; ++h) {
    cwmh_sweep(target, x, beta, ll, lp, scales, rng);
    if (h <= burn) {
      if (h % 250 == 0) adapt_scales(scales);
      if (h == burn) scales.frozen = true;
    } else {
      chain.push_back(x[lambda_index]);
      if (ll_trace) ll_trace->push_back(ll);
    }
  }
  return chain;
}

}  // namespace

TEST_CASE("degenerate step size accepts every block and barely moves") {
  const ConjugateSetup s = conjugate_poisson(30, 1);
  const HmmTarget target(s.spec, s.data, s.prior);
  Rng rng(2);
  std::vector<double> x = target.draw_init(rng);
  double lp = target.log_prior(x);
  double ll = target.log_likelihood(x);
  ProposalScales scales = ProposalScales::for_target(target, 1e-300);

  const std::vector<double> before = x;
  const SweepResult result = cwmh_sweep(target, x, 1.0, ll, lp, scales, rng);
  for (std::uint8_t flag : result.accepted) CHECK(flag == 1);
  for (const Block& block : target.blocks()) {
    // the simplex block round-trips through log ratios, so allow float
    // noise there; the other transforms must not move at this step size
    const double tol = block.transform == BlockTransform::Simplex ? 1e-12
                                                                  : 1e-290;
    for (std::size_t i = block.offset; i < block.offset + block.size; ++i) {
      CHECK(std::abs(x[i] - before[i]) <= tol * std::max(1.0, std::abs(before[i])));
    }
  }
}

TEST_CASE("conjugate Gamma-Poisson posterior mean is recovered") {
  const ConjugateSetup s = conjugate_poisson(50, 7);
  const std::vector<double> chain = run_lambda_chain(s, 200000, 1.0, 11);

  const double exact_mean = s.post_shape / s.post_rate;
  const double exact_sd = std::sqrt(s.post_shape) / s.post_rate;
  const double ess = ess_basic({chain});
  REQUIRE(ess > 100.0);
  const double mc_se = exact_sd / std::sqrt(ess);
  CHECK(std::abs(testutil::mean(chain) - exact_mean) < 3.0 * mc_se);
}

TEST_CASE("tempered chain has fatter log-likelihood spread") {
  const ConjugateSetup s = conjugate_poisson(50, 7);
  std::vector<double> ll_cold;
  std::vector<double> ll_hot;
  run_lambda_chain(s, 60000, 1.0, 21, &ll_cold);
  run_lambda_chain(s, 60000, 0.25, 21, &ll_hot);
  CHECK(testutil::sample_sd(ll_hot) > testutil::sample_sd(ll_cold));
}

TEST_CASE("sweeps preserve parameter-vector invariants") {
  ModelSpec spec;
  spec.n_states = 3;
  spec.streams = {StreamFamily::Poisson, StreamFamily::GammaMeanSd};
  spec.covariate_levels = 1;
  const PriorConfig prior = PriorConfig::defaults(spec);
  Rng data_rng(3);
  const ParamVector truth = testutil::random_theta(spec, data_rng);
  std::vector<std::vector<int>> covs(1, std::vector<int>(60));
  for (auto& c : covs[0]) c = static_cast<int>(data_rng.integer(2));
  const ObservationSet data = simulate(spec, truth, {60}, covs, 4);
  const HmmTarget target(spec, data, prior);

  Rng rng(5);
  std::vector<double> x = target.draw_init(rng);
  double lp = target.log_prior(x);
  double ll = target.log_likelihood(x);
  ProposalScales scales = ProposalScales::for_target(target);
  for (int h = 0; h < 2000; ++h) {
    cwmh_sweep(target, x, 0.8, ll, lp, scales, rng);
    if (h % 250 == 249) adapt_scales(scales);
  }
  const ParamVector theta = unflatten(spec, x);
  CHECK_NOTHROW(validate_params(spec, theta));
  CHECK(ll == doctest::Approx(log_likelihood(spec, theta, data)).epsilon(1e-12));
  CHECK(lp == doctest::Approx(log_prior(spec, theta, prior)).epsilon(1e-12));
}

TEST_CASE("scale adaptation") {
  ProposalScales scales;
  scales.step = {1.0, 1.0, 1.0};
  scales.attempts = {100, 100, 100};
  scales.accepts = {30, 5, 80};

  CHECK(adapt_scales(scales));
  CHECK(scales.step[0] == doctest::Approx(1.0));   // in band
  CHECK(scales.step[1] == doctest::Approx(0.7));   // below band
  CHECK(scales.step[2] == doctest::Approx(1.3));   // above band
  CHECK(scales.attempts == std::vector<std::uint64_t>{0, 0, 0});

  scales.frozen = true;
  scales.attempts = {100, 100, 100};
  scales.accepts = {0, 0, 0};
  CHECK_FALSE(adapt_scales(scales));
  CHECK(scales.step[1] == doctest::Approx(0.7));  // untouched

  // clamping
  ProposalScales tiny;
  tiny.step = {1e-8};
  tiny.attempts = {100};
  tiny.accepts = {0};
  adapt_scales(tiny);
  CHECK(tiny.step[0] == doctest::Approx(1e-8));
}

TEST_CASE("adaptation settles into the acceptance band") {
  const ConjugateSetup s = conjugate_poisson(40, 13);
  const HmmTarget target(s.spec, s.data, s.prior);
  Rng rng(17);
  std::vector<double> x = target.draw_init(rng);
  double lp = target.log_prior(x);
  double ll = target.log_likelihood(x);
  ProposalScales scales = ProposalScales::for_target(target, 200.0);

  bool in_band = false;
  for (int window = 0; window < 200 && !in_band; ++window) {
    for (int h = 0; h < 250; ++h) {
      cwmh_sweep(target, x, 1.0, ll, lp, scales, rng);
    }
    in_band = true;
    for (std::size_t b = 0; b < scales.step.size(); ++b) {
      const double rate = static_cast<double>(scales.accepts[b]) /
                          static_cast<double>(scales.attempts[b]);
      if (rate < 0.2 || rate > 0.4) in_band = false;
    }
    if (!in_band) adapt_scales(scales);
  }
  CHECK(in_band);
}

TEST_CASE("stationary marginal passes a goodness-of-fit check") {
  // 10^6 sweeps on the conjugate target; thinned lambda draws against the
  // exact Gamma posterior via an equal-mass chi-squared test.
  const ConjugateSetup s = conjugate_poisson(50, 29);
  const std::vector<double> chain = run_lambda_chain(s, 1000000, 1.0, 31);

  const std::size_t thin = 50;
  std::vector<double> draws;
  for (std::size_t i = 0; i < chain.size(); i += thin) draws.push_back(chain[i]);

  // regularized incomplete gamma via series/continued fraction
  auto gamma_cdf = [&](double x) {
    const double a = s.post_shape;
    const double z = x * s.post_rate;
    if (z <= 0.0) return 0.0;
    if (z < a + 1.0) {
      double term = 1.0 / a;
      double sum = term;
      for (int k = 1; k < 1000; ++k) {
        term *= z / (a + k);
        sum += term;
        if (term < sum * 1e-15) break;
      }
      return sum * std::exp(-z + a * std::log(z) - std::lgamma(a));
    }
    double b = z + 1.0 - a;
    double c = 1e300;
    double d = 1.0 / b;
    double h = d;
    for (int k = 1; k < 1000; ++k) {
      const double an = -k * (k - a);
      b += 2.0;
      d = an * d + b;
      if (std::abs(d) < 1e-300) d = 1e-300;
      c = b + an / c;
      if (std::abs(c) < 1e-300) c = 1e-300;
      d = 1.0 / d;
      const double delta = d * c;
      h *= delta;
      if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return 1.0 - h * std::exp(-z + a * std::log(z) - std::lgamma(a));
  };

  const int n_bins = 50;
  std::vector<double> counts(n_bins, 0.0);
  for (double v : draws) {
    int b = static_cast<int>(gamma_cdf(v) * n_bins);
    b = std::clamp(b, 0, n_bins - 1);
    counts[b] += 1.0;
  }
  const double expected = static_cast<double>(draws.size()) / n_bins;
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // chi-squared(49) upper 0.01 quantile
  CHECK(chi2 < 74.92);
}
