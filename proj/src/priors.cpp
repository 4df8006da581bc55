#include "pthmm/priors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pthmm/hmm.hpp"

namespace pthmm {

PriorConfig PriorConfig::defaults(const ModelSpec& spec) {
  PriorConfig config;
  config.delta_concentration.assign(spec.n_states, 1.0);
  config.streams.resize(spec.streams.size());
  for (std::size_t p = 0; p < spec.streams.size(); ++p) {
    if (spec.streams[p] == StreamFamily::Poisson) {
      config.streams[p].rate_prior = {1.5, 0.5};
    } else {
      config.streams[p].mean_prior = {3.0, 0.01};
      config.streams[p].sd_prior = {3.0, 0.01};
    }
  }
  return config;
}

void PriorConfig::validate(const ModelSpec& spec) const {
  if (delta_concentration.size() != static_cast<std::size_t>(spec.n_states)) {
    throw ConfigError("delta concentration has wrong length");
  }
  for (double c : delta_concentration) {
    if (!(c > 0.0)) throw ConfigError("Dirichlet concentrations must be > 0");
  }
  if (streams.size() != spec.streams.size()) {
    throw ConfigError("prior stream count mismatch");
  }
  for (std::size_t p = 0; p < streams.size(); ++p) {
    const StreamPrior& sp = streams[p];
    const bool ok =
        spec.streams[p] == StreamFamily::Poisson
            ? sp.rate_prior.shape > 0.0 && sp.rate_prior.rate > 0.0
            : sp.mean_prior.shape > 0.0 && sp.mean_prior.rate > 0.0 &&
                  sp.sd_prior.shape > 0.0 && sp.sd_prior.rate > 0.0;
    if (!ok) throw ConfigError("Gamma hyperparameters must be positive");
  }
}

double gumbel_logpdf(double x, double location) {
  const double u = x - location;
  return -u - std::exp(-u);
}

double dirichlet_logpdf(std::span<const double> x,
                        std::span<const double> concentration) {
  double sum = 0.0;
  double conc_sum = 0.0;
  double lp = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) return kNegInf;
    sum += x[i];
    conc_sum += concentration[i];
    lp += (concentration[i] - 1.0) * std::log(x[i]) -
          std::lgamma(concentration[i]);
  }
  if (std::abs(sum - 1.0) > 1e-9) return kNegInf;
  return lp + std::lgamma(conc_sum);
}

double gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(x) - rate * x;
}

double log_prior(const ModelSpec& spec, const ParamVector& theta,
                 const PriorConfig& config) {
  const int n = spec.n_states;
  double lp = 0.0;
  for (int i = 0; i < n; ++i) {
    lp += gumbel_logpdf(-theta.zeta[i], 0.0);
    for (int k = 0; k < n - 1; ++k) {
      lp += gumbel_logpdf(-theta.alpha0[i][k], theta.zeta[i]);
      for (int l = 0; l < spec.covariate_levels; ++l) {
        lp += gumbel_logpdf(-theta.alpha1[i][k][l],
                            theta.alpha0[i][k] + theta.zeta[i]);
      }
    }
  }
  lp += dirichlet_logpdf(theta.delta, config.delta_concentration);
  for (std::size_t p = 0; p < spec.streams.size(); ++p) {
    const EmissionParams& e = theta.emissions[p];
    const StreamPrior& sp = config.streams[p];
    for (int s = 0; s < n; ++s) {
      if (e.family == StreamFamily::Poisson) {
        lp += gamma_logpdf(e.rate[s], sp.rate_prior.shape, sp.rate_prior.rate);
      } else {
        lp += gamma_logpdf(e.mean[s], sp.mean_prior.shape, sp.mean_prior.rate);
        lp += gamma_logpdf(e.sd[s], sp.sd_prior.shape, sp.sd_prior.rate);
      }
    }
  }
  return lp;
}

ParamVector sample_prior(const ModelSpec& spec, const PriorConfig& config,
                         Rng& rng) {
  const int n = spec.n_states;
  const int l_count = spec.covariate_levels;
  ParamVector theta;
  theta.delta = rng.dirichlet(config.delta_concentration);
  theta.zeta.resize(n);
  theta.alpha0.assign(n, std::vector<double>(n - 1));
  if (l_count > 0) {
    theta.alpha1.assign(
        n, std::vector<std::vector<double>>(n - 1, std::vector<double>(l_count)));
  }
  // Constructive draw: zeta_ij = log(-log U_ij) are iid, the row diagonal
  // is the latent variable and off-diagonals become working parameters.
  for (int i = 0; i < n; ++i) {
    const double zeta_ii = std::log(-std::log(rng.uniform()));
    theta.zeta[i] = zeta_ii;
    for (int k = 0; k < n - 1; ++k) {
      const double zeta_ij = std::log(-std::log(rng.uniform()));
      theta.alpha0[i][k] = zeta_ij - zeta_ii;
      for (int l = 0; l < l_count; ++l) {
        const double zeta_ij_l = std::log(-std::log(rng.uniform()));
        theta.alpha1[i][k][l] = zeta_ij_l - zeta_ij;
      }
    }
  }
  theta.emissions.resize(spec.streams.size());
  for (std::size_t p = 0; p < spec.streams.size(); ++p) {
    EmissionParams& e = theta.emissions[p];
    e.family = spec.streams[p];
    const StreamPrior& sp = config.streams[p];
    if (e.family == StreamFamily::Poisson) {
      e.rate.resize(n);
      for (int s = 0; s < n; ++s) {
        e.rate[s] = rng.gamma(sp.rate_prior.shape, sp.rate_prior.rate);
      }
    } else {
      e.mean.resize(n);
      e.sd.resize(n);
      for (int s = 0; s < n; ++s) {
        e.mean[s] = rng.gamma(sp.mean_prior.shape, sp.mean_prior.rate);
        e.sd[s] = rng.gamma(sp.sd_prior.shape, sp.sd_prior.rate);
      }
    }
  }
  return theta;
}

ParamVector sample_prior(const ModelSpec& spec, const PriorConfig& config,
                         std::uint64_t seed) {
  Rng rng(seed);
  return sample_prior(spec, config, rng);
}

double tempered_prior_demo(double beta, int n_states, std::size_t n_draws,
                           std::uint64_t seed) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw std::domain_error("tempered_prior_demo requires beta in (0, 1]");
  }
  const int n = n_states;
  Rng rng(seed);
  // Random-walk MH on one (zeta_ii, alpha0 row) block targeting the
  // beta-powered Gumbel prior density.
  auto log_target = [&](const std::vector<double>& x) {
    double lp = gumbel_logpdf(-x[0], 0.0);
    for (int k = 1; k < n; ++k) lp += gumbel_logpdf(-x[k], x[0]);
    return beta * lp;
  };
  std::vector<double> x(n, 0.0);
  double lp = log_target(x);
  const double step = 2.4 / std::sqrt(static_cast<double>(n) * beta);
  const std::size_t thin = 5;
  const std::size_t burn = 2000;
  std::vector<double> proposal(n);
  double sum_max = 0.0;
  std::size_t kept = 0;
  for (std::size_t it = 0; it < burn + n_draws * thin; ++it) {
    for (int k = 0; k < n; ++k) proposal[k] = x[k] + step * rng.normal();
    const double lp_new = log_target(proposal);
    if (std::log(rng.uniform()) < lp_new - lp) {
      x = proposal;
      lp = lp_new;
    }
    if (it >= burn && (it - burn) % thin == 0) {
      const std::span<const double> alpha0(x.data() + 1,
                                           static_cast<std::size_t>(n - 1));
      const TransitionRow row = tpm_row(alpha0, {}, 0);
      sum_max += *std::max_element(row.begin(), row.end());
      ++kept;
    }
  }
  return sum_max / static_cast<double>(kept);
}

}  // namespace pthmm
