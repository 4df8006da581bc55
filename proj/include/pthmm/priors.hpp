#pragma once

#include <cstdint>
#include <vector>

#include "pthmm/model.hpp"
#include "pthmm/rng.hpp"

namespace pthmm {

struct GammaHyper {
  double shape = 1.0;
  double rate = 1.0;
};

// Hyperparameters for one stream: Poisson streams use `rate_prior`,
// Gamma streams use `mean_prior` and `sd_prior`.
struct StreamPrior {
  GammaHyper rate_prior;
  GammaHyper mean_prior;
  GammaHyper sd_prior;
};

struct PriorConfig {
  std::vector<double> delta_concentration;  // length N, default all ones
  std::vector<StreamPrior> streams;         // per stream

  static PriorConfig defaults(const ModelSpec& spec);
  void validate(const ModelSpec& spec) const;
};

// Gumbel(location, 1) log density: with u = x - location, -u - exp(-u).
double gumbel_logpdf(double x, double location);

double dirichlet_logpdf(std::span<const double> x,
                        std::span<const double> concentration);

double gamma_logpdf(double x, double shape, double rate);

// Joint log prior: Gumbel hierarchy on (zeta, alpha0, alpha1), Dirichlet
// on delta, Gamma on emission parameters. -inf off support.
double log_prior(const ModelSpec& spec, const ParamVector& theta,
                 const PriorConfig& config);

ParamVector sample_prior(const ModelSpec& spec, const PriorConfig& config,
                         Rng& rng);
ParamVector sample_prior(const ModelSpec& spec, const PriorConfig& config,
                         std::uint64_t seed);

// Mean of max_j gamma_ij when one (zeta_ii, alpha0 row) block is drawn from
// its prior density raised to the power beta. Diagnostic for how tempering
// the working-parameter prior pushes rows toward simplex corners.
double tempered_prior_demo(double beta, int n_states, std::size_t n_draws,
                           std::uint64_t seed);

}  // namespace pthmm
