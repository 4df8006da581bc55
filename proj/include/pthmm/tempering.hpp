#pragma once

#include <cstdint>
#include <vector>

#include "pthmm/model.hpp"
#include "pthmm/priors.hpp"
#include "pthmm/target.hpp"

namespace pthmm {

// Decreasing inverse temperatures with per-adjacent-pair swap counters.
struct TemperatureLadder {
  std::vector<double> betas;              // betas[0] = 1 > ... > betas[M] > 0
  std::vector<std::uint64_t> attempts;    // per adjacent pair
  std::vector<std::uint64_t> accepts;

  std::size_t n_levels() const { return betas.size(); }
  std::size_t n_pairs() const { return betas.empty() ? 0 : betas.size() - 1; }

  double rate(std::size_t pair) const {
    return attempts[pair] == 0
               ? 0.0
               : static_cast<double>(accepts[pair]) /
                     static_cast<double>(attempts[pair]);
  }

  void reset_counters() {
    attempts.assign(n_pairs(), 0);
    accepts.assign(n_pairs(), 0);
  }

  void validate() const;

  static TemperatureLadder from_betas(std::vector<double> betas);
};

// beta_m = beta_hot^(m/M); M+1 entries from 1 down to beta_hot.
TemperatureLadder geometric_ladder(double beta_hot, std::size_t m);

// Power posterior: the likelihood is scaled by beta, the prior is not.
double log_power_posterior(const Target& target, std::span<const double> x,
                           double beta);
double log_power_posterior(const ModelSpec& spec, const ParamVector& theta,
                           const ObservationSet& data,
                           const PriorConfig& config, double beta);

// Metropolis log ratio for swapping states between adjacent replicas:
// min(0, [l_k(x_{k+1}) + l_{k+1}(x_k)] - [l_k(x_k) + l_{k+1}(x_{k+1})]).
double swap_log_ratio(double lk_at_xk, double lk1_at_xk1, double lk_at_xk1,
                      double lk1_at_xk);

}  // namespace pthmm
