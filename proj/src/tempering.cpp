#include "pthmm/tempering.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pthmm/hmm.hpp"

namespace pthmm {

void TemperatureLadder::validate() const {
  if (betas.empty()) throw ConfigError("ladder must not be empty");
  if (betas.front() != 1.0) throw ConfigError("ladder must start at beta = 1");
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0 && betas[i] <= 1.0)) {
      throw ConfigError("ladder entries must lie in (0, 1]");
    }
    if (i > 0 && !(betas[i] < betas[i - 1])) {
      throw ConfigError("ladder must be strictly decreasing");
    }
  }
  if (attempts.size() != n_pairs() || accepts.size() != n_pairs()) {
    throw ConfigError("ladder counters have wrong length");
  }
  for (std::size_t i = 0; i < n_pairs(); ++i) {
    if (accepts[i] > attempts[i]) {
      throw ConfigError("ladder accepts exceed attempts");
    }
  }
}

TemperatureLadder TemperatureLadder::from_betas(std::vector<double> betas) {
  TemperatureLadder ladder;
  ladder.betas = std::move(betas);
  ladder.reset_counters();
  ladder.validate();
  return ladder;
}

TemperatureLadder geometric_ladder(double beta_hot, std::size_t m) {
  if (!(beta_hot > 0.0 && beta_hot < 1.0) || m < 1) {
    throw std::domain_error("geometric_ladder requires 0 < beta_hot < 1, M >= 1");
  }
  const double ratio = std::pow(beta_hot, 1.0 / static_cast<double>(m));
  std::vector<double> betas(m + 1);
  betas[0] = 1.0;
  for (std::size_t i = 1; i <= m; ++i) betas[i] = betas[i - 1] * ratio;
  betas[m] = beta_hot;
  return TemperatureLadder::from_betas(std::move(betas));
}

double log_power_posterior(const Target& target, std::span<const double> x,
                           double beta) {
  const double lp = target.log_prior(x);
  if (lp == kNegInf) return kNegInf;
  const double ll = target.log_likelihood(x);
  if (ll == kNegInf) return kNegInf;
  return beta * ll + lp;
}

double log_power_posterior(const ModelSpec& spec, const ParamVector& theta,
                           const ObservationSet& data,
                           const PriorConfig& config, double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw std::domain_error("log_power_posterior requires beta in (0, 1]");
  }
  const double lp = log_prior(spec, theta, config);
  if (lp == kNegInf) return kNegInf;
  const double ll = log_likelihood(spec, theta, data);
  if (ll == kNegInf) return kNegInf;
  return beta * ll + lp;
}

double swap_log_ratio(double lk_at_xk, double lk1_at_xk1, double lk_at_xk1,
                      double lk1_at_xk) {
  // A -inf crossed term forces rejection; -inf current terms cannot produce
  // NaN via inf - inf.
  if (lk_at_xk1 == kNegInf || lk1_at_xk == kNegInf) return kNegInf;
  if (lk_at_xk == kNegInf || lk1_at_xk1 == kNegInf) return 0.0;
  return std::min(0.0, (lk_at_xk1 + lk1_at_xk) - (lk_at_xk + lk1_at_xk1));
}

}  // namespace pthmm
