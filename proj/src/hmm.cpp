#include "pthmm/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pthmm/rng.hpp"

namespace pthmm {

std::string to_string(StreamFamily family) {
  return family == StreamFamily::Poisson ? "poisson" : "gamma";
}

StreamFamily stream_family_from_string(const std::string& name) {
  if (name == "poisson") return StreamFamily::Poisson;
  if (name == "gamma") return StreamFamily::GammaMeanSd;
  throw ConfigError("unknown stream family: " + name);
}

void validate_params(const ModelSpec& spec, const ParamVector& theta) {
  const std::size_t n = static_cast<std::size_t>(spec.n_states);
  const std::size_t l = static_cast<std::size_t>(spec.covariate_levels);
  if (theta.delta.size() != n) throw ConfigError("delta has wrong length");
  double sum = 0.0;
  for (double d : theta.delta) {
    if (!(d >= 0.0)) throw ConfigError("delta entries must be >= 0");
    sum += d;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw ConfigError("delta must sum to 1");
  if (theta.alpha0.size() != n || theta.zeta.size() != n) {
    throw ConfigError("alpha0/zeta have wrong length");
  }
  for (const auto& row : theta.alpha0) {
    if (row.size() + 1 != n) throw ConfigError("alpha0 row has wrong length");
    for (double a : row) {
      if (!std::isfinite(a)) throw ConfigError("alpha0 entries must be finite");
    }
  }
  for (double z : theta.zeta) {
    if (!std::isfinite(z)) throw ConfigError("zeta entries must be finite");
  }
  if (l == 0) {
    if (!theta.alpha1.empty()) throw ConfigError("alpha1 given for L = 0 model");
  } else {
    if (theta.alpha1.size() != n) throw ConfigError("alpha1 has wrong length");
    for (const auto& row : theta.alpha1) {
      if (row.size() + 1 != n) throw ConfigError("alpha1 row has wrong length");
      for (const auto& levels : row) {
        if (levels.size() != l) throw ConfigError("alpha1 level count mismatch");
        for (double a : levels) {
          if (!std::isfinite(a)) {
            throw ConfigError("alpha1 entries must be finite");
          }
        }
      }
    }
  }
  if (theta.emissions.size() != spec.streams.size()) {
    throw ConfigError("emission parameter count mismatch");
  }
  for (std::size_t p = 0; p < theta.emissions.size(); ++p) {
    const EmissionParams& e = theta.emissions[p];
    if (e.family != spec.streams[p]) throw ConfigError("stream family mismatch");
    if (e.family == StreamFamily::Poisson) {
      if (e.rate.size() != n) throw ConfigError("Poisson rates wrong length");
      for (double r : e.rate) {
        if (!(r > 0.0)) throw ConfigError("Poisson rates must be positive");
      }
    } else {
      if (e.mean.size() != n || e.sd.size() != n) {
        throw ConfigError("Gamma mean/sd wrong length");
      }
      for (std::size_t s = 0; s < n; ++s) {
        if (!(e.mean[s] > 0.0 && e.sd[s] > 0.0)) {
          throw ConfigError("Gamma mean/sd must be positive");
        }
      }
    }
  }
}

void validate_observations(const ModelSpec& spec, const ObservationSet& data) {
  const std::size_t p_count = spec.streams.size();
  for (std::size_t w = 0; w < data.sequences.size(); ++w) {
    const Sequence& seq = data.sequences[w];
    if (seq.values.size() != seq.length * p_count) {
      throw DataError("sequence " + std::to_string(w) + " has wrong value count");
    }
    if (seq.covariates.size() != seq.length) {
      throw DataError("sequence " + std::to_string(w) + " has wrong covariate count");
    }
    for (std::size_t t = 0; t < seq.length; ++t) {
      const int z = seq.covariates[t];
      if (z < 0 || z > spec.covariate_levels) {
        throw DataError("covariate level out of range in sequence " +
                        std::to_string(w));
      }
      for (std::size_t p = 0; p < p_count; ++p) {
        const double y = seq.value(t, p, p_count);
        if (is_missing(y)) continue;
        if (spec.streams[p] == StreamFamily::Poisson) {
          if (y < 0.0 || y != std::floor(y)) {
            throw DataError("Poisson stream value must be a non-negative "
                            "integer in sequence " + std::to_string(w));
          }
        } else if (!(y > 0.0)) {
          throw DataError("Gamma stream value must be > 0 in sequence " +
                          std::to_string(w));
        }
      }
    }
  }
}

std::pair<double, double> gamma_meansd_to_shaperate(double mean, double sd) {
  if (!(mean > 0.0) || !(sd > 0.0)) {
    throw std::domain_error("gamma_meansd_to_shaperate requires mean, sd > 0");
  }
  return {mean * mean / (sd * sd), mean / (sd * sd)};
}

double emission_log_density(StreamFamily family, double rate_or_mean,
                            double sd, double y) {
  if (is_missing(y)) return 0.0;
  if (family == StreamFamily::Poisson) {
    const double lambda = rate_or_mean;
    return y * std::log(lambda) - lambda - std::lgamma(y + 1.0);
  }
  if (!(y > 0.0)) return kNegInf;
  const auto [shape, rate] = gamma_meansd_to_shaperate(rate_or_mean, sd);
  return shape * std::log(rate) - std::lgamma(shape) +
         (shape - 1.0) * std::log(y) - rate * y;
}

double obs_log_density(const ModelSpec& spec, const ParamVector& theta,
                       const Sequence& seq, std::size_t t, int state) {
  const std::size_t p_count = spec.streams.size();
  double total = 0.0;
  for (std::size_t p = 0; p < p_count; ++p) {
    const EmissionParams& e = theta.emissions[p];
    const double y = seq.value(t, p, p_count);
    const double a =
        e.family == StreamFamily::Poisson ? e.rate[state] : e.mean[state];
    const double b = e.family == StreamFamily::Poisson ? 0.0 : e.sd[state];
    const double d = emission_log_density(e.family, a, b, y);
    if (d == kNegInf) return kNegInf;
    total += d;
  }
  return total;
}

double log_sum_exp(std::span<const double> values) {
  double max = kNegInf;
  for (double v : values) max = std::max(max, v);
  if (max == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - max);
  return max + std::log(sum);
}

TransitionRow tpm_row(std::span<const double> alpha0_row,
                      std::span<const double> alpha1_at_level,
                      std::size_t diag_index) {
  const std::size_t n = alpha0_row.size() + 1;
  TransitionRow eta(n, 0.0);
  std::size_t k = 0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == diag_index) continue;
    eta[j] = alpha0_row[k];
    if (!alpha1_at_level.empty()) eta[j] += alpha1_at_level[k];
    ++k;
  }
  const double max = *std::max_element(eta.begin(), eta.end());
  double sum = 0.0;
  for (double& e : eta) {
    e = std::exp(e - max);
    sum += e;
  }
  for (double& e : eta) e /= sum;
  return eta;
}

TransitionRow tpm_row(const ModelSpec& spec, const ParamVector& theta, int row,
                      int level) {
  std::vector<double> alpha1;
  if (level > 0) {
    alpha1.reserve(spec.n_states - 1);
    for (int k = 0; k < spec.n_states - 1; ++k) {
      alpha1.push_back(theta.alpha1[row][k][level - 1]);
    }
  }
  return tpm_row(theta.alpha0[row], alpha1, static_cast<std::size_t>(row));
}

std::vector<double> transition_matrix(const ModelSpec& spec,
                                      const ParamVector& theta, int level) {
  const int n = spec.n_states;
  std::vector<double> gamma(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const TransitionRow row = tpm_row(spec, theta, i, level);
    std::copy(row.begin(), row.end(), gamma.begin() + i * n);
  }
  return gamma;
}

namespace {

// Row-major log transition matrices for every level the sequence uses.
std::vector<std::vector<double>> log_tpm_by_level(const ModelSpec& spec,
                                                  const ParamVector& theta) {
  std::vector<std::vector<double>> out(spec.covariate_levels + 1);
  for (int level = 0; level <= spec.covariate_levels; ++level) {
    out[level] = transition_matrix(spec, theta, level);
    for (double& g : out[level]) g = std::log(g);
  }
  return out;
}

double sequence_log_likelihood(const ModelSpec& spec, const ParamVector& theta,
                               const Sequence& seq,
                               const std::vector<std::vector<double>>& log_tpm) {
  const int n = spec.n_states;
  std::vector<double> psi(n), next(n), terms(n);
  for (int i = 0; i < n; ++i) {
    psi[i] = std::log(theta.delta[i]) + obs_log_density(spec, theta, seq, 0, i);
  }
  for (std::size_t t = 1; t < seq.length; ++t) {
    const std::vector<double>& lg = log_tpm[seq.covariates[t]];
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) terms[i] = psi[i] + lg[i * n + j];
      next[j] = log_sum_exp(terms) + obs_log_density(spec, theta, seq, t, j);
    }
    psi.swap(next);
  }
  return log_sum_exp(psi);
}

}  // namespace

double log_likelihood(const ModelSpec& spec, const ParamVector& theta,
                      const ObservationSet& data) {
  const auto log_tpm = log_tpm_by_level(spec, theta);
  double total = 0.0;
  for (const Sequence& seq : data.sequences) {
    const double ll = sequence_log_likelihood(spec, theta, seq, log_tpm);
    if (ll == kNegInf) return kNegInf;
    total += ll;
  }
  return total;
}

double log_likelihood_bruteforce(const ModelSpec& spec,
                                 const ParamVector& theta,
                                 const ObservationSet& data) {
  const int n = spec.n_states;
  const auto log_tpm = log_tpm_by_level(spec, theta);
  double total = 0.0;
  for (const Sequence& seq : data.sequences) {
    double paths = 1.0;
    for (std::size_t t = 0; t < seq.length; ++t) {
      paths *= n;
      if (paths > 1e6) {
        throw std::domain_error("path count exceeds 1e6; brute force refused");
      }
    }
    std::vector<double> log_probs;
    log_probs.reserve(static_cast<std::size_t>(paths));
    std::vector<int> path(seq.length, 0);
    for (;;) {
      double lp = std::log(theta.delta[path[0]]) +
                  obs_log_density(spec, theta, seq, 0, path[0]);
      for (std::size_t t = 1; t < seq.length; ++t) {
        lp += log_tpm[seq.covariates[t]][path[t - 1] * n + path[t]];
        lp += obs_log_density(spec, theta, seq, t, path[t]);
      }
      log_probs.push_back(lp);
      std::size_t pos = 0;
      while (pos < seq.length && ++path[pos] == n) path[pos++] = 0;
      if (pos == seq.length) break;
    }
    const double ll = log_sum_exp(log_probs);
    if (ll == kNegInf) return kNegInf;
    total += ll;
  }
  return total;
}

ObservationSet simulate(const ModelSpec& spec, const ParamVector& theta,
                        const std::vector<std::size_t>& lengths,
                        const std::vector<std::vector<int>>& covariates,
                        std::uint64_t seed) {
  validate_params(spec, theta);
  const int n = spec.n_states;
  const std::size_t p_count = spec.streams.size();
  Rng rng(seed);
  std::vector<std::vector<double>> tpm(spec.covariate_levels + 1);
  for (int level = 0; level <= spec.covariate_levels; ++level) {
    tpm[level] = transition_matrix(spec, theta, level);
  }
  ObservationSet out;
  for (std::size_t w = 0; w < lengths.size(); ++w) {
    Sequence seq;
    seq.length = lengths[w];
    seq.values.resize(seq.length * p_count);
    seq.covariates.assign(seq.length, 0);
    if (!covariates.empty()) {
      if (covariates[w].size() != seq.length) {
        throw ConfigError("covariate length mismatch in simulate");
      }
      seq.covariates = covariates[w];
    }
    int state = static_cast<int>(rng.categorical(theta.delta));
    for (std::size_t t = 0; t < seq.length; ++t) {
      if (t > 0) {
        const std::vector<double>& gamma = tpm[seq.covariates[t]];
        const std::span<const double> row(gamma.data() + state * n,
                                          static_cast<std::size_t>(n));
        state = static_cast<int>(rng.categorical(row));
      }
      for (std::size_t p = 0; p < p_count; ++p) {
        const EmissionParams& e = theta.emissions[p];
        double y;
        if (e.family == StreamFamily::Poisson) {
          y = static_cast<double>(rng.poisson(e.rate[state]));
        } else {
          const auto [shape, rate] =
              gamma_meansd_to_shaperate(e.mean[state], e.sd[state]);
          y = rng.gamma(shape, rate);
        }
        seq.values[t * p_count + p] = y;
      }
    }
    out.sequences.push_back(std::move(seq));
  }
  return out;
}

}  // namespace pthmm
