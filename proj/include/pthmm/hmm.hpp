#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "pthmm/model.hpp"

namespace pthmm {

// Moment-matched Gamma(shape, rate) for a given mean and sd.
std::pair<double, double> gamma_meansd_to_shaperate(double mean, double sd);

// log f(y | state params); exactly 0 when y is missing. Gamma families
// return -inf (zero density) for y <= 0.
double emission_log_density(StreamFamily family, double rate_or_mean,
                            double sd, double y);

// log f(y_t | state) summed over streams.
double obs_log_density(const ModelSpec& spec, const ParamVector& theta,
                       const Sequence& seq, std::size_t t, int state);

// One transition-matrix row through the multinomial logit link.
// `alpha0_row` holds the N-1 off-diagonal working parameters for row
// `diag_index`; `alpha1_at_level` (same length, may be empty) is the
// covariate offset already selected for the active level.
TransitionRow tpm_row(std::span<const double> alpha0_row,
                      std::span<const double> alpha1_at_level,
                      std::size_t diag_index);

TransitionRow tpm_row(const ModelSpec& spec, const ParamVector& theta, int row,
                      int level);

// N x N row-major transition matrix at a covariate level.
std::vector<double> transition_matrix(const ModelSpec& spec,
                                      const ParamVector& theta, int level);

// Log-space forward-algorithm likelihood summed over sequences.
double log_likelihood(const ModelSpec& spec, const ParamVector& theta,
                      const ObservationSet& data);

// Exact path enumeration; test oracle. Refuses when N^T exceeds 1e6
// for any sequence.
double log_likelihood_bruteforce(const ModelSpec& spec,
                                 const ParamVector& theta,
                                 const ObservationSet& data);

// Draws states and observations from the model. `covariates` may be empty
// (all level 0) or give one level per time step per sequence.
ObservationSet simulate(const ModelSpec& spec, const ParamVector& theta,
                        const std::vector<std::size_t>& lengths,
                        const std::vector<std::vector<int>>& covariates,
                        std::uint64_t seed);

double log_sum_exp(std::span<const double> values);

}  // namespace pthmm
