#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pthmm/pt.hpp"

namespace pthmm {

struct TuneOptions {
  double beta_floor = 0.0;  // stop once the hottest beta reaches this
  std::uint64_t pilot_iters = 50000;
  double target = 0.234;
  double band_lo = 0.22;
  double band_hi = 0.24;
  int max_adjust = 20;  // candidate adjustments per extension
  std::uint64_t seed = 0;
  int sweeps_per_swap = 1;
  int n_threads = 1;
  double initial_step = 0.5;
};

class TuningError : public std::runtime_error {
 public:
  TuningError(const std::string& what, TemperatureLadder partial)
      : std::runtime_error(what), partial_ladder(std::move(partial)) {}

  TemperatureLadder partial_ladder;
};

// Extends the ladder one inverse temperature at a time. For each extension
// the floor is piloted first; if its swap rate against the current hottest
// level is below band the candidate is bisected in log beta between floor
// and hottest until the measured rate lands in [band_lo, band_hi]. The
// returned ladder carries the pilot swap counters of the final ladder.
TemperatureLadder tune_ladder(const Target& target, const TuneOptions& options);

struct MarginalHistogram {
  double beta = 0.0;
  std::vector<double> edges;   // n_bins + 1
  std::vector<double> counts;  // n_bins
  std::vector<double> draws;
};

// Single-temperature MCMC run summarizing one coordinate's marginal at a
// candidate hottest beta. Used to judge whether the tempered target has
// merged into one mode before committing to a floor.
MarginalHistogram candidate_marginal(const Target& target, double beta,
                                     std::size_t coord,
                                     std::uint64_t n_iters = 20000,
                                     std::size_t n_bins = 40,
                                     std::uint64_t seed = 0);

}  // namespace pthmm
