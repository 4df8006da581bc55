#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <vector>

#include "pthmm/rng.hpp"
#include "pthmm/target.hpp"

namespace pthmm {

// Per-block random-walk step sizes with windowed accept counters.
struct ProposalScales {
  std::vector<double> step;
  std::vector<std::uint64_t> attempts;
  std::vector<std::uint64_t> accepts;
  bool frozen = false;

  static ProposalScales for_target(const Target& target,
                                   double initial_step = 0.5);

  void save(std::ostream& os) const;
  void load(std::istream& is);
};

struct SweepResult {
  std::vector<std::uint8_t> accepted;  // per block
};

// One component-wise Metropolis-Hastings sweep against the beta-tempered
// power posterior. `cached_ll` / `cached_lp` must hold the values at `x`
// on entry and are updated for accepted blocks.
SweepResult cwmh_sweep(const Target& target, std::vector<double>& x,
                       double beta, double& cached_ll, double& cached_lp,
                       ProposalScales& scales, Rng& rng);

// Multiply steps outside the [0.2, 0.4] windowed-rate band and reset the
// window counters. Returns false (no-op) when adaptation is frozen.
bool adapt_scales(ProposalScales& scales, double band_lo = 0.2,
                  double band_hi = 0.4, double grow = 1.3,
                  double shrink = 0.7);

}  // namespace pthmm
