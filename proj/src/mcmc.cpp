#include "pthmm/mcmc.hpp"

#include <algorithm>
#include <cmath>

namespace pthmm {

ProposalScales ProposalScales::for_target(const Target& target,
                                          double initial_step) {
  ProposalScales scales;
  const std::size_t n = target.blocks().size();
  scales.step.assign(n, initial_step);
  scales.attempts.assign(n, 0);
  scales.accepts.assign(n, 0);
  return scales;
}

void ProposalScales::save(std::ostream& os) const {
  os.write(reinterpret_cast<const char*>(step.data()),
           static_cast<std::streamsize>(step.size() * sizeof(double)));
  os.write(reinterpret_cast<const char*>(attempts.data()),
           static_cast<std::streamsize>(attempts.size() * sizeof(std::uint64_t)));
  os.write(reinterpret_cast<const char*>(accepts.data()),
           static_cast<std::streamsize>(accepts.size() * sizeof(std::uint64_t)));
  const char f = frozen ? 1 : 0;
  os.write(&f, 1);
}

void ProposalScales::load(std::istream& is) {
  is.read(reinterpret_cast<char*>(step.data()),
          static_cast<std::streamsize>(step.size() * sizeof(double)));
  is.read(reinterpret_cast<char*>(attempts.data()),
          static_cast<std::streamsize>(attempts.size() * sizeof(std::uint64_t)));
  is.read(reinterpret_cast<char*>(accepts.data()),
          static_cast<std::streamsize>(accepts.size() * sizeof(std::uint64_t)));
  char f = 0;
  is.read(&f, 1);
  frozen = f != 0;
}

namespace {

// Proposes a new block value in place; returns the log-Jacobian increment
// of the transform (log |dtheta/dy| at the proposal minus at the current
// point), or NaN when the block cannot be proposed.
double propose_block(const Block& block, std::span<const double> current,
                     std::span<double> proposal, double step, Rng& rng) {
  switch (block.transform) {
    case BlockTransform::Identity: {
      for (std::size_t i = 0; i < block.size; ++i) {
        proposal[i] = current[i] + step * rng.normal();
      }
      return 0.0;
    }
    case BlockTransform::LogScale: {
      double log_jacobian = 0.0;
      for (std::size_t i = 0; i < block.size; ++i) {
        if (!(current[i] > 0.0)) return kMissing;
        const double z = step * rng.normal();
        proposal[i] = current[i] * std::exp(z);
        log_jacobian += z;
      }
      return log_jacobian;
    }
    case BlockTransform::Simplex: {
      // Additive-log-ratio walk: the last coordinate is the reference.
      const std::size_t n = block.size;
      double log_jacobian = 0.0;
      std::vector<double> y(n - 1);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        if (!(current[i] > 0.0) || !(current[n - 1] > 0.0)) return kMissing;
        y[i] = std::log(current[i] / current[n - 1]) + step * rng.normal();
      }
      double max = 0.0;
      for (double v : y) max = std::max(max, v);
      double denom = std::exp(-max);
      for (double v : y) denom += std::exp(v - max);
      for (std::size_t i = 0; i + 1 < n; ++i) {
        proposal[i] = std::exp(y[i] - max) / denom;
      }
      proposal[n - 1] = std::exp(-max) / denom;
      for (std::size_t i = 0; i < n; ++i) {
        if (!(proposal[i] > 0.0)) return kMissing;
        log_jacobian += std::log(proposal[i]) - std::log(current[i]);
      }
      return log_jacobian;
    }
  }
  return kMissing;
}

}  // namespace

SweepResult cwmh_sweep(const Target& target, std::vector<double>& x,
                       double beta, double& cached_ll, double& cached_lp,
                       ProposalScales& scales, Rng& rng) {
  const std::vector<Block>& blocks = target.blocks();
  SweepResult result;
  result.accepted.assign(blocks.size(), 0);
  std::vector<double> proposal = x;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const Block& block = blocks[b];
    const std::span<double> slot(proposal.data() + block.offset, block.size);
    const std::span<const double> cur(x.data() + block.offset, block.size);
    const double log_jacobian =
        propose_block(block, cur, slot, scales.step[b], rng);
    ++scales.attempts[b];
    bool accept = false;
    if (!std::isnan(log_jacobian)) {
      const double lp_new = target.log_prior(proposal);
      if (lp_new != kNegInf) {
        const double ll_new = target.log_likelihood(proposal);
        if (ll_new != kNegInf) {
          const double log_ratio = beta * (ll_new - cached_ll) +
                                   (lp_new - cached_lp) + log_jacobian;
          if (std::log(rng.uniform()) < log_ratio) {
            accept = true;
            cached_ll = ll_new;
            cached_lp = lp_new;
          }
        }
      }
    }
    if (accept) {
      std::copy(slot.begin(), slot.end(), x.begin() + block.offset);
      ++scales.accepts[b];
      result.accepted[b] = 1;
    } else {
      std::copy(cur.begin(), cur.end(), slot.begin());
    }
  }
  return result;
}

bool adapt_scales(ProposalScales& scales, double band_lo, double band_hi,
                  double grow, double shrink) {
  if (scales.frozen) return false;
  for (std::size_t b = 0; b < scales.step.size(); ++b) {
    if (scales.attempts[b] == 0) continue;
    const double rate = static_cast<double>(scales.accepts[b]) /
                        static_cast<double>(scales.attempts[b]);
    if (rate > band_hi) {
      scales.step[b] *= grow;
    } else if (rate < band_lo) {
      scales.step[b] *= shrink;
    }
    scales.step[b] = std::clamp(scales.step[b], 1e-8, 1e4);
    scales.attempts[b] = 0;
    scales.accepts[b] = 0;
  }
  return true;
}

}  // namespace pthmm
