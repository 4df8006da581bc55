#include "pthmm/tuner.hpp"

#include <algorithm>
#include <cmath>

namespace pthmm {

namespace {

// Swap rate of the hottest adjacent pair, ignoring the adaptation phase.
double pilot_rate(const Target& target, const std::vector<double>& betas,
                  const TuneOptions& options, std::uint64_t pilot_index) {
  PtConfig config;
  config.ladder = TemperatureLadder::from_betas(betas);
  config.n_iters = options.pilot_iters;
  config.burn_in = options.pilot_iters / 5;
  config.sweeps_per_swap = options.sweeps_per_swap;
  config.scheme = SwapScheme::Deo;
  config.seed = options.seed * 1000003u + pilot_index;
  config.n_threads = options.n_threads;
  config.initial_step = options.initial_step;

  PtEngine engine(target, config);
  engine.init_from_prior();
  engine.run();

  const std::uint32_t last_pair =
      static_cast<std::uint32_t>(betas.size() - 2);
  std::uint64_t attempts = 0;
  std::uint64_t accepts = 0;
  for (const SwapAttemptRecord& rec : engine.trajectory().attempts) {
    if (rec.pair == last_pair && rec.iteration > config.burn_in) {
      ++attempts;
      accepts += rec.accepted;
    }
  }
  return attempts == 0 ? 0.0
                       : static_cast<double>(accepts) /
                             static_cast<double>(attempts);
}

}  // namespace

TemperatureLadder tune_ladder(const Target& target,
                              const TuneOptions& options) {
  if (!(options.beta_floor > 0.0 && options.beta_floor < 1.0)) {
    throw ConfigError("beta_floor must lie in (0, 1)");
  }
  if (!(options.band_lo < options.band_hi)) {
    throw ConfigError("tuning band is empty");
  }

  std::vector<double> betas{1.0};
  std::uint64_t pilot_index = 0;

  // Every appended level is tuned into the band, so the terminal pair swaps
  // at the same rate as the rest; extension stops once the tuned hottest
  // level is at or below the floor.
  while (betas.back() > options.beta_floor) {
    const double hottest = betas.back();
    std::vector<double> trial = betas;
    trial.push_back(hottest);

    // The rate rises as the candidate approaches the current hottest level.
    // Start the bracket's low edge at the floor and push it further down if
    // even the floor swaps too eagerly; then bisect in log beta.
    double log_hi = std::log(hottest);
    double log_lo = std::min(std::log(options.beta_floor), log_hi - 1e-3);
    double candidate = std::exp(log_lo);
    trial.back() = candidate;
    double rate = pilot_rate(target, trial, options, pilot_index++);
    int adjust = 1;
    while (rate > options.band_hi && adjust < options.max_adjust) {
      log_lo -= log_hi - log_lo;
      if (log_lo < -700.0) {
        // the rate has stopped falling with beta (prior-dominated regime);
        // no level below the current hottest one can reach the band
        throw TuningError(
            "swap rate stays above the band for every beta below " +
                std::to_string(hottest),
            TemperatureLadder::from_betas(betas));
      }
      candidate = std::exp(log_lo);
      trial.back() = candidate;
      rate = pilot_rate(target, trial, options, pilot_index++);
      ++adjust;
    }
    bool placed = rate >= options.band_lo && rate <= options.band_hi;
    while (!placed && adjust < options.max_adjust) {
      candidate = std::exp(0.5 * (log_lo + log_hi));
      trial.back() = candidate;
      rate = pilot_rate(target, trial, options, pilot_index++);
      ++adjust;
      if (rate > options.band_hi) {
        log_hi = std::log(candidate);
      } else if (rate < options.band_lo) {
        log_lo = std::log(candidate);
      } else {
        placed = true;
      }
    }
    if (!placed) {
      throw TuningError(
          "could not place a ladder level below beta = " +
              std::to_string(hottest) + " within " +
              std::to_string(options.max_adjust) + " adjustments",
          TemperatureLadder::from_betas(betas));
    }
    betas.push_back(candidate);
  }

  // Confirmation counters for the assembled ladder come from one final run.
  PtConfig config;
  config.ladder = TemperatureLadder::from_betas(betas);
  config.n_iters = options.pilot_iters;
  config.burn_in = options.pilot_iters / 5;
  config.sweeps_per_swap = options.sweeps_per_swap;
  config.scheme = SwapScheme::Deo;
  config.seed = options.seed * 1000003u + pilot_index;
  config.n_threads = options.n_threads;
  config.initial_step = options.initial_step;
  PtEngine engine(target, config);
  engine.init_from_prior();
  engine.run();
  return engine.ladder();
}

MarginalHistogram candidate_marginal(const Target& target, double beta,
                                     std::size_t coord, std::uint64_t n_iters,
                                     std::size_t n_bins, std::uint64_t seed) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw std::domain_error("candidate_marginal requires beta in (0, 1]");
  }
  if (coord >= target.dim() || n_bins == 0 || n_iters < 10) {
    throw ConfigError("invalid candidate_marginal arguments");
  }

  Rng rng = Rng::substream(seed, 0);
  std::vector<double> x = target.draw_init(rng);
  double lp = target.log_prior(x);
  double ll = lp == kNegInf ? kNegInf : target.log_likelihood(x);
  if (lp == kNegInf || ll == kNegInf) {
    throw std::runtime_error("zero-density initial state in candidate run");
  }
  ProposalScales scales = ProposalScales::for_target(target);

  MarginalHistogram hist;
  hist.beta = beta;
  const std::uint64_t burn = n_iters / 5;
  for (std::uint64_t h = 1; h <= n_iters; ++h) {
    cwmh_sweep(target, x, beta, ll, lp, scales, rng);
    if (h <= burn) {
      if (h % 250 == 0) adapt_scales(scales);
      if (h == burn) scales.frozen = true;
    } else {
      hist.draws.push_back(x[coord]);
    }
  }

  const auto [lo_it, hi_it] =
      std::minmax_element(hist.draws.begin(), hist.draws.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (!(hi > lo)) hi = lo + 1.0;
  const double width = (hi - lo) / static_cast<double>(n_bins);
  hist.edges.resize(n_bins + 1);
  for (std::size_t b = 0; b <= n_bins; ++b) {
    hist.edges[b] = lo + width * static_cast<double>(b);
  }
  hist.counts.assign(n_bins, 0.0);
  for (double v : hist.draws) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    if (b >= n_bins) b = n_bins - 1;
    hist.counts[b] += 1.0;
  }
  return hist;
}

}  // namespace pthmm
