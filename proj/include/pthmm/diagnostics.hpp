#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pthmm/pt.hpp"
#include "pthmm/store.hpp"
#include "pthmm/target.hpp"

namespace pthmm {

// Half-open-ended interval on one named coordinate; bounds may be infinite.
struct ModeRegion {
  std::string name;       // region label, e.g. "A"
  std::string coordinate;
  double lower = kNegInf;
  double upper = std::numeric_limits<double>::infinity();

  bool contains(double v) const { return v > lower && v < upper; }
};

struct RelabelResult {
  SampleStore store;
  std::uint64_t n_permuted = 0;  // draws where the permutation was not identity
  std::uint64_t n_ties = 0;
  std::vector<std::string> warnings;
};

// Undoes label switching: per draw, sort the given per-state constraint
// coordinates ascending and apply the sorting permutation to every
// state-indexed quantity. The transition working parameters are permuted
// through the latent Gumbel matrices, which leaves both the transition
// probabilities and the prior density of the draw unchanged.
RelabelResult relabel_by_ordering(const SampleStore& store,
                                  const ModelSpec& spec,
                                  const std::vector<std::string>& constraint);

// Cumulative fraction of draws B..K inside the region, for K = B..end.
std::vector<double> running_weight(const SampleStore& store,
                                   const ModeRegion& region,
                                   std::size_t burn_in);

// Split-R-hat over one coordinate's chains. NaN when the within-split
// variance is zero.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Effective sample size with Geyer initial-monotone truncation of the
// paired autocorrelation sums. Capped at 1.25x the total draw count; NaN
// for degenerate chains.
double ess_basic(const std::vector<std::vector<double>>& chains);

struct SwapSummary {
  std::vector<double> rates;  // per adjacent pair
  std::vector<std::uint64_t> attempts;
  std::vector<std::uint64_t> accepts;
  RoundTrips round_trips;
};

SwapSummary swap_summary(const ReplicaTrajectory& trajectory,
                         const TemperatureLadder& ladder);

// Long-format lineage trace: iteration,lineage,position.
void write_lineage_trace(std::ostream& os, const ReplicaTrajectory& trajectory);

struct CoordinateSummary {
  std::string coordinate;
  std::string mode;  // region label, or "all"
  std::size_t n = 0;
  double median = 0.0;
  double q17 = 0.0;   // 66% central interval
  double q83 = 0.0;
  double q025 = 0.0;  // 95% central interval
  double q975 = 0.0;
};

// Per-coordinate quantile table; computed mode-wise when regions are given.
std::vector<CoordinateSummary> summarize(
    const SampleStore& store, const std::vector<ModeRegion>& regions = {});

void write_summary_csv(std::ostream& os,
                       const std::vector<CoordinateSummary>& rows);

// Histogram-valley threshold suggestion for splitting a bimodal marginal.
// Returns nothing when no interior valley separates two peaks.
std::optional<double> suggest_mode_split(const std::vector<double>& draws,
                                         std::size_t n_bins = 50);

double quantile(std::vector<double> sorted_or_not, double p);

}  // namespace pthmm
