#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <ostream>
#include <vector>

#include "pthmm/mcmc.hpp"
#include "pthmm/rng.hpp"
#include "pthmm/store.hpp"
#include "pthmm/target.hpp"
#include "pthmm/tempering.hpp"

namespace pthmm {

enum class SwapScheme { Seo, Deo };

std::string to_string(SwapScheme scheme);
SwapScheme swap_scheme_from_string(const std::string& name);

struct PtConfig {
  TemperatureLadder ladder;
  std::uint64_t n_iters = 0;
  std::uint64_t burn_in = 0;
  int sweeps_per_swap = 1;  // U
  SwapScheme scheme = SwapScheme::Seo;
  std::uint64_t thin = 1;
  std::uint64_t seed = 0;
  int n_threads = 1;
  bool retain_all = false;
  std::uint64_t adapt_window = 250;
  double initial_step = 0.5;

  void validate() const;
};

// Adjacent pairs proposed at one iteration. SEO draws a single uniform
// pair; DEO alternates the even and odd pair sets by iteration parity.
std::vector<std::size_t> select_swap_pairs(SwapScheme scheme,
                                           std::size_t n_pairs,
                                           std::uint64_t iteration, Rng& rng);

struct SwapAttemptRecord {
  std::uint64_t iteration;
  std::uint32_t pair;
  std::uint8_t accepted;
};

// Swap bookkeeping: which pair was proposed when, and the ladder position
// each initial-state lineage occupies at every iteration.
struct ReplicaTrajectory {
  std::uint32_t n_levels = 0;
  std::vector<SwapAttemptRecord> attempts;
  std::vector<std::uint8_t> positions;  // row-major, n_recorded x n_levels
  std::uint64_t n_recorded = 0;

  std::span<const std::uint8_t> row(std::uint64_t r) const {
    return {positions.data() + r * n_levels, n_levels};
  }
};

struct RoundTrips {
  std::vector<std::uint64_t> per_lineage;
  std::uint64_t total = 0;
};

// A lineage completes a round trip each time it travels from ladder
// position 0 to position M and back to 0.
RoundTrips count_round_trips(const ReplicaTrajectory& trajectory);

class PtEngine {
 public:
  PtEngine(const Target& target, PtConfig config);

  void init_from_prior();
  void init_states(const std::vector<std::vector<double>>& states);

  // Runs until n_iters, calling the checkpoint hook every `checkpoint_every`
  // iterations when set.
  void run();

  void set_checkpoint_hook(std::uint64_t every,
                           std::function<void(const PtEngine&)> hook);
  void set_progress_log(std::ostream* os, std::uint64_t every);

  std::uint64_t iteration() const { return iter_; }
  std::uint64_t round_trips() const { return round_trips_; }
  const SampleStore& samples() const { return store_; }
  const std::vector<SampleStore>& all_samples() const { return stores_all_; }
  const ReplicaTrajectory& trajectory() const { return traj_; }
  const TemperatureLadder& ladder() const { return ladder_; }

  // Full engine state: replica states, cached log densities, RNG stream
  // positions, counters and retained draws. Resume is bit-identical.
  void save(std::ostream& os) const;
  void load(std::istream& is);

 private:
  struct Replica {
    std::vector<double> x;
    double log_lik = 0.0;
    double log_prior = 0.0;
    std::uint32_t lineage = 0;
    Rng rng;
    ProposalScales scales;
  };

  void sweep_position(std::size_t pos);
  void post_sweep();
  void record_and_adapt();
  void check_initialized() const;

  const Target& target_;
  PtConfig config_;
  std::vector<Replica> replicas_;  // indexed by ladder position
  Rng swap_rng_;
  TemperatureLadder ladder_;
  std::uint64_t iter_ = 0;
  bool initialized_ = false;
  SampleStore store_;
  std::vector<SampleStore> stores_all_;
  ReplicaTrajectory traj_;
  std::vector<std::uint8_t> rt_phase_;  // per lineage round-trip state
  std::uint64_t round_trips_ = 0;
  std::uint64_t checkpoint_every_ = 0;
  std::function<void(const PtEngine&)> checkpoint_hook_;
  std::ostream* progress_os_ = nullptr;
  std::uint64_t progress_every_ = 0;
};

struct PtResult {
  SampleStore store;
  ReplicaTrajectory trajectory;
  TemperatureLadder ladder;
  std::uint64_t round_trips = 0;
};

PtResult pt_run(const Target& target, const PtConfig& config);
PtResult pt_run(const Target& target, const PtConfig& config,
                const std::vector<std::vector<double>>& init_states);

}  // namespace pthmm
