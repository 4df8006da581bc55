#include "pthmm/pt.hpp"

#include <atomic>
#include <barrier>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

namespace pthmm {

std::string to_string(SwapScheme scheme) {
  return scheme == SwapScheme::Seo ? "seo" : "deo";
}

SwapScheme swap_scheme_from_string(const std::string& name) {
  if (name == "seo") return SwapScheme::Seo;
  if (name == "deo") return SwapScheme::Deo;
  throw ConfigError("unknown swap scheme: " + name);
}

void PtConfig::validate() const {
  ladder.validate();
  if (n_iters == 0) throw ConfigError("n_iters must be positive");
  if (burn_in >= n_iters) throw ConfigError("burn_in must be < n_iters");
  if (sweeps_per_swap < 1) throw ConfigError("sweeps_per_swap must be >= 1");
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (adapt_window < 1) throw ConfigError("adapt_window must be >= 1");
  if (!(initial_step > 0.0)) throw ConfigError("initial_step must be > 0");
}

std::vector<std::size_t> select_swap_pairs(SwapScheme scheme,
                                           std::size_t n_pairs,
                                           std::uint64_t iteration, Rng& rng) {
  std::vector<std::size_t> pairs;
  if (n_pairs == 0) return pairs;
  if (scheme == SwapScheme::Seo) {
    pairs.push_back(static_cast<std::size_t>(rng.integer(n_pairs)));
  } else {
    for (std::size_t k = iteration % 2 == 0 ? 0 : 1; k < n_pairs; k += 2) {
      pairs.push_back(k);
    }
  }
  return pairs;
}

RoundTrips count_round_trips(const ReplicaTrajectory& trajectory) {
  const std::uint32_t levels = trajectory.n_levels;
  RoundTrips trips;
  trips.per_lineage.assign(levels, 0);
  if (levels < 2) return trips;
  const std::uint8_t top = static_cast<std::uint8_t>(levels - 1);
  std::vector<std::uint8_t> phase(levels, 0);  // 0 unarmed, 1 heading hot, 2 heading cold
  for (std::uint64_t r = 0; r < trajectory.n_recorded; ++r) {
    const auto row = trajectory.row(r);
    for (std::uint32_t l = 0; l < levels; ++l) {
      const std::uint8_t pos = row[l];
      switch (phase[l]) {
        case 0:
          if (pos == 0) phase[l] = 1;
          break;
        case 1:
          if (pos == top) phase[l] = 2;
          break;
        case 2:
          if (pos == 0) {
            ++trips.per_lineage[l];
            ++trips.total;
            phase[l] = 1;
          }
          break;
      }
    }
  }
  return trips;
}

PtEngine::PtEngine(const Target& target, PtConfig config)
    : target_(target),
      config_(std::move(config)),
      swap_rng_(Rng::substream(0, 0)) {
  config_.validate();
  ladder_ = config_.ladder;
  ladder_.reset_counters();
  const std::size_t levels = ladder_.n_levels();
  swap_rng_ = Rng::substream(config_.seed, levels);
  replicas_.reserve(levels);
  for (std::size_t pos = 0; pos < levels; ++pos) {
    Replica r{.x = {},
              .rng = Rng::substream(config_.seed, pos),
              .scales = ProposalScales::for_target(target_, config_.initial_step)};
    r.lineage = static_cast<std::uint32_t>(pos);
    replicas_.push_back(std::move(r));
  }
  store_.names = target_.coord_names();
  if (config_.retain_all) {
    stores_all_.assign(levels, store_);
  }
  traj_.n_levels = static_cast<std::uint32_t>(levels);
  rt_phase_.assign(levels, 0);
  rt_phase_[0] = 1;
}

void PtEngine::init_from_prior() {
  std::vector<std::vector<double>> states;
  states.reserve(replicas_.size());
  for (Replica& r : replicas_) states.push_back(target_.draw_init(r.rng));
  init_states(states);
}

void PtEngine::init_states(const std::vector<std::vector<double>>& states) {
  if (states.size() != replicas_.size()) {
    throw ConfigError("need one initial state per replica");
  }
  for (std::size_t pos = 0; pos < replicas_.size(); ++pos) {
    Replica& r = replicas_[pos];
    if (states[pos].size() != target_.dim()) {
      throw ConfigError("initial state has wrong dimension");
    }
    r.x = states[pos];
    r.log_prior = target_.log_prior(r.x);
    r.log_lik = r.log_prior == kNegInf ? kNegInf : target_.log_likelihood(r.x);
    if (r.log_prior == kNegInf || r.log_lik == kNegInf) {
      throw std::runtime_error(
          "replica " + std::to_string(pos) +
          " has zero power-posterior density at initialization");
    }
    if (config_.burn_in == 0) r.scales.frozen = true;
  }
  initialized_ = true;
}

void PtEngine::check_initialized() const {
  if (!initialized_) throw std::runtime_error("engine not initialized");
}

void PtEngine::sweep_position(std::size_t pos) {
  Replica& r = replicas_[pos];
  const double beta = ladder_.betas[pos];
  for (int u = 0; u < config_.sweeps_per_swap; ++u) {
    cwmh_sweep(target_, r.x, beta, r.log_lik, r.log_prior, r.scales, r.rng);
  }
}

void PtEngine::post_sweep() {
  const std::uint64_t h = iter_ + 1;

  const std::vector<std::size_t> pairs =
      select_swap_pairs(config_.scheme, ladder_.n_pairs(), iter_, swap_rng_);
  for (std::size_t k : pairs) {
    Replica& a = replicas_[k];
    Replica& b = replicas_[k + 1];
    const double beta_k = ladder_.betas[k];
    const double beta_k1 = ladder_.betas[k + 1];
    // Cached likelihood/prior values make the four power-posterior terms
    // free: each is an affine combination of the cache.
    const double log_ratio = swap_log_ratio(
        beta_k * a.log_lik + a.log_prior, beta_k1 * b.log_lik + b.log_prior,
        beta_k * b.log_lik + b.log_prior, beta_k1 * a.log_lik + a.log_prior);
    const bool accept = std::log(swap_rng_.uniform()) < log_ratio;
    ++ladder_.attempts[k];
    if (accept) {
      ++ladder_.accepts[k];
      std::swap(a.x, b.x);
      std::swap(a.log_lik, b.log_lik);
      std::swap(a.log_prior, b.log_prior);
      std::swap(a.lineage, b.lineage);
    }
    traj_.attempts.push_back(
        {h, static_cast<std::uint32_t>(k), static_cast<std::uint8_t>(accept)});
  }

  record_and_adapt();
  iter_ = h;

  if (progress_os_ && progress_every_ > 0 && h % progress_every_ == 0) {
    *progress_os_ << "iter=" << h << " swap_rates=";
    for (std::size_t k = 0; k < ladder_.n_pairs(); ++k) {
      *progress_os_ << (k == 0 ? "" : ",") << ladder_.rate(k);
    }
    *progress_os_ << " round_trips=" << round_trips_ << '\n';
  }
  if (checkpoint_hook_ && checkpoint_every_ > 0 &&
      h % checkpoint_every_ == 0) {
    checkpoint_hook_(*this);
  }
}

void PtEngine::record_and_adapt() {
  const std::uint64_t h = iter_ + 1;
  const std::size_t levels = replicas_.size();
  const std::uint8_t top = static_cast<std::uint8_t>(levels - 1);

  const std::size_t base = traj_.positions.size();
  traj_.positions.resize(base + levels);
  for (std::size_t pos = 0; pos < levels; ++pos) {
    traj_.positions[base + replicas_[pos].lineage] =
        static_cast<std::uint8_t>(pos);
  }
  ++traj_.n_recorded;
  if (levels > 1) {
    for (std::size_t l = 0; l < levels; ++l) {
      const std::uint8_t pos = traj_.positions[base + l];
      switch (rt_phase_[l]) {
        case 0:
          if (pos == 0) rt_phase_[l] = 1;
          break;
        case 1:
          if (pos == top) rt_phase_[l] = 2;
          break;
        case 2:
          if (pos == 0) {
            ++round_trips_;
            rt_phase_[l] = 1;
          }
          break;
      }
    }
  }

  if (h <= config_.burn_in) {
    if (h % config_.adapt_window == 0) {
      for (Replica& r : replicas_) adapt_scales(r.scales);
    }
    if (h == config_.burn_in) {
      for (Replica& r : replicas_) r.scales.frozen = true;
    }
  }

  if (h > config_.burn_in && (h - config_.burn_in) % config_.thin == 0) {
    store_.append(h, replicas_[0].x);
    if (config_.retain_all) {
      for (std::size_t pos = 0; pos < levels; ++pos) {
        stores_all_[pos].append(h, replicas_[pos].x);
      }
    }
  }
}

void PtEngine::run() {
  check_initialized();
  const std::size_t levels = replicas_.size();
  int threads = config_.n_threads;
  if (threads > static_cast<int>(levels)) threads = static_cast<int>(levels);
  if (threads <= 1) {
    while (iter_ < config_.n_iters) {
      for (std::size_t pos = 0; pos < levels; ++pos) sweep_position(pos);
      post_sweep();
    }
    return;
  }

  std::exception_ptr error;
  std::mutex error_mutex;
  std::barrier sync(threads, [this]() noexcept { post_sweep(); });
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int tid = 0; tid < threads; ++tid) {
    pool.emplace_back([&, tid] {
      try {
        while (iter_ < config_.n_iters) {
          for (std::size_t pos = tid; pos < levels;
               pos += static_cast<std::size_t>(threads)) {
            sweep_position(pos);
          }
          sync.arrive_and_wait();
        }
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

void PtEngine::set_checkpoint_hook(std::uint64_t every,
                                   std::function<void(const PtEngine&)> hook) {
  checkpoint_every_ = every;
  checkpoint_hook_ = std::move(hook);
}

void PtEngine::set_progress_log(std::ostream* os, std::uint64_t every) {
  progress_os_ = os;
  progress_every_ = every;
}

namespace {

constexpr char kMagic[] = "PTHMMCKPT1";

void put_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void put_doubles(std::ostream& os, std::span<const double> v) {
  put_u64(os, v.size());
  os.write(reinterpret_cast<const char*>(v.data()),
           static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& is) {
  std::vector<double> v(get_u64(is));
  is.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
  return v;
}

void put_rng(std::ostream& os, const Rng& rng) {
  std::ostringstream buf;
  rng.save(buf);
  const std::string s = buf.str();
  put_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void get_rng(std::istream& is, Rng& rng) {
  std::string s(get_u64(is), '\0');
  is.read(s.data(), static_cast<std::streamsize>(s.size()));
  std::istringstream buf(s);
  rng.load(buf);
}

}  // namespace

void PtEngine::save(std::ostream& os) const {
  check_initialized();
  os.write(kMagic, sizeof(kMagic));
  put_u64(os, target_.dim());
  put_doubles(os, config_.ladder.betas);
  put_u64(os, config_.n_iters);
  put_u64(os, config_.burn_in);
  put_u64(os, static_cast<std::uint64_t>(config_.sweeps_per_swap));
  put_u64(os, config_.scheme == SwapScheme::Seo ? 0 : 1);
  put_u64(os, config_.thin);
  put_u64(os, config_.seed);
  put_u64(os, iter_);
  put_u64(os, round_trips_);
  os.write(reinterpret_cast<const char*>(rt_phase_.data()),
           static_cast<std::streamsize>(rt_phase_.size()));
  for (const Replica& r : replicas_) {
    put_doubles(os, r.x);
    put_doubles(os, std::vector<double>{r.log_lik, r.log_prior});
    put_u64(os, r.lineage);
    put_rng(os, r.rng);
    r.scales.save(os);
  }
  put_rng(os, swap_rng_);
  put_u64(os, ladder_.n_pairs());
  for (std::size_t k = 0; k < ladder_.n_pairs(); ++k) {
    put_u64(os, ladder_.attempts[k]);
    put_u64(os, ladder_.accepts[k]);
  }
  put_u64(os, store_.n_rows());
  os.write(reinterpret_cast<const char*>(store_.iterations.data()),
           static_cast<std::streamsize>(store_.iterations.size() *
                                        sizeof(std::uint64_t)));
  put_doubles(os, store_.values);
  put_u64(os, traj_.attempts.size());
  os.write(reinterpret_cast<const char*>(traj_.attempts.data()),
           static_cast<std::streamsize>(traj_.attempts.size() *
                                        sizeof(SwapAttemptRecord)));
  put_u64(os, traj_.n_recorded);
  put_u64(os, traj_.positions.size());
  os.write(reinterpret_cast<const char*>(traj_.positions.data()),
           static_cast<std::streamsize>(traj_.positions.size()));
  put_u64(os, config_.retain_all ? stores_all_.size() : 0);
  for (const SampleStore& s : stores_all_) {
    put_u64(os, s.n_rows());
    os.write(reinterpret_cast<const char*>(s.iterations.data()),
             static_cast<std::streamsize>(s.iterations.size() *
                                          sizeof(std::uint64_t)));
    put_doubles(os, s.values);
  }
}

void PtEngine::load(std::istream& is) {
  char magic[sizeof(kMagic)] = {};
  is.read(magic, sizeof(kMagic));
  if (!is || std::string(magic) != kMagic) {
    throw DataError("not a recognized checkpoint file");
  }
  if (get_u64(is) != target_.dim()) {
    throw ConfigError("checkpoint dimension does not match configuration");
  }
  const std::vector<double> betas = get_doubles(is);
  if (betas != config_.ladder.betas) {
    throw ConfigError("checkpoint ladder does not match configuration");
  }
  if (get_u64(is) != config_.n_iters || get_u64(is) != config_.burn_in ||
      get_u64(is) != static_cast<std::uint64_t>(config_.sweeps_per_swap) ||
      get_u64(is) != (config_.scheme == SwapScheme::Seo ? 0u : 1u) ||
      get_u64(is) != config_.thin || get_u64(is) != config_.seed) {
    throw ConfigError("checkpoint run settings do not match configuration");
  }
  iter_ = get_u64(is);
  round_trips_ = get_u64(is);
  is.read(reinterpret_cast<char*>(rt_phase_.data()),
          static_cast<std::streamsize>(rt_phase_.size()));
  for (Replica& r : replicas_) {
    r.x = get_doubles(is);
    const std::vector<double> cached = get_doubles(is);
    r.log_lik = cached[0];
    r.log_prior = cached[1];
    r.lineage = static_cast<std::uint32_t>(get_u64(is));
    get_rng(is, r.rng);
    r.scales.load(is);
  }
  get_rng(is, swap_rng_);
  const std::uint64_t n_pairs = get_u64(is);
  if (n_pairs != ladder_.n_pairs()) {
    throw DataError("corrupt checkpoint: pair count mismatch");
  }
  for (std::size_t k = 0; k < ladder_.n_pairs(); ++k) {
    ladder_.attempts[k] = get_u64(is);
    ladder_.accepts[k] = get_u64(is);
  }
  const std::uint64_t rows = get_u64(is);
  store_.iterations.resize(rows);
  is.read(reinterpret_cast<char*>(store_.iterations.data()),
          static_cast<std::streamsize>(rows * sizeof(std::uint64_t)));
  store_.values = get_doubles(is);
  traj_.attempts.resize(get_u64(is));
  is.read(reinterpret_cast<char*>(traj_.attempts.data()),
          static_cast<std::streamsize>(traj_.attempts.size() *
                                       sizeof(SwapAttemptRecord)));
  traj_.n_recorded = get_u64(is);
  traj_.positions.resize(get_u64(is));
  is.read(reinterpret_cast<char*>(traj_.positions.data()),
          static_cast<std::streamsize>(traj_.positions.size()));
  const std::uint64_t n_all = get_u64(is);
  if (n_all != stores_all_.size()) {
    throw ConfigError("checkpoint retention mode does not match configuration");
  }
  for (SampleStore& s : stores_all_) {
    const std::uint64_t r = get_u64(is);
    s.iterations.resize(r);
    is.read(reinterpret_cast<char*>(s.iterations.data()),
            static_cast<std::streamsize>(r * sizeof(std::uint64_t)));
    s.values = get_doubles(is);
  }
  if (!is) throw DataError("corrupt or truncated checkpoint file");
  // Cached log densities are re-derived rather than trusted when non-finite.
  for (Replica& r : replicas_) {
    if (!std::isfinite(r.log_lik) || !std::isfinite(r.log_prior)) {
      r.log_prior = target_.log_prior(r.x);
      r.log_lik = target_.log_likelihood(r.x);
    }
  }
  initialized_ = true;
}

PtResult pt_run(const Target& target, const PtConfig& config) {
  PtEngine engine(target, config);
  engine.init_from_prior();
  engine.run();
  return {engine.samples(), engine.trajectory(), engine.ladder(),
          engine.round_trips()};
}

PtResult pt_run(const Target& target, const PtConfig& config,
                const std::vector<std::vector<double>>& init_states) {
  PtEngine engine(target, config);
  engine.init_states(init_states);
  engine.run();
  return {engine.samples(), engine.trajectory(), engine.ladder(),
          engine.round_trips()};
}

}  // namespace pthmm
