#include "pthmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pthmm {

namespace {

// Column index within an off-diagonal row storing entries for j != i.
std::size_t off_index(int i, int j) {
  return static_cast<std::size_t>(j < i ? j : j - 1);
}

// Applies nu (new state i takes old state nu[i]) to one draw in place.
// Transition parameters are routed through the latent Gumbel matrices
// Z[i][j] so that both Gamma and the prior density survive exactly.
void permute_draw(const ModelSpec& spec, ParamVector& theta,
                  const std::vector<int>& nu) {
  const int n = spec.n_states;
  const int levels = spec.covariate_levels;

  std::vector<double> delta(n);
  std::vector<double> zeta(n);
  for (int i = 0; i < n; ++i) {
    delta[i] = theta.delta[nu[i]];
    zeta[i] = theta.zeta[nu[i]];
  }

  std::vector<std::vector<double>> z(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i) {
    z[i][i] = theta.zeta[i];
    for (int j = 0; j < n; ++j) {
      if (j != i) z[i][j] = theta.alpha0[i][off_index(i, j)] + theta.zeta[i];
    }
  }
  std::vector<std::vector<double>> alpha0(n, std::vector<double>(n - 1));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j != i) alpha0[i][off_index(i, j)] = z[nu[i]][nu[j]] - z[nu[i]][nu[i]];
    }
  }

  std::vector<std::vector<std::vector<double>>> alpha1;
  if (levels > 0) {
    alpha1.assign(n, std::vector<std::vector<double>>(
                         n - 1, std::vector<double>(levels)));
    for (int l = 0; l < levels; ++l) {
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          // The level offsets ride on top of the baseline latent entries,
          // so permuting cells carries them over unchanged.
          alpha1[i][off_index(i, j)][l] =
              theta.alpha1[nu[i]][off_index(nu[i], nu[j])][l];
        }
      }
    }
  }

  for (EmissionParams& em : theta.emissions) {
    auto permute = [&](std::vector<double>& v) {
      if (v.empty()) return;
      std::vector<double> out(n);
      for (int i = 0; i < n; ++i) out[i] = v[nu[i]];
      v = std::move(out);
    };
    permute(em.rate);
    permute(em.mean);
    permute(em.sd);
  }

  theta.delta = std::move(delta);
  theta.zeta = std::move(zeta);
  theta.alpha0 = std::move(alpha0);
  if (levels > 0) theta.alpha1 = std::move(alpha1);
}

}  // namespace

RelabelResult relabel_by_ordering(const SampleStore& store,
                                  const ModelSpec& spec,
                                  const std::vector<std::string>& constraint) {
  const int n = spec.n_states;
  if (static_cast<int>(constraint.size()) != n) {
    throw ConfigError("need one constraint coordinate per state");
  }
  std::vector<std::size_t> cols(constraint.size());
  for (std::size_t i = 0; i < constraint.size(); ++i) {
    cols[i] = static_cast<std::size_t>(store.column(constraint[i]));
  }

  RelabelResult result;
  result.store.names = store.names;
  result.store.iterations = store.iterations;
  result.store.values.reserve(store.values.size());

  std::vector<int> nu(n);
  std::vector<double> keys(n);
  for (std::size_t r = 0; r < store.n_rows(); ++r) {
    const auto row = store.row(r);
    for (int i = 0; i < n; ++i) keys[i] = row[cols[i]];
    std::iota(nu.begin(), nu.end(), 0);
    std::stable_sort(nu.begin(), nu.end(),
                     [&](int a, int b) { return keys[a] < keys[b]; });
    bool tied = false;
    for (int i = 0; i + 1 < n; ++i) {
      if (keys[nu[i]] == keys[nu[i + 1]]) tied = true;
    }
    if (tied) ++result.n_ties;

    const bool identity = std::is_sorted(nu.begin(), nu.end());
    if (identity) {
      result.store.values.insert(result.store.values.end(), row.begin(),
                                 row.end());
      continue;
    }
    ++result.n_permuted;
    ParamVector theta = unflatten(spec, row);
    permute_draw(spec, theta, nu);
    const std::vector<double> flat = flatten(spec, theta);
    result.store.values.insert(result.store.values.end(), flat.begin(),
                               flat.end());
  }
  if (result.n_ties > 0) {
    result.warnings.push_back(
        "ties in ordering constraint for " + std::to_string(result.n_ties) +
        " draw(s); broken by original state index");
  }
  return result;
}

std::vector<double> running_weight(const SampleStore& store,
                                   const ModeRegion& region,
                                   std::size_t burn_in) {
  if (burn_in >= store.n_rows()) {
    throw ConfigError("running_weight burn_in leaves no draws");
  }
  const std::size_t c = static_cast<std::size_t>(store.column(region.coordinate));
  std::vector<double> out;
  out.reserve(store.n_rows() - burn_in);
  double hits = 0.0;
  for (std::size_t r = burn_in; r < store.n_rows(); ++r) {
    if (region.contains(store.values[r * store.n_cols() + c])) hits += 1.0;
    out.push_back(hits / static_cast<double>(r - burn_in + 1));
  }
  return out;
}

namespace {

struct SplitMoments {
  std::size_t n = 0;      // per-split length
  double w = 0.0;         // mean within-split variance
  double b_over_n = 0.0;  // variance of split means
};

SplitMoments split_moments(const std::vector<std::vector<double>>& chains) {
  std::size_t len = chains.empty() ? 0 : chains.front().size();
  for (const auto& c : chains) len = std::min(len, c.size());
  const std::size_t half = len / 2;
  if (chains.empty() || half < 2) {
    throw ConfigError("chains too short to split");
  }

  std::vector<double> means;
  std::vector<double> vars;
  for (const auto& chain : chains) {
    for (int part = 0; part < 2; ++part) {
      const double* begin = chain.data() + part * half;
      double mean = 0.0;
      for (std::size_t t = 0; t < half; ++t) mean += begin[t];
      mean /= static_cast<double>(half);
      double var = 0.0;
      for (std::size_t t = 0; t < half; ++t) {
        var += (begin[t] - mean) * (begin[t] - mean);
      }
      var /= static_cast<double>(half - 1);
      means.push_back(mean);
      vars.push_back(var);
    }
  }

  SplitMoments m;
  m.n = half;
  m.w = std::accumulate(vars.begin(), vars.end(), 0.0) /
        static_cast<double>(vars.size());
  const double grand = std::accumulate(means.begin(), means.end(), 0.0) /
                       static_cast<double>(means.size());
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  m.b_over_n = means.size() > 1 ? b / static_cast<double>(means.size() - 1)
                                : 0.0;
  return m;
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
  const SplitMoments m = split_moments(chains);
  if (!(m.w > 0.0)) return kMissing;
  const double n = static_cast<double>(m.n);
  const double var_plus = m.w * (n - 1.0) / n + m.b_over_n;
  return std::sqrt(var_plus / m.w);
}

double ess_basic(const std::vector<std::vector<double>>& chains) {
  std::size_t len = chains.empty() ? 0 : chains.front().size();
  for (const auto& c : chains) len = std::min(len, c.size());
  if (chains.empty() || len < 8) {
    throw ConfigError("chains too short for ess_basic");
  }
  const std::size_t m = chains.size();
  const double n = static_cast<double>(len);

  std::vector<double> means(m);
  std::vector<double> vars(m);  // 1/n normalization (lag-0 autocovariance)
  for (std::size_t c = 0; c < m; ++c) {
    double mean = 0.0;
    for (std::size_t t = 0; t < len; ++t) mean += chains[c][t];
    means[c] = mean / n;
    double var = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      var += (chains[c][t] - means[c]) * (chains[c][t] - means[c]);
    }
    vars[c] = var / n;
  }
  const double w =
      std::accumulate(vars.begin(), vars.end(), 0.0) / static_cast<double>(m) *
      n / (n - 1.0);
  double var_plus = w * (n - 1.0) / n;
  if (m > 1) {
    const double grand = std::accumulate(means.begin(), means.end(), 0.0) /
                         static_cast<double>(m);
    double b = 0.0;
    for (double mu : means) b += (mu - grand) * (mu - grand);
    var_plus += b / static_cast<double>(m - 1);
  }
  if (!(var_plus > 0.0)) return kMissing;

  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t t = lag; t < len; ++t) {
        s += (chains[c][t] - means[c]) * (chains[c][t - lag] - means[c]);
      }
      acc += s / n;
    }
    return acc / static_cast<double>(m);
  };

  auto rho = [&](std::size_t lag) {
    return 1.0 - (w - autocov(lag)) / var_plus;
  };

  // Geyer: sum paired autocorrelations while positive, forcing the pair
  // sums to be non-increasing.
  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < len; ++k) {
    double pair = rho(2 * k) + rho(2 * k + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau -= 1.0;  // rho_0 = 1 is counted inside the first pair
  const double total = n * static_cast<double>(m);
  if (!(tau > 0.0)) return 1.25 * total;
  return std::min(total / tau, 1.25 * total);
}

SwapSummary swap_summary(const ReplicaTrajectory& trajectory,
                         const TemperatureLadder& ladder) {
  SwapSummary summary;
  const std::size_t pairs = ladder.n_pairs();
  summary.attempts.assign(pairs, 0);
  summary.accepts.assign(pairs, 0);
  for (const SwapAttemptRecord& rec : trajectory.attempts) {
    if (rec.pair < pairs) {
      ++summary.attempts[rec.pair];
      summary.accepts[rec.pair] += rec.accepted;
    }
  }
  summary.rates.resize(pairs);
  for (std::size_t k = 0; k < pairs; ++k) {
    summary.rates[k] = summary.attempts[k] == 0
                           ? 0.0
                           : static_cast<double>(summary.accepts[k]) /
                                 static_cast<double>(summary.attempts[k]);
  }
  summary.round_trips = count_round_trips(trajectory);
  return summary;
}

void write_lineage_trace(std::ostream& os,
                         const ReplicaTrajectory& trajectory) {
  os << "iteration,lineage,position\n";
  for (std::uint64_t r = 0; r < trajectory.n_recorded; ++r) {
    const auto row = trajectory.row(r);
    for (std::uint32_t l = 0; l < trajectory.n_levels; ++l) {
      os << (r + 1) << ',' << l << ',' << static_cast<int>(row[l]) << '\n';
    }
  }
}

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw ConfigError("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double h = p * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = h - std::floor(h);
  return v[lo] + frac * (v[hi] - v[lo]);
}

namespace {

CoordinateSummary summarize_column(const std::string& name,
                                   const std::string& mode,
                                   std::vector<double> values) {
  CoordinateSummary s;
  s.coordinate = name;
  s.mode = mode;
  s.n = values.size();
  s.median = quantile(values, 0.5);
  s.q17 = quantile(values, 0.17);
  s.q83 = quantile(values, 0.83);
  s.q025 = quantile(values, 0.025);
  s.q975 = quantile(values, 0.975);
  return s;
}

}  // namespace

std::vector<CoordinateSummary> summarize(const SampleStore& store,
                                         const std::vector<ModeRegion>& regions) {
  if (store.n_rows() == 0) throw ConfigError("empty sample store");
  std::vector<CoordinateSummary> rows;

  std::vector<std::pair<std::string, std::vector<std::size_t>>> groups;
  if (regions.empty()) {
    std::vector<std::size_t> all(store.n_rows());
    std::iota(all.begin(), all.end(), 0);
    groups.emplace_back("all", std::move(all));
  } else {
    for (const ModeRegion& region : regions) {
      const std::size_t c =
          static_cast<std::size_t>(store.column(region.coordinate));
      std::vector<std::size_t> idx;
      for (std::size_t r = 0; r < store.n_rows(); ++r) {
        if (region.contains(store.values[r * store.n_cols() + c])) {
          idx.push_back(r);
        }
      }
      groups.emplace_back(region.name, std::move(idx));
    }
  }

  for (const auto& [mode, idx] : groups) {
    if (idx.empty()) continue;
    for (std::size_t c = 0; c < store.n_cols(); ++c) {
      std::vector<double> values;
      values.reserve(idx.size());
      for (std::size_t r : idx) {
        values.push_back(store.values[r * store.n_cols() + c]);
      }
      rows.push_back(summarize_column(store.names[c], mode, std::move(values)));
    }
  }
  return rows;
}

void write_summary_csv(std::ostream& os,
                       const std::vector<CoordinateSummary>& rows) {
  os << "coordinate,mode,n,median,q17,q83,q025,q975\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << ',' << buf;
  };
  for (const CoordinateSummary& s : rows) {
    os << s.coordinate << ',' << s.mode << ',' << s.n;
    put(s.median);
    put(s.q17);
    put(s.q83);
    put(s.q025);
    put(s.q975);
    os << '\n';
  }
}

std::optional<double> suggest_mode_split(const std::vector<double>& draws,
                                         std::size_t n_bins) {
  if (draws.size() < 10 || n_bins < 3) return std::nullopt;
  const auto [lo_it, hi_it] = std::minmax_element(draws.begin(), draws.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) return std::nullopt;
  const double width = (hi - lo) / static_cast<double>(n_bins);
  std::vector<double> counts(n_bins, 0.0);
  for (double v : draws) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    if (b >= n_bins) b = n_bins - 1;
    counts[b] += 1.0;
  }
  // Deepest valley with a strictly larger bin on both sides.
  std::optional<double> best;
  double best_depth = 0.0;
  for (std::size_t b = 1; b + 1 < n_bins; ++b) {
    double left = 0.0;
    for (std::size_t i = 0; i < b; ++i) left = std::max(left, counts[i]);
    double right = 0.0;
    for (std::size_t i = b + 1; i < n_bins; ++i) {
      right = std::max(right, counts[i]);
    }
    const double depth = std::min(left, right) - counts[b];
    if (left > counts[b] && right > counts[b] && depth > best_depth) {
      best_depth = depth;
      best = lo + width * (static_cast<double>(b) + 0.5);
    }
  }
  return best;
}

}  // namespace pthmm
