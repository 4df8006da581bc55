#include "pthmm/target.hpp"

#include <cmath>

#include "pthmm/hmm.hpp"
#include "pthmm/priors.hpp"

namespace pthmm {

std::size_t flat_dim(const ModelSpec& spec) {
  const std::size_t n = static_cast<std::size_t>(spec.n_states);
  const std::size_t l = static_cast<std::size_t>(spec.covariate_levels);
  std::size_t d = n;            // delta
  d += n * n;                   // per row: alpha0 (N-1) + zeta
  d += n * (n - 1) * l;         // alpha1
  for (StreamFamily family : spec.streams) {
    d += family == StreamFamily::Poisson ? n : 2 * n;
  }
  return d;
}

std::vector<Block> block_layout(const ModelSpec& spec) {
  const std::size_t n = static_cast<std::size_t>(spec.n_states);
  const std::size_t l = static_cast<std::size_t>(spec.covariate_levels);
  std::vector<Block> blocks;
  std::size_t offset = 0;
  if (n > 1) {
    // a 1-simplex is pinned at delta = 1: no block, nothing to propose
    blocks.push_back({"delta", offset, n, BlockTransform::Simplex});
  }
  offset += n;
  for (std::size_t i = 0; i < n; ++i) {
    // zeta_ii is proposed jointly with its row's baseline parameters.
    blocks.push_back({"alpha0_row" + std::to_string(i + 1), offset, n,
                      BlockTransform::Identity});
    offset += n;
  }
  if (l > 0) {
    for (std::size_t i = 0; i < n; ++i) {
      blocks.push_back({"alpha1_row" + std::to_string(i + 1), offset,
                        (n - 1) * l, BlockTransform::Identity});
      offset += (n - 1) * l;
    }
  }
  for (std::size_t p = 0; p < spec.streams.size(); ++p) {
    const std::size_t size =
        spec.streams[p] == StreamFamily::Poisson ? n : 2 * n;
    blocks.push_back({"stream" + std::to_string(p + 1), offset, size,
                      BlockTransform::LogScale});
    offset += size;
  }
  return blocks;
}

std::vector<std::string> coord_names(const ModelSpec& spec) {
  const int n = spec.n_states;
  const int l_count = spec.covariate_levels;
  std::vector<std::string> names;
  names.reserve(flat_dim(spec));
  for (int s = 1; s <= n; ++s) names.push_back("delta" + std::to_string(s));
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      if (j == i) continue;
      names.push_back("alpha0_" + std::to_string(i) + std::to_string(j));
    }
    names.push_back("zeta" + std::to_string(i));
  }
  for (int i = 1; i <= n && l_count > 0; ++i) {
    for (int j = 1; j <= n; ++j) {
      if (j == i) continue;
      for (int l = 1; l <= l_count; ++l) {
        names.push_back("alpha1_" + std::to_string(i) + std::to_string(j) +
                        "_" + std::to_string(l));
      }
    }
  }
  for (std::size_t p = 0; p < spec.streams.size(); ++p) {
    const std::string sp = std::to_string(p + 1);
    if (spec.streams[p] == StreamFamily::Poisson) {
      for (int s = 1; s <= n; ++s) {
        names.push_back("lambda" + sp + "_" + std::to_string(s));
      }
    } else {
      for (int s = 1; s <= n; ++s) {
        names.push_back("mu" + sp + "_" + std::to_string(s));
      }
      for (int s = 1; s <= n; ++s) {
        names.push_back("sigma" + sp + "_" + std::to_string(s));
      }
    }
  }
  return names;
}

std::vector<double> flatten(const ModelSpec& spec, const ParamVector& theta) {
  const int n = spec.n_states;
  const int l_count = spec.covariate_levels;
  std::vector<double> x;
  x.reserve(flat_dim(spec));
  x.insert(x.end(), theta.delta.begin(), theta.delta.end());
  for (int i = 0; i < n; ++i) {
    x.insert(x.end(), theta.alpha0[i].begin(), theta.alpha0[i].end());
    x.push_back(theta.zeta[i]);
  }
  for (int i = 0; i < n && l_count > 0; ++i) {
    for (int k = 0; k < n - 1; ++k) {
      x.insert(x.end(), theta.alpha1[i][k].begin(), theta.alpha1[i][k].end());
    }
  }
  for (const EmissionParams& e : theta.emissions) {
    if (e.family == StreamFamily::Poisson) {
      x.insert(x.end(), e.rate.begin(), e.rate.end());
    } else {
      x.insert(x.end(), e.mean.begin(), e.mean.end());
      x.insert(x.end(), e.sd.begin(), e.sd.end());
    }
  }
  return x;
}

ParamVector unflatten(const ModelSpec& spec, std::span<const double> x) {
  const int n = spec.n_states;
  const int l_count = spec.covariate_levels;
  if (x.size() != flat_dim(spec)) {
    throw ConfigError("flat parameter vector has wrong dimension");
  }
  ParamVector theta;
  std::size_t pos = 0;
  theta.delta.assign(x.begin(), x.begin() + n);
  pos += n;
  theta.alpha0.assign(n, std::vector<double>(n - 1));
  theta.zeta.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n - 1; ++k) theta.alpha0[i][k] = x[pos++];
    theta.zeta[i] = x[pos++];
  }
  if (l_count > 0) {
    theta.alpha1.assign(n, std::vector<std::vector<double>>(
                               n - 1, std::vector<double>(l_count)));
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < n - 1; ++k) {
        for (int l = 0; l < l_count; ++l) theta.alpha1[i][k][l] = x[pos++];
      }
    }
  }
  theta.emissions.resize(spec.streams.size());
  for (std::size_t p = 0; p < spec.streams.size(); ++p) {
    EmissionParams& e = theta.emissions[p];
    e.family = spec.streams[p];
    if (e.family == StreamFamily::Poisson) {
      e.rate.assign(x.begin() + pos, x.begin() + pos + n);
      pos += n;
    } else {
      e.mean.assign(x.begin() + pos, x.begin() + pos + n);
      pos += n;
      e.sd.assign(x.begin() + pos, x.begin() + pos + n);
      pos += n;
    }
  }
  return theta;
}

HmmTarget::HmmTarget(ModelSpec spec, ObservationSet data, PriorConfig prior)
    : spec_(std::move(spec)),
      data_(std::move(data)),
      prior_(std::move(prior)) {
  spec_.validate();
  prior_.validate(spec_);
  validate_observations(spec_, data_);
  dim_ = flat_dim(spec_);
  blocks_ = block_layout(spec_);
  names_ = pthmm::coord_names(spec_);
}

double HmmTarget::log_likelihood(std::span<const double> x) const {
  return pthmm::log_likelihood(spec_, unflatten(spec_, x), data_);
}

double HmmTarget::log_prior(std::span<const double> x) const {
  return pthmm::log_prior(spec_, unflatten(spec_, x), prior_);
}

std::vector<double> HmmTarget::draw_init(Rng& rng) const {
  return flatten(spec_, sample_prior(spec_, prior_, rng));
}

}  // namespace pthmm
