#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pthmm/model.hpp"
#include "pthmm/priors.hpp"
#include "pthmm/rng.hpp"

namespace pthmm {

// Proposal transform for one parameter sub-block.
enum class BlockTransform {
  Identity,  // plain Gaussian random walk
  LogScale,  // Gaussian walk on log coordinates, positivity preserved
  Simplex,   // Gaussian walk on the additive-log-ratio transform
};

struct Block {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;
  BlockTransform transform = BlockTransform::Identity;
};

// A distribution the sampler can run on: flat coordinates, a block layout
// for component-wise moves, and separate likelihood / prior terms so the
// engine can temper the likelihood only.
class Target {
 public:
  virtual ~Target() = default;
  virtual std::size_t dim() const = 0;
  virtual const std::vector<Block>& blocks() const = 0;
  virtual const std::vector<std::string>& coord_names() const = 0;
  virtual double log_likelihood(std::span<const double> x) const = 0;
  virtual double log_prior(std::span<const double> x) const = 0;
  virtual std::vector<double> draw_init(Rng& rng) const = 0;
};

// Flat coordinate layout for an HMM parameter vector:
// delta, then per-row (alpha0, zeta), then alpha1, then per-stream emissions.
std::vector<Block> block_layout(const ModelSpec& spec);
std::vector<std::string> coord_names(const ModelSpec& spec);
std::size_t flat_dim(const ModelSpec& spec);
std::vector<double> flatten(const ModelSpec& spec, const ParamVector& theta);
ParamVector unflatten(const ModelSpec& spec, std::span<const double> x);

class HmmTarget : public Target {
 public:
  HmmTarget(ModelSpec spec, ObservationSet data, PriorConfig prior);

  std::size_t dim() const override { return dim_; }
  const std::vector<Block>& blocks() const override { return blocks_; }
  const std::vector<std::string>& coord_names() const override {
    return names_;
  }
  double log_likelihood(std::span<const double> x) const override;
  double log_prior(std::span<const double> x) const override;
  std::vector<double> draw_init(Rng& rng) const override;

  const ModelSpec& spec() const { return spec_; }
  const PriorConfig& prior() const { return prior_; }
  const ObservationSet& data() const { return data_; }

 private:
  ModelSpec spec_;
  ObservationSet data_;
  PriorConfig prior_;
  std::size_t dim_;
  std::vector<Block> blocks_;
  std::vector<std::string> names_;
};

}  // namespace pthmm
