#pragma once

#include <cmath>
#include <vector>

#include "pthmm/target.hpp"

namespace pthmm {

// 1-D targets with a flat prior on [-50, 50]; used by the ladder tuner
// tests and the end-to-end multimodality checks.
class ScalarToyTarget : public Target {
 public:
  ScalarToyTarget()
      : blocks_{{"x", 0, 1, BlockTransform::Identity}}, names_{"x"} {}

  std::size_t dim() const override { return 1; }
  const std::vector<Block>& blocks() const override { return blocks_; }
  const std::vector<std::string>& coord_names() const override {
    return names_;
  }

  double log_prior(std::span<const double> x) const override {
    return std::abs(x[0]) <= 50.0 ? -std::log(100.0) : kNegInf;
  }

  std::vector<double> draw_init(Rng& rng) const override {
    return {rng.uniform(-50.0, 50.0)};
  }

 private:
  std::vector<Block> blocks_;
  std::vector<std::string> names_;
};

// Standard normal likelihood.
class GaussianToy : public ScalarToyTarget {
 public:
  double log_likelihood(std::span<const double> x) const override {
    return -0.5 * x[0] * x[0];
  }
};

// Equal-weight mixture of unit-width normals at +/- `separation`.
class BimodalToy : public ScalarToyTarget {
 public:
  explicit BimodalToy(double separation = 5.0) : mode_(separation) {}

  double log_likelihood(std::span<const double> x) const override {
    const double a = -0.5 * (x[0] - mode_) * (x[0] - mode_);
    const double b = -0.5 * (x[0] + mode_) * (x[0] + mode_);
    const double hi = std::max(a, b);
    return hi + std::log(0.5 * std::exp(a - hi) + 0.5 * std::exp(b - hi));
  }

 private:
  double mode_;
};

}  // namespace pthmm
