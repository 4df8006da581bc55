#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <span>
#include <vector>

namespace pthmm {

// Deterministic random stream. All draws are produced from raw mt19937_64
// output without stateful distribution objects, so a stream position is
// fully captured by the engine state and checkpoints restore bit-identically.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Independent sub-stream derived from a master seed and an index.
  static Rng substream(std::uint64_t master, std::uint64_t index) {
    return Rng(splitmix(master + 0x9E3779B97F4A7C15ULL * (index + 1)));
  }

  // Uniform on (0, 1).
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; a fresh pair of uniforms per call.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t integer(std::uint64_t n) {  // uniform on {0, ..., n-1}
    // Rejection to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  // Gamma(shape, rate) via Marsaglia-Tsang.
  double gamma(double shape, double rate) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / (3.0 * std::sqrt(d));
    for (;;) {
      double x;
      double v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
        return d * v / rate;
      }
    }
  }

  std::vector<double> dirichlet(std::span<const double> concentration) {
    std::vector<double> out(concentration.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = gamma(concentration[i], 1.0);
      sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
  }

  // Poisson draw; splits large means so the count loop stays short.
  std::uint64_t poisson(double mean) {
    std::uint64_t total = 0;
    while (mean > 30.0) {
      total += poisson(mean / 2.0);
      mean /= 2.0;
    }
    const double limit = std::exp(-mean);
    double prod = 1.0;
    std::uint64_t k = 0;
    for (;;) {
      prod *= uniform();
      if (prod <= limit) return total + k;
      ++k;
    }
  }

  // Index drawn from unnormalized non-negative weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      u -= weights[i];
      if (u <= 0.0) return i;
    }
    return weights.size() - 1;
  }

  void save(std::ostream& os) const { os << gen_; }
  void load(std::istream& is) { is >> gen_; }

  bool operator==(const Rng& other) const { return gen_ == other.gen_; }

 private:
  static std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

  std::mt19937_64 gen_;
};

}  // namespace pthmm
