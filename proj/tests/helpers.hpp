#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pthmm/model.hpp"
#include "pthmm/priors.hpp"
#include "pthmm/rng.hpp"

namespace testutil {

// One-sample Kolmogorov-Smirnov statistic against a CDF.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
  }
  return d;
}

// Asymptotic critical value at alpha = 0.01.
inline double ks_critical_01(std::size_t n) {
  return 1.6276 / std::sqrt(static_cast<double>(n));
}

inline double beta12_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return 1.0 - (1.0 - x) * (1.0 - x);
}

inline double logistic_cdf(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_sd(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

// Random valid parameter vector with moderate emission values.
inline pthmm::ParamVector random_theta(const pthmm::ModelSpec& spec,
                                       pthmm::Rng& rng) {
  pthmm::ParamVector theta =
      pthmm::sample_prior(spec, pthmm::PriorConfig::defaults(spec), rng);
  for (pthmm::EmissionParams& e : theta.emissions) {
    if (e.family == pthmm::StreamFamily::Poisson) {
      for (double& r : e.rate) r = rng.uniform(0.5, 20.0);
    } else {
      for (double& m : e.mean) m = rng.uniform(1.0, 50.0);
      for (double& s : e.sd) s = rng.uniform(0.5, 10.0);
    }
  }
  return theta;
}

}  // namespace testutil
