#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "pthmm/errors.hpp"

namespace pthmm {

enum class StreamFamily { Poisson, GammaMeanSd };

std::string to_string(StreamFamily family);
StreamFamily stream_family_from_string(const std::string& name);

// Static structure of an HMM: state count, emission stream families, and
// the number of non-baseline categorical covariate levels (0 = homogeneous).
struct ModelSpec {
  int n_states = 1;
  std::vector<StreamFamily> streams;
  int covariate_levels = 0;

  int n_streams() const { return static_cast<int>(streams.size()); }

  void validate() const {
    if (n_states < 1) throw ConfigError("n_states must be >= 1");
    if (streams.empty()) throw ConfigError("at least one stream is required");
    if (covariate_levels < 0) throw ConfigError("covariate_levels must be >= 0");
  }
};

// Per-stream, per-state emission parameters. Poisson streams use `rate`;
// Gamma streams use `mean` and `sd` (all length N).
struct EmissionParams {
  StreamFamily family = StreamFamily::Poisson;
  std::vector<double> rate;
  std::vector<double> mean;
  std::vector<double> sd;
};

// One point in parameter space.
struct ParamVector {
  std::vector<double> delta;                             // N
  std::vector<std::vector<double>> alpha0;               // N rows x (N-1)
  std::vector<std::vector<std::vector<double>>> alpha1;  // N x (N-1) x L
  std::vector<double> zeta;                              // N
  std::vector<EmissionParams> emissions;                 // per stream
};

using TransitionRow = std::vector<double>;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double y) { return std::isnan(y); }

// One observation sequence: values[t * P + p], NaN marks a missing entry.
struct Sequence {
  std::size_t length = 0;
  std::vector<double> values;
  std::vector<int> covariates;  // per time step, level in {0, ..., L}

  double value(std::size_t t, std::size_t p, std::size_t n_streams) const {
    return values[t * n_streams + p];
  }
};

struct ObservationSet {
  std::vector<Sequence> sequences;
};

void validate_params(const ModelSpec& spec, const ParamVector& theta);
void validate_observations(const ModelSpec& spec, const ObservationSet& data);

}  // namespace pthmm
