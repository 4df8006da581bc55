#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pthmm/errors.hpp"

namespace pthmm {

// Retained draws: one named coordinate per column, one draw per row.
struct SampleStore {
  std::vector<std::string> names;
  std::vector<std::uint64_t> iterations;
  std::vector<double> values;  // row-major, n_rows x names.size()

  std::size_t n_rows() const { return iterations.size(); }
  std::size_t n_cols() const { return names.size(); }

  std::span<const double> row(std::size_t r) const {
    return {values.data() + r * n_cols(), n_cols()};
  }

  void append(std::uint64_t iteration, std::span<const double> draw) {
    iterations.push_back(iteration);
    values.insert(values.end(), draw.begin(), draw.end());
  }

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return static_cast<int>(i);
    }
    throw DataError("unknown coordinate: " + name);
  }

  std::vector<double> column_values(const std::string& name) const {
    const std::size_t c = static_cast<std::size_t>(column(name));
    std::vector<double> out(n_rows());
    for (std::size_t r = 0; r < n_rows(); ++r) {
      out[r] = values[r * n_cols() + c];
    }
    return out;
  }
};

}  // namespace pthmm
