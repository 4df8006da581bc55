#pragma once

#include <stdexcept>
#include <string>

namespace pthmm {

// Thrown for malformed run configurations (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown for malformed data files (CLI exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pthmm
