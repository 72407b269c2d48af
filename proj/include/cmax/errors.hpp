#pragma once

#include <stdexcept>
#include <string>

namespace cmax {

// Error taxonomy. The CLI maps each family onto an exit code:
//   ConfigError -> 1, DataError -> 2, NumericalError -> 3.
// Shape and precondition violations inside the library throw
// std::invalid_argument.

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values, representation collapse, degenerate statistics.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cmax
