#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace symplectic {

// Numerical procedure failed to converge or produced an inconsistent result.
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller supplied invalid data (duplicate nodes, bad shapes, mismatched grids).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Problem, scheme or method set up inconsistently, or a data file is missing.
class ConfigurationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric is undefined for the given trajectory (zero energy denominator).
class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Output file could not be written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or a left-the-domain condition during integration.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what, std::int64_t step = -1)
      : std::runtime_error(what), step_(step) {}
  std::int64_t step() const { return step_; }
  DivergenceError at_step(std::int64_t step) const {
    return DivergenceError(std::string(what()) + " (step " + std::to_string(step) + ")", step);
  }

 private:
  std::int64_t step_;
};

}  // namespace symplectic
