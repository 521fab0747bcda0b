#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ionfb {

/// Malformed or invalid run configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation that could not produce a trustworthy result: integrator
/// blow-up, fit non-convergence, too few events. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when the ion leaves the configured trap extent.
class AbortThresholdError : public NumericalError {
 public:
  AbortThresholdError(std::uint64_t step, const std::string& what)
      : NumericalError(what), step_(step) {}
  std::uint64_t step() const { return step_; }

 private:
  std::uint64_t step_;
};

}  // namespace ionfb
