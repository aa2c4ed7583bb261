#pragma once

#include <stdexcept>
#include <string>

namespace followup {

// Bad or inconsistent caller input: empty samples, out-of-range parameters,
// malformed files.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The input is valid but the requested quantity does not exist for it
// (no events to test, divergent likelihood, undefined ratio).
class ComputationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Two-group Cox partial likelihood has no finite maximizer.
// direction is +1 when the log hazard ratio diverges to +inf, -1 for -inf.
class MonotoneLikelihood : public ComputationError {
 public:
  explicit MonotoneLikelihood(int direction)
      : ComputationError(direction > 0
                             ? "monotone likelihood: log hazard ratio diverges to +inf"
                             : "monotone likelihood: log hazard ratio diverges to -inf"),
        direction_(direction) {}

  int direction() const noexcept { return direction_; }

 private:
  int direction_;
};

}  // namespace followup
