#pragma once

#include <stdexcept>
#include <string>

namespace crowdscore {

/// Configuration or construction rejected before any work started.
struct InvalidInstanceError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A worker was asked for more evaluations than its per-worker cap allows.
struct WorkerExhaustedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An (object, worker) pair was evaluated twice.
struct DegenerateAllocationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A finite worker pool ran out of fresh workers.
struct SupplyExhaustedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The posterior information matrix is singular (or numerically so); the
/// message names the unidentified parameter directions.
struct UnderdeterminedError : std::runtime_error {
  explicit UnderdeterminedError(const std::string& what, std::string null_space = {})
      : std::runtime_error(what), null_space_description(std::move(null_space)) {}
  std::string null_space_description;
};

/// Pairwise win probability requested for two point masses at the same value.
struct DegenerateComparisonError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed experiment configuration; carries a "file:line: field" style
/// diagnostic suitable for CLI exit code 2.
struct InvalidConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// NaN or otherwise unusable numeric input.
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// The round loop produced an empty plan without any stop rule firing.
struct StallError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace crowdscore
