#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ergoguide {

/// Malformed caller input (wrong dimensions, out-of-range values).
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Human model definition violates its invariants.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration file or option is invalid.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A device placement needed by an encoder is missing.
class RegistryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A metric cannot be evaluated on the given log.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(const std::string& what, std::vector<std::string> directions)
      : std::runtime_error(what), deficient_directions_(std::move(directions)) {}

  /// Parameter combinations the sample set cannot identify.
  const std::vector<std::string>& deficient_directions() const noexcept {
    return deficient_directions_;
  }

 private:
  std::vector<std::string> deficient_directions_;
};

class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, double best_penalty)
      : std::runtime_error(what), best_penalty_(best_penalty) {}

  double best_penalty() const noexcept { return best_penalty_; }

 private:
  double best_penalty_;
};

}  // namespace ergoguide
