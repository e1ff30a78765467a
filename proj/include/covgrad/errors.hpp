#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace covgrad {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Model returned matrices of the wrong shape, or was called with bad indices.
class ModelContractError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation precondition (bad bounds, empty input, ...).
class ContractError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain of a model map (e.g. tan at pi/2).
class DomainError : public Error {
 public:
  using Error::Error;
};

class NotPSDError : public Error {
 public:
  using Error::Error;
};

class SingularPriorError : public Error {
 public:
  using Error::Error;
};

// Non-finite intermediate. `step` is the 1-based filter step when known,
// `stage` names the formula that produced it.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::optional<int> step = std::nullopt,
                 std::string stage = {})
      : Error(Describe(what, step, stage)), step_(step), stage_(std::move(stage)) {}

  std::optional<int> step() const { return step_; }
  const std::string& stage() const { return stage_; }

 private:
  static std::string Describe(const std::string& what, std::optional<int> step,
                              const std::string& stage) {
    std::string msg = what;
    if (step) msg += " (step " + std::to_string(*step) + ")";
    if (!stage.empty()) msg += " [" + stage + "]";
    return msg;
  }

  std::optional<int> step_;
  std::string stage_;
};

class SingularInnovationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SingularNoiseError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace covgrad
