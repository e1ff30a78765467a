#pragma once

#include <string>

#include "covgrad/system_model.hpp"

namespace covgrad {

enum class LossKind { Trace, NormalizedTrace, Schatten };

std::string ToString(LossKind kind);
LossKind ParseLossKind(const std::string& name);

inline constexpr double kDefaultSchattenPower = 20.0;

// Scalar loss on the final covariance.
//   Trace:            tr(P)
//   NormalizedTrace:  tr(P0^-1 P)
//   Schatten:         (sum_i lambda_i^s)^(1/s)
struct LossSpec {
  LossKind kind = LossKind::Trace;
  Matrix P0_inv;  // NormalizedTrace only
  double schatten_power = kDefaultSchattenPower;

  static LossSpec Trace() { return {}; }
  static LossSpec NormalizedTrace(const Matrix& P0);
  static LossSpec Schatten(double power = kDefaultSchattenPower);
};

double evaluate(const LossSpec& spec, const Matrix& P);

// dL/dP, symmetric.
Matrix seed_gradient(const LossSpec& spec, const Matrix& P);

}  // namespace covgrad
