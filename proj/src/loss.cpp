#include "covgrad/loss.hpp"

#include <cmath>

#include "covgrad/ekf.hpp"
#include "covgrad/errors.hpp"

namespace covgrad {
namespace {

// Eigen-decomposition with the PSD tolerance applied; small negative
// eigenvalues within tolerance are clamped to zero.
Eigen::SelfAdjointEigenSolver<Matrix> CheckedEigen(const Matrix& P, int options) {
  if (P.rows() != P.cols()) throw ContractError("loss argument must be square");
  if (!P.allFinite()) throw NumericalError("non-finite covariance passed to loss", std::nullopt, "loss");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Symmetrize(P), options);
  const double tol = 1e-10 * std::abs(P.trace());
  if (eig.eigenvalues().minCoeff() < -tol) {
    throw NotPSDError("covariance has eigenvalue " + std::to_string(eig.eigenvalues().minCoeff()));
  }
  return eig;
}

void CheckSpec(const LossSpec& spec, Eigen::Index d) {
  if (spec.kind == LossKind::NormalizedTrace &&
      (spec.P0_inv.rows() != d || spec.P0_inv.cols() != d)) {
    throw ContractError("normalized trace needs a " + std::to_string(d) + "x" +
                        std::to_string(d) + " inverse prior");
  }
  if (spec.kind == LossKind::Schatten && !(spec.schatten_power >= 1.0)) {
    throw ContractError("Schatten power must be >= 1");
  }
}

}  // namespace

std::string ToString(LossKind kind) {
  switch (kind) {
    case LossKind::Trace:
      return "trace";
    case LossKind::NormalizedTrace:
      return "normalized_trace";
    case LossKind::Schatten:
      return "schatten";
  }
  return "unknown";
}

LossKind ParseLossKind(const std::string& name) {
  if (name == "trace") return LossKind::Trace;
  if (name == "normalized_trace" || name == "normalized-trace") return LossKind::NormalizedTrace;
  if (name == "schatten") return LossKind::Schatten;
  throw ContractError("unknown loss kind '" + name + "'");
}

LossSpec LossSpec::NormalizedTrace(const Matrix& P0) {
  LossSpec spec;
  spec.kind = LossKind::NormalizedTrace;
  Eigen::LLT<Matrix> llt(P0);
  if (llt.info() != Eigen::Success) throw SingularPriorError("initial covariance is not SPD");
  spec.P0_inv = Symmetrize(llt.solve(Matrix::Identity(P0.rows(), P0.cols())));
  return spec;
}

LossSpec LossSpec::Schatten(double power) {
  LossSpec spec;
  spec.kind = LossKind::Schatten;
  spec.schatten_power = power;
  return spec;
}

double evaluate(const LossSpec& spec, const Matrix& P) {
  CheckSpec(spec, P.rows());
  switch (spec.kind) {
    case LossKind::Trace:
      CheckedEigen(P, Eigen::EigenvaluesOnly);
      return P.trace();
    case LossKind::NormalizedTrace:
      CheckedEigen(P, Eigen::EigenvaluesOnly);
      return (spec.P0_inv * P).trace();
    case LossKind::Schatten: {
      const auto eig = CheckedEigen(P, Eigen::EigenvaluesOnly);
      const Vector lambda = eig.eigenvalues().cwiseMax(0.0);
      const double top = lambda.maxCoeff();
      if (top == 0.0) return 0.0;
      // top * (sum (lambda/top)^s)^(1/s), safe for large s
      const double s = spec.schatten_power;
      double acc = 0.0;
      for (double l : lambda) acc += std::pow(l / top, s);
      return top * std::pow(acc, 1.0 / s);
    }
  }
  throw ContractError("unknown loss kind");
}

Matrix seed_gradient(const LossSpec& spec, const Matrix& P) {
  CheckSpec(spec, P.rows());
  const auto d = P.rows();
  switch (spec.kind) {
    case LossKind::Trace:
      return Matrix::Identity(d, d);
    case LossKind::NormalizedTrace:
      return Symmetrize(spec.P0_inv);
    case LossKind::Schatten: {
      const auto eig = CheckedEigen(P, Eigen::ComputeEigenvectors);
      const Vector lambda = eig.eigenvalues().cwiseMax(0.0);
      const double norm = evaluate(spec, P);
      if (norm == 0.0) return Matrix::Zero(d, d);
      // (sum lambda^s)^((1-s)/s) lambda_i^(s-1) == (lambda_i / norm)^(s-1)
      const double s = spec.schatten_power;
      Vector weights(d);
      for (Eigen::Index i = 0; i < d; ++i) weights(i) = std::pow(lambda(i) / norm, s - 1.0);
      const Matrix& V = eig.eigenvectors();
      Matrix grad = Symmetrize(V * weights.asDiagonal() * V.transpose());
      if (!grad.allFinite()) throw NumericalError("non-finite Schatten gradient", std::nullopt, "seed");
      return grad;
    }
  }
  throw ContractError("unknown loss kind");
}

}  // namespace covgrad
