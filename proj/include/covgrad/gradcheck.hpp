#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "covgrad/ekf.hpp"
#include "covgrad/loss.hpp"

namespace covgrad {

// Finite-difference oracles for the backward pass. Everything here goes
// through forward_pass + evaluate only.

struct FdOptions {
  double step_scale = 1e-5;  // h = step_scale * (1 + |value|)
  bool central = true;       // one-sided forward differences otherwise
  int threads = 1;           // entries are independent; any count gives identical results
};

using ControlSequence = std::vector<Vector>;

// Loss of the zero-innovation filter run.
double loss_of_controls(const BeliefState& initial, const ControlSequence& controls,
                        const SystemModel& model, const LossSpec& spec);

// N x d_u matrix of dL/du.
Matrix fd_gradient_controls(const BeliefState& initial, const ControlSequence& controls,
                            const SystemModel& model, const LossSpec& spec,
                            const FdOptions& options = {});

// Symmetric-matrix inputs are perturbed on the (i,j)/(j,i) pair together and
// the off-diagonal difference is halved, matching the entrywise gradient
// convention of the backward pass.
std::vector<Matrix> fd_gradient_Q(const BeliefState& initial, const ControlSequence& controls,
                                  const SystemModel& model, const LossSpec& spec,
                                  const FdOptions& options = {});
std::vector<Matrix> fd_gradient_R(const BeliefState& initial, const ControlSequence& controls,
                                  const SystemModel& model, const LossSpec& spec,
                                  const FdOptions& options = {});
Matrix fd_gradient_P0(const BeliefState& initial, const ControlSequence& controls,
                      const SystemModel& model, const LossSpec& spec,
                      const FdOptions& options = {});

// Central differences of a scalar function of a symmetric matrix.
Matrix fd_symmetric_gradient(const std::function<double(const Matrix&)>& fn, const Matrix& X,
                             double step_scale = 1e-5);

struct Comparison {
  double max_rel_error = 0.0;  // over entries whose absolute gap exceeds the floor
  double max_abs_error = 0.0;
  Eigen::Index worst_row = -1;
  Eigen::Index worst_col = -1;
  bool passed = true;
};

// Entry (i,j) passes when |a - b| <= max(rel_tol * max(|a|, |b|), abs_floor).
Comparison compare(const Matrix& analytic, const Matrix& numeric, double rel_tol,
                   double abs_floor = 1e-8);

// Merges per-step comparisons; worst_row is the 0-based step.
Comparison compare(const std::vector<Matrix>& analytic, const std::vector<Matrix>& numeric,
                   double rel_tol, double abs_floor = 1e-8);

// Max relative error of every Jacobian / Jacobian-derivative of `model`
// against central differences at (x, u).
struct ModelDerivativeReport {
  double F = 0, G = 0, H = 0, Ju = 0;
  double dF_dx = 0, dF_du = 0, dG_dx = 0, dG_du = 0, dH_dx = 0, dR_dx = 0;
  double worst() const;
};
ModelDerivativeReport check_model_derivatives(const SystemModel& model, const Vector& x,
                                              const Vector& u, double step = 1e-6);

// --- Matrix calculus rules -------------------------------------------------

enum class MatrixRule { XYXt, YXYt, Inverse, VectorChain, ScalarTrace };

std::string ToString(MatrixRule rule);
inline constexpr MatrixRule kAllMatrixRules[] = {MatrixRule::XYXt, MatrixRule::YXYt,
                                                 MatrixRule::Inverse, MatrixRule::VectorChain,
                                                 MatrixRule::ScalarTrace};

// L(M) = tr(C^T M) + 1/2 tr(W M W M^T), W symmetric; dL/dM = C + W M W.
// For vectors (single-column M) use W as d x d and the term 1/2 m^T W m.
struct QuadraticLoss {
  Matrix C;
  Matrix W;
  double operator()(const Matrix& M) const;
  Matrix gradient(const Matrix& M) const;
};

struct RuleCheck {
  Matrix analytic;
  Matrix numeric;
  double max_rel_error = 0.0;
};

// Instantiated rule:
//   XYXt:        M = X Y X^T,           dL/dX = 2 dL/dM X Y^T (dL/dM, Y symmetric)
//   YXYt:        M = Y X Y^T,           dL/dX = Y^T dL/dM Y
//   Inverse:     M = X^-1,              dL/dX = -M^T dL/dM M^T
//   VectorChain: m = x.*x + Y sin(x),   dL/dx = J^T dL/dm   (X is a column)
//   ScalarTrace: M(s) = X + s Y + s^2 Y Y at s = 0,  dL/ds = tr(Y^T dL/dM)
RuleCheck check_matrix_rule(MatrixRule rule, const Matrix& X, const Matrix& Y,
                            const QuadraticLoss& loss);

// Random instance of dimension `dim` (<= 8); returns the max relative
// discrepancy between the analytic rule and finite differences.
double verify_matrix_rule(MatrixRule rule, int dim, std::mt19937_64& rng);

}  // namespace covgrad
