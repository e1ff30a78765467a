#pragma once

#include <vector>

#include "covgrad/ekf.hpp"
#include "covgrad/loss.hpp"

namespace covgrad {

// Per-step adjoints of the Riccati intermediates; only filled when requested.
struct StepAdjoints {
  Matrix dL_dF, dL_dG, dL_dH, dL_dP_post, dL_dP_prior;
};

// Gradients of L(P_{N|N}) with respect to every input of the filter.
// Row i of dL_du is the gradient w.r.t. u_{i+1}; row n of dL_dxhat is the
// gradient w.r.t. x_n (row 0 is the initial estimate).
struct GradientSet {
  Matrix dL_du;                 // N x d_u
  Matrix dL_dxhat;              // (N+1) x d
  std::vector<Matrix> dL_dQ;    // N of d_w x d_w
  std::vector<Matrix> dL_dR;    // N of d_y x d_y
  Matrix dL_dP0;                // d x d
  std::vector<StepAdjoints> intermediates;  // empty unless requested
};

struct BackpropOptions {
  bool store_intermediates = false;
};

// Single reverse sweep over `trace`, seeded with dL/dP_{N|N} from `spec`.
GradientSet backward_pass(const EKFTrace& trace, const LossSpec& spec, const SystemModel& model,
                          const BackpropOptions& options = {});

// Same sweep with an explicit seed dL/dP_{N|N} (symmetrised before use).
GradientSet backward_pass_seeded(const EKFTrace& trace, const Matrix& seed,
                                 const SystemModel& model, const BackpropOptions& options = {});

struct LossAndGradient {
  double loss = 0.0;
  GradientSet grads;
};

LossAndGradient gradient_of_loss(const BeliefState& initial, const std::vector<Vector>& controls,
                                 const SystemModel& model, const LossSpec& spec,
                                 const BackpropOptions& options = {});

}  // namespace covgrad
