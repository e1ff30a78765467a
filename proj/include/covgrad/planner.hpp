#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "covgrad/backprop.hpp"
#include "covgrad/gradcheck.hpp"

namespace covgrad {

// Box bounds on every control plus a bound on the change between
// consecutive controls (already multiplied by dt). Infinite entries disable
// a bound.
struct ControlConstraints {
  Vector u_min;
  Vector u_max;
  Vector du_max;

  static ControlConstraints Unbounded(int control_dim);
};

// Keeps the noise-free trajectory within `max_distance` of a reference path.
// Enforced as the penalty weight * sum_n max(0, |p_n - ref_n| - max_distance)^2.
struct Corridor {
  std::vector<Eigen::Vector2d> reference;  // N+1 points; empty -> rollout of the initial controls
  int x_index = 1;
  int y_index = 2;
  double max_distance = 1.5;
  double weight = 100.0;
};

struct OptimizerOptions {
  int max_iters = 500;
  double tolerance = 1e-6;  // relative loss improvement
  int patience = 3;         // consecutive small improvements before stopping
  double armijo_c1 = 1e-4;
  int max_halvings = 30;
  double alpha0 = 1.0;      // first trial is alpha0 / (1 + |g|_inf)
  bool verify_gradients = false;
  double verify_tolerance = 1e-4;
};

struct PlanProblem {
  BeliefState initial;
  std::shared_ptr<const SystemModel> model;
  LossSpec loss;
  int horizon = 0;
  ControlConstraints constraints;
  std::optional<Corridor> corridor;
  OptimizerOptions optimizer;
  int smoothing_window = 15;  // moving-average length used by sample_initial_controls

  void Validate() const;
};

enum class Termination { Converged, MaxIters, LineSearchFailed, NumericalFailure };
std::string ToString(Termination t);

struct PlanResult {
  ControlSequence controls;
  std::vector<Vector> states;        // noise-free rollout, N+1 entries
  std::vector<double> loss_history;  // objective at every accepted iterate (index 0 = start)
  double initial_loss = 0.0;         // covariance loss only
  double final_loss = 0.0;
  bool feasible = false;
  int iterations = 0;
  Termination termination = Termination::MaxIters;
  double corridor_violation = 0.0;     // max excess distance, metres
  double max_gradient_check_error = 0.0;  // filled when verify_gradients is on
  std::string message;
};

// Uniform samples in the box, smoothed by a centred moving average, then
// projected so box and rate bounds hold. Deterministic in `seed`.
ControlSequence sample_initial_controls(const PlanProblem& problem, std::uint64_t seed);

// Clamp to the box, then one forward sweep limiting each change relative to
// the already-projected previous control. Idempotent.
ControlSequence project_constraints(const ControlSequence& controls,
                                    const ControlConstraints& constraints);

bool is_feasible(const ControlSequence& controls, const ControlConstraints& constraints,
                 double tol = 1e-9);

// First index violating the constraints, or -1.
int first_violation(const ControlSequence& controls, const ControlConstraints& constraints,
                    double tol = 1e-9);

std::vector<Vector> rollout_noise_free(const Vector& x0, const ControlSequence& controls,
                                       const SystemModel& model);

// Covariance loss plus corridor penalty and its gradient.
struct Objective {
  double value = 0.0;
  double loss = 0.0;
  double penalty = 0.0;
  double corridor_violation = 0.0;
  Matrix gradient;  // N x d_u, empty unless requested
};

Objective evaluate_objective(const PlanProblem& problem, const ControlSequence& controls,
                             bool with_gradient);

struct LineSearchResult {
  double step = 0.0;
  ControlSequence controls;
  double objective = 0.0;
  bool accepted = false;
  int evaluations = 0;
};

// Backtracking on the projected path u(a) = P(u - a g), accepting the first
// a with f(u(a)) <= f(u) + c1 g.(u(a) - u).
LineSearchResult line_search(const PlanProblem& problem, const ControlSequence& controls,
                             const Matrix& gradient, double objective_at_controls);

PlanResult optimize(const PlanProblem& problem, const ControlSequence& initial_controls);

// Flattens an N x d_u gradient matrix to/from a control sequence layout.
Matrix ToMatrix(const ControlSequence& controls);
ControlSequence FromMatrix(const Matrix& m);

}  // namespace covgrad
