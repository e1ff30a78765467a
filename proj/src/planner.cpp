#include "covgrad/planner.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "covgrad/errors.hpp"

namespace covgrad {

ControlConstraints ControlConstraints::Unbounded(int control_dim) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Vector::Constant(control_dim, -inf), Vector::Constant(control_dim, inf),
          Vector::Constant(control_dim, inf)};
}

void PlanProblem::Validate() const {
  if (!model) throw ContractError("plan problem has no model");
  if (horizon < 1) throw ContractError("horizon must be at least 1");
  const int du = model->control_dim();
  if (constraints.u_min.size() != du || constraints.u_max.size() != du ||
      constraints.du_max.size() != du) {
    throw ContractError("constraint vectors must match the control dimension");
  }
  if ((constraints.u_min.array() > constraints.u_max.array()).any()) {
    throw ContractError("u_min exceeds u_max");
  }
  if ((constraints.du_max.array() < 0.0).any()) throw ContractError("negative rate bound");
  if (initial.x_hat.size() != model->state_dim()) {
    throw ContractError("initial state does not match the model");
  }
  if (smoothing_window < 1) throw ContractError("smoothing window must be >= 1");
}

std::string ToString(Termination t) {
  switch (t) {
    case Termination::Converged: return "Converged";
    case Termination::MaxIters: return "MaxIters";
    case Termination::LineSearchFailed: return "LineSearchFailed";
    case Termination::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

Matrix ToMatrix(const ControlSequence& controls) {
  if (controls.empty()) return Matrix();
  Matrix m(controls.size(), controls.front().size());
  for (std::size_t n = 0; n < controls.size(); ++n) m.row(n) = controls[n].transpose();
  return m;
}

ControlSequence FromMatrix(const Matrix& m) {
  ControlSequence out(m.rows());
  for (Eigen::Index n = 0; n < m.rows(); ++n) out[n] = m.row(n).transpose();
  return out;
}

ControlSequence project_constraints(const ControlSequence& controls,
                                    const ControlConstraints& c) {
  if ((c.u_min.array() > c.u_max.array()).any() || (c.du_max.array() < 0.0).any()) {
    throw ContractError("inconsistent box/rate bounds");
  }
  ControlSequence out = controls;
  for (std::size_t n = 0; n < out.size(); ++n) {
    Vector& u = out[n];
    if (u.size() != c.u_min.size()) throw ContractError("control dimension mismatch");
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      double lo = c.u_min(k), hi = c.u_max(k);
      if (n > 0) {
        lo = std::max(lo, out[n - 1](k) - c.du_max(k));
        hi = std::min(hi, out[n - 1](k) + c.du_max(k));
      }
      u(k) = std::clamp(u(k), lo, hi);
    }
  }
  return out;
}

int first_violation(const ControlSequence& controls, const ControlConstraints& c, double tol) {
  for (std::size_t n = 0; n < controls.size(); ++n) {
    const Vector& u = controls[n];
    if (u.size() != c.u_min.size() || !u.allFinite()) return static_cast<int>(n);
    if ((u.array() < c.u_min.array() - tol).any() || (u.array() > c.u_max.array() + tol).any()) {
      return static_cast<int>(n);
    }
    if (n > 0 && ((u - controls[n - 1]).array().abs() > c.du_max.array() + tol).any()) {
      return static_cast<int>(n);
    }
  }
  return -1;
}

bool is_feasible(const ControlSequence& controls, const ControlConstraints& c, double tol) {
  return first_violation(controls, c, tol) < 0;
}

ControlSequence sample_initial_controls(const PlanProblem& problem, std::uint64_t seed) {
  problem.Validate();
  const auto& c = problem.constraints;
  if (!c.u_min.allFinite() || !c.u_max.allFinite()) {
    throw ContractError("cannot sample controls from an unbounded box");
  }
  const int N = problem.horizon;
  const int du = static_cast<int>(c.u_min.size());
  std::mt19937_64 rng(seed);
  ControlSequence raw(N, Vector(du));
  for (int n = 0; n < N; ++n) {
    for (int k = 0; k < du; ++k) {
      const double unit = std::generate_canonical<double, 53>(rng);
      raw[n](k) = c.u_min(k) + (c.u_max(k) - c.u_min(k)) * unit;
    }
  }
  // Centred moving average, truncated at the ends.
  const int half = problem.smoothing_window / 2;
  ControlSequence smooth(N, Vector::Zero(du));
  for (int n = 0; n < N; ++n) {
    const int lo = std::max(0, n - half), hi = std::min(N - 1, n + half);
    for (int m = lo; m <= hi; ++m) smooth[n] += raw[m];
    smooth[n] /= static_cast<double>(hi - lo + 1);
  }
  return project_constraints(smooth, c);
}

std::vector<Vector> rollout_noise_free(const Vector& x0, const ControlSequence& controls,
                                       const SystemModel& model) {
  std::vector<Vector> states{x0};
  const Vector w0 = Vector::Zero(model.noise_dim());
  for (const auto& u : controls) states.push_back(model.f(states.back(), u, w0));
  return states;
}

namespace {

const std::vector<Eigen::Vector2d>& CorridorReference(const Corridor& corridor, int N) {
  if (static_cast<int>(corridor.reference.size()) != N + 1) {
    throw ContractError("corridor reference must have N+1 points");
  }
  return corridor.reference;
}

}  // namespace

Objective evaluate_objective(const PlanProblem& problem, const ControlSequence& controls,
                             bool with_gradient) {
  const SystemModel& model = *problem.model;
  const EKFTrace trace = forward_pass(problem.initial, controls, model);
  Objective obj;
  obj.loss = evaluate(problem.loss, trace.final_covariance());
  if (with_gradient) obj.gradient = backward_pass(trace, problem.loss, model).dL_du;

  if (problem.corridor) {
    const Corridor& cor = *problem.corridor;
    const int N = static_cast<int>(controls.size());
    const auto& ref = CorridorReference(cor, N);
    std::vector<Vector> pen_grad_x(N + 1, Vector::Zero(model.state_dim()));
    for (int n = 1; n <= N; ++n) {
      const Vector& x = trace.steps[n - 1].x_hat;
      const Eigen::Vector2d offset(x(cor.x_index) - ref[n](0), x(cor.y_index) - ref[n](1));
      const double dist = offset.norm();
      const double excess = dist - cor.max_distance;
      obj.corridor_violation = std::max(obj.corridor_violation, excess);
      if (excess > 0.0) {
        obj.penalty += cor.weight * excess * excess;
        const Eigen::Vector2d g = 2.0 * cor.weight * excess * offset / dist;
        pen_grad_x[n](cor.x_index) += g(0);
        pen_grad_x[n](cor.y_index) += g(1);
      }
    }
    if (with_gradient && obj.penalty > 0.0) {
      // Adjoint of x_n = f(x_{n-1}, u_n, 0).
      Vector lambda = Vector::Zero(model.state_dim());
      for (int n = N; n >= 1; --n) {
        const EKFStepRecord& rec = trace.steps[n - 1];
        lambda += pen_grad_x[n];
        obj.gradient.row(n - 1) += (model.Ju(rec.x_hat_prev, rec.u).transpose() * lambda).transpose();
        lambda = rec.F.transpose() * lambda;
      }
    }
  }
  obj.value = obj.loss + obj.penalty;
  return obj;
}

LineSearchResult line_search(const PlanProblem& problem, const ControlSequence& controls,
                             const Matrix& gradient, double objective_at_controls) {
  LineSearchResult out;
  out.controls = controls;
  out.objective = objective_at_controls;
  const double g_inf = gradient.size() ? gradient.cwiseAbs().maxCoeff() : 0.0;
  if (g_inf == 0.0) {
    out.accepted = true;
    return out;
  }
  const auto& opt = problem.optimizer;
  const Matrix u = ToMatrix(controls);
  double alpha = opt.alpha0 / (1.0 + g_inf);
  for (int trial = 0; trial <= opt.max_halvings; ++trial, alpha *= 0.5) {
    const ControlSequence candidate =
        project_constraints(FromMatrix(u - alpha * gradient), problem.constraints);
    const Matrix step = ToMatrix(candidate) - u;
    if (step.cwiseAbs().maxCoeff() == 0.0) {
      if (trial == 0) {
        // Every coordinate pushes against an active bound: stationary.
        out.accepted = true;
        return out;
      }
      continue;
    }
    const double slope = gradient.cwiseProduct(step).sum();
    if (!(slope < 0.0)) continue;
    double value;
    try {
      value = evaluate_objective(problem, candidate, false).value;
      ++out.evaluations;
    } catch (const DomainError&) {
      continue;
    } catch (const NumericalError&) {
      continue;
    }
    if (value <= objective_at_controls + opt.armijo_c1 * slope) {
      out.step = alpha;
      out.controls = candidate;
      out.objective = value;
      out.accepted = true;
      return out;
    }
  }
  return out;
}

PlanResult optimize(const PlanProblem& problem_in, const ControlSequence& initial_controls) {
  problem_in.Validate();
  if (static_cast<int>(initial_controls.size()) != problem_in.horizon) {
    throw ContractError("initial controls do not match the horizon");
  }
  PlanProblem problem = problem_in;
  ControlSequence u = project_constraints(initial_controls, problem.constraints);
  const SystemModel& model = *problem.model;
  if (problem.corridor && problem.corridor->reference.empty()) {
    const auto states = rollout_noise_free(problem.initial.x_hat, u, model);
    for (const auto& x : states) {
      problem.corridor->reference.emplace_back(x(problem.corridor->x_index),
                                               x(problem.corridor->y_index));
    }
  }

  PlanResult result;
  result.termination = Termination::MaxIters;
  Objective obj;
  try {
    obj = evaluate_objective(problem, u, true);
  } catch (const NumericalError& e) {
    result.controls = u;
    result.termination = Termination::NumericalFailure;
    result.message = e.what();
    return result;
  }
  result.initial_loss = obj.loss;
  result.loss_history.push_back(obj.value);

  int small_steps = 0;
  try {
    for (int iter = 0; iter < problem.optimizer.max_iters; ++iter) {
      if (problem.optimizer.verify_gradients) {
        FdOptions fd;
        const Matrix numeric = fd_gradient_controls(problem.initial, u, model, problem.loss, fd);
        const Matrix analytic = backward_pass(forward_pass(problem.initial, u, model),
                                              problem.loss, model).dL_du;
        const Comparison c = compare(analytic, numeric, problem.optimizer.verify_tolerance);
        result.max_gradient_check_error = std::max(result.max_gradient_check_error, c.max_rel_error);
      }
      const LineSearchResult ls = line_search(problem, u, obj.gradient, obj.value);
      if (!ls.accepted) {
        result.termination = Termination::LineSearchFailed;
        result.message = "no step satisfied the sufficient-decrease condition";
        break;
      }
      if (ls.step == 0.0) {
        result.termination = Termination::Converged;
        result.message = "stationary point";
        break;
      }
      const double rel = (obj.value - ls.objective) / std::max(std::abs(obj.value), 1e-300);
      u = ls.controls;
      obj = evaluate_objective(problem, u, true);
      result.loss_history.push_back(obj.value);
      ++result.iterations;
      small_steps = rel < problem.optimizer.tolerance ? small_steps + 1 : 0;
      if (small_steps >= problem.optimizer.patience) {
        result.termination = Termination::Converged;
        result.message = "relative improvement below tolerance";
        break;
      }
    }
  } catch (const NumericalError& e) {
    result.termination = Termination::NumericalFailure;
    result.message = e.what();
  }

  result.controls = u;
  result.states = rollout_noise_free(problem.initial.x_hat, u, model);
  result.final_loss = obj.loss;
  result.corridor_violation = std::max(0.0, obj.corridor_violation);
  result.feasible = is_feasible(u, problem.constraints);
  return result;
}

}  // namespace covgrad
