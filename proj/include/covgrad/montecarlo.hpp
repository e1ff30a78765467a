#pragma once

#include <cstdint>
#include <vector>

#include "covgrad/ekf.hpp"
#include "covgrad/planner.hpp"

namespace covgrad {

struct Rollout {
  std::vector<Vector> true_states;   // N+1
  std::vector<Vector> observations;  // N, y_n for n = 1..N
};

// Noisy simulation of the true system: w_n ~ N(0, Q(n)), y_n = h(x_n) + e_n with
// e_n ~ N(0, R(n, x_n)). Process noise that would leave the model's domain is
// redrawn up to 5 times.
Rollout rollout(const Vector& true_initial, const ControlSequence& controls,
                const SystemModel& model, std::uint64_t seed);

struct TrialRecord {
  std::vector<Vector> true_states;   // N+1
  std::vector<Vector> observations;  // N
  std::vector<Vector> estimates;     // N+1
  std::vector<Vector> abs_errors;    // N+1, |x_hat - x| per component
  std::vector<double> trace_history; // N, tr(P_{n|n})
  std::vector<double> output_errors; // N+1, |h(x) - h(x_hat)|
};

// Rollout followed by an EKF that uses the measured innovations.
TrialRecord run_trial(const PlanProblem& problem, const ControlSequence& controls,
                      const Vector& true_initial, std::uint64_t seed);

struct MonteCarloOptions {
  int trials = 200;
  std::uint64_t base_seed = 1000;  // trial i uses base_seed + i
  int threads = 0;                 // 0 = hardware concurrency
};

std::vector<TrialRecord> run_trials(const PlanProblem& problem, const ControlSequence& controls,
                                    const Vector& true_initial, const MonteCarloOptions& options);

struct ErrorSummary {
  Matrix mean_abs_error;  // (N+1) x d
  Matrix std_abs_error;   // (N+1) x d, population std
  Vector mean_trace;      // N
  double mean_final_position_error = 0.0;  // mean over trials of |h(x_N) - h(x_hat_N)|
  int trials = 0;
};

ErrorSummary aggregate(const std::vector<TrialRecord>& trials);

// Mean over trials of the Euclidean norm of the final error on the given state
// components (e.g. the two lever-arm coordinates).
double mean_final_error_norm(const std::vector<TrialRecord>& trials,
                             const std::vector<int>& components);

}  // namespace covgrad
