#pragma once

#include <vector>

#include "covgrad/system_model.hpp"

namespace covgrad {

struct BeliefState {
  Vector x_hat;
  Matrix P;
};

// Everything the forward pass produces at step n (1-based), kept for the
// backward sweep.
struct EKFStepRecord {
  Vector x_hat_prev;  // x_{n-1}
  Vector u;           // u_n
  Vector x_hat;       // x_n (prior == posterior under zero innovation)
  Matrix P_prior;     // P_{n|n-1}
  Matrix P_post;      // P_{n|n}
  Matrix F, G, H, K, S;
  Matrix Q, R;
};

struct EKFTrace {
  BeliefState initial;
  std::vector<EKFStepRecord> steps;

  const Matrix& final_covariance() const {
    return steps.empty() ? initial.P : steps.back().P_post;
  }
};

struct PropagateResult {
  Vector x_hat_prior;
  Matrix P_prior;
  Matrix F;
  Matrix G;
  Matrix Q;
};

struct UpdateResult {
  Matrix P_post;
  Matrix K;
  Matrix S;
  Matrix H;
  Matrix R;
};

// Innovation covariance condition number above which S is rejected.
inline constexpr double kMaxInnovationCondition = 1e12;

inline Matrix Symmetrize(const Matrix& A) { return 0.5 * (A + A.transpose()); }

// Prediction: x = f(x, u, 0), P = F P F^T + G Q G^T.
PropagateResult propagate(const BeliefState& belief, const Vector& u,
                          const SystemModel& model, int n);

// Covariance update at the predicted state. The state estimate is not moved;
// see filter_step for the version with a measured innovation.
UpdateResult update(const Vector& x_hat_prior, const Matrix& P_prior,
                    const SystemModel& model, int n);

// (P^-1 + H^T R^-1 H)^-1 with explicit inverses. Test oracle for `update`.
Matrix information_update(const Matrix& P_prior, const Matrix& H, const Matrix& R);

// Runs N = controls.size() predict/update cycles, updates at n = 1..N.
EKFTrace forward_pass(const BeliefState& initial, const std::vector<Vector>& controls,
                      const SystemModel& model);

// One full EKF cycle with measurement y_n (real innovation).
BeliefState filter_step(const BeliefState& belief, const Vector& u, const Vector& y,
                        const SystemModel& model, int n);

}  // namespace covgrad
