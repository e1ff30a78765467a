#include "covgrad/backprop.hpp"

#include <string>

#include "covgrad/errors.hpp"

namespace covgrad {
namespace {

// tr(A^T B)
double TraceInner(const Matrix& A, const Matrix& B) { return A.cwiseProduct(B).sum(); }

template <typename T>
void CheckFinite(const T& M, int n, const char* stage) {
  if (!M.allFinite()) throw NumericalError("non-finite adjoint", n, stage);
}

Matrix InvertNoise(const Matrix& R, int n) {
  Eigen::LLT<Matrix> llt(R);
  if (llt.info() != Eigen::Success) {
    throw SingularNoiseError("measurement noise covariance is not SPD", n, "R");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(R, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().maxCoeff() > kMaxInnovationCondition * eig.eigenvalues().minCoeff()) {
    throw SingularNoiseError("measurement noise covariance is numerically singular", n, "R");
  }
  return Symmetrize(llt.solve(Matrix::Identity(R.rows(), R.cols())));
}

// Contribution of step n's measurement Jacobian (and state-dependent R) to
// dL/dx_n.
Vector MeasurementTerms(const EKFStepRecord& rec, const Matrix& dL_dH, const Matrix& dL_dR,
                        const SystemModel& model, int n) {
  const int d = model.state_dim();
  Vector out(d);
  const bool noise_varies = model.has_state_dependent_noise();
  for (int k = 0; k < d; ++k) {
    double v = TraceInner(dL_dH, model.dH_dx(rec.x_hat, k));
    if (noise_varies) v += TraceInner(dL_dR, model.dR_dx(n, rec.x_hat, k));
    out(k) = v;
  }
  return out;
}

// Contribution of step n's dynamics linearisation (F_n, G_n and the state
// propagation x_n = f(x_{n-1}, u_n)) to dL/dx_{n-1}.
Vector DynamicsStateTerms(const EKFStepRecord& rec, const Matrix& dL_dF, const Matrix& dL_dG,
                          const Vector& dL_dx_next, const SystemModel& model) {
  const int d = model.state_dim();
  Vector out = rec.F.transpose() * dL_dx_next;
  for (int k = 0; k < d; ++k) {
    out(k) += TraceInner(dL_dF, model.dF_dx(rec.x_hat_prev, rec.u, k)) +
              TraceInner(dL_dG, model.dG_dx(rec.x_hat_prev, rec.u, k));
  }
  return out;
}

}  // namespace

GradientSet backward_pass(const EKFTrace& trace, const LossSpec& spec, const SystemModel& model,
                          const BackpropOptions& options) {
  return backward_pass_seeded(trace, seed_gradient(spec, trace.final_covariance()), model,
                              options);
}

GradientSet backward_pass_seeded(const EKFTrace& trace, const Matrix& seed,
                                 const SystemModel& model, const BackpropOptions& options) {
  const int N = static_cast<int>(trace.steps.size());
  const int d = model.state_dim();
  const int du = model.control_dim();
  if (seed.rows() != d || seed.cols() != d) throw ContractError("seed gradient has wrong shape");

  GradientSet out;
  out.dL_du = Matrix::Zero(N, du);
  out.dL_dxhat = Matrix::Zero(N + 1, d);
  out.dL_dQ.resize(N);
  out.dL_dR.resize(N);
  if (options.store_intermediates) out.intermediates.resize(N);

  const Matrix I = Matrix::Identity(d, d);
  Matrix dL_dPpost = Symmetrize(seed);

  // Adjoints of step n+1 needed when closing dL/dx_n.
  Matrix next_dF, next_dG;
  Vector next_dx;

  for (int n = N; n >= 1; --n) {
    const EKFStepRecord& rec = trace.steps[n - 1];
    const Matrix& P_prev = n == 1 ? trace.initial.P : trace.steps[n - 2].P_post;

    const Matrix IKH = I - rec.K * rec.H;
    const Matrix dL_dPprior = Symmetrize(IKH.transpose() * dL_dPpost * IKH);
    CheckFinite(dL_dPprior, n, "dL/dP_prior");

    const Matrix dL_dF = 2.0 * dL_dPprior * rec.F * P_prev;
    const Matrix dL_dG = 2.0 * dL_dPprior * rec.G * rec.Q;
    CheckFinite(dL_dF, n, "dL/dF,dL/dG");
    CheckFinite(dL_dG, n, "dL/dF,dL/dG");

    const Matrix R_inv = InvertNoise(rec.R, n);
    const Matrix PGP = rec.P_post * dL_dPpost * rec.P_post;
    const Matrix dL_dHt = -2.0 * PGP * rec.H.transpose() * R_inv;
    const Matrix dL_dH = dL_dHt.transpose();
    out.dL_dR[n - 1] = Symmetrize(R_inv * rec.H * PGP * rec.H.transpose() * R_inv);
    CheckFinite(dL_dH, n, "dL/dH,dL/dR");
    CheckFinite(out.dL_dR[n - 1], n, "dL/dH,dL/dR");

    out.dL_dQ[n - 1] = Symmetrize(rec.G.transpose() * dL_dPprior * rec.G);
    CheckFinite(out.dL_dQ[n - 1], n, "dL/dQ");

    // dL/dx_n: measurement successors at n, plus step n+1's dynamics.
    Vector dL_dx = MeasurementTerms(rec, dL_dH, out.dL_dR[n - 1], model, n);
    if (n < N) dL_dx += DynamicsStateTerms(trace.steps[n], next_dF, next_dG, next_dx, model);
    CheckFinite(dL_dx, n, "dL/dx");
    out.dL_dxhat.row(n) = dL_dx.transpose();

    const Matrix Ju = model.Ju(rec.x_hat_prev, rec.u);
    const Vector via_state = Ju.transpose() * dL_dx;
    for (int k = 0; k < du; ++k) {
      out.dL_du(n - 1, k) = TraceInner(dL_dF, model.dF_du(rec.x_hat_prev, rec.u, k)) +
                            TraceInner(dL_dG, model.dG_du(rec.x_hat_prev, rec.u, k)) +
                            via_state(k);
    }
    CheckFinite(out.dL_du.row(n - 1), n, "dL/du");

    if (options.store_intermediates) {
      out.intermediates[n - 1] = {dL_dF, dL_dG, dL_dH, dL_dPpost, dL_dPprior};
    }

    dL_dPpost = Symmetrize(rec.F.transpose() * dL_dPprior * rec.F);
    next_dF = dL_dF;
    next_dG = dL_dG;
    next_dx = std::move(dL_dx);
  }

  out.dL_dP0 = dL_dPpost;
  // No measurement at n = 0: x_0 only feeds step 1's dynamics.
  if (N >= 1) {
    out.dL_dxhat.row(0) =
        DynamicsStateTerms(trace.steps[0], next_dF, next_dG, next_dx, model).transpose();
  }
  return out;
}

LossAndGradient gradient_of_loss(const BeliefState& initial, const std::vector<Vector>& controls,
                                 const SystemModel& model, const LossSpec& spec,
                                 const BackpropOptions& options) {
  const EKFTrace trace = forward_pass(initial, controls, model);
  LossAndGradient out;
  out.loss = evaluate(spec, trace.final_covariance());
  out.grads = backward_pass(trace, spec, model, options);
  return out;
}

}  // namespace covgrad
