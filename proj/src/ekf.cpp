#include "covgrad/ekf.hpp"

#include <string>

#include "covgrad/errors.hpp"

namespace covgrad {
namespace {

void CheckShape(const Matrix& M, Eigen::Index rows, Eigen::Index cols, const char* name,
                int n) {
  if (M.rows() != rows || M.cols() != cols) {
    throw ModelContractError(std::string(name) + " has shape " + std::to_string(M.rows()) +
                             "x" + std::to_string(M.cols()) + ", expected " +
                             std::to_string(rows) + "x" + std::to_string(cols) +
                             " (step " + std::to_string(n) + ")");
  }
}

template <typename T>
void CheckFinite(const T& M, const char* name, int n) {
  if (!M.allFinite()) throw NumericalError(std::string("non-finite ") + name, n, name);
}

Eigen::LLT<Matrix> FactorInnovation(const Matrix& S, int n) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi > kMaxInnovationCondition * lo) {
    throw SingularInnovationError("innovation covariance is numerically singular", n, "S");
  }
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() != Eigen::Success) {
    throw SingularInnovationError("innovation covariance factorisation failed", n, "S");
  }
  return llt;
}

}  // namespace

PropagateResult propagate(const BeliefState& belief, const Vector& u, const SystemModel& model,
                          int n) {
  const int d = model.state_dim();
  if (belief.x_hat.size() != d || belief.P.rows() != d || belief.P.cols() != d) {
    throw ModelContractError("belief dimension does not match model state_dim (step " +
                             std::to_string(n) + ")");
  }
  if (u.size() != model.control_dim()) {
    throw ModelContractError("control dimension mismatch (step " + std::to_string(n) + ")");
  }
  CheckFinite(u, "u", n);

  PropagateResult out;
  out.F = model.F(belief.x_hat, u);
  out.G = model.G(belief.x_hat, u);
  out.Q = model.Q(n);
  CheckShape(out.F, d, d, "F", n);
  CheckShape(out.G, d, model.noise_dim(), "G", n);
  CheckShape(out.Q, model.noise_dim(), model.noise_dim(), "Q", n);

  out.x_hat_prior = model.f(belief.x_hat, u, Vector::Zero(model.noise_dim()));
  if (out.x_hat_prior.size() != d) throw ModelContractError("f returned wrong dimension");
  out.P_prior = Symmetrize(out.F * belief.P * out.F.transpose() + out.G * out.Q * out.G.transpose());

  CheckFinite(out.x_hat_prior, "x_hat_prior", n);
  CheckFinite(out.P_prior, "P_prior", n);
  return out;
}

UpdateResult update(const Vector& x_hat_prior, const Matrix& P_prior, const SystemModel& model,
                    int n) {
  const int d = model.state_dim();
  const int dy = model.obs_dim();
  UpdateResult out;
  out.H = model.H(x_hat_prior);
  out.R = model.R(n, x_hat_prior);
  CheckShape(out.H, dy, d, "H", n);
  CheckShape(out.R, dy, dy, "R", n);

  out.S = Symmetrize(out.H * P_prior * out.H.transpose() + out.R);
  const auto llt = FactorInnovation(out.S, n);
  // K = P H^T S^-1  <=>  K^T = S^-1 H P
  out.K = llt.solve(out.H * P_prior).transpose();
  out.P_post = Symmetrize((Matrix::Identity(d, d) - out.K * out.H) * P_prior);
  CheckFinite(out.K, "K", n);
  CheckFinite(out.P_post, "P_post", n);
  return out;
}

Matrix information_update(const Matrix& P_prior, const Matrix& H, const Matrix& R) {
  Eigen::FullPivLU<Matrix> lu(P_prior);
  if (!lu.isInvertible()) throw SingularPriorError("prior covariance is singular");
  const Matrix info = lu.inverse() + H.transpose() * R.inverse() * H;
  return Symmetrize(info.inverse());
}

EKFTrace forward_pass(const BeliefState& initial, const std::vector<Vector>& controls,
                      const SystemModel& model) {
  if (controls.empty()) throw ContractError("forward_pass needs at least one control");
  EKFTrace trace;
  trace.initial = initial;
  trace.steps.reserve(controls.size());

  BeliefState belief = initial;
  for (std::size_t i = 0; i < controls.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    auto pred = propagate(belief, controls[i], model, n);
    auto upd = update(pred.x_hat_prior, pred.P_prior, model, n);

    EKFStepRecord rec;
    rec.x_hat_prev = belief.x_hat;
    rec.u = controls[i];
    rec.x_hat = pred.x_hat_prior;
    rec.P_prior = std::move(pred.P_prior);
    rec.P_post = upd.P_post;
    rec.F = std::move(pred.F);
    rec.G = std::move(pred.G);
    rec.H = std::move(upd.H);
    rec.K = std::move(upd.K);
    rec.S = std::move(upd.S);
    rec.Q = std::move(pred.Q);
    rec.R = std::move(upd.R);

    belief.x_hat = rec.x_hat;
    belief.P = std::move(upd.P_post);
    trace.steps.push_back(std::move(rec));
  }
  return trace;
}

BeliefState filter_step(const BeliefState& belief, const Vector& u, const Vector& y,
                        const SystemModel& model, int n) {
  auto pred = propagate(belief, u, model, n);
  auto upd = update(pred.x_hat_prior, pred.P_prior, model, n);
  if (y.size() != model.obs_dim()) throw ModelContractError("observation dimension mismatch");
  BeliefState out;
  out.x_hat = pred.x_hat_prior + upd.K * (y - model.h(pred.x_hat_prior));
  out.P = std::move(upd.P_post);
  CheckFinite(out.x_hat, "x_hat_post", n);
  return out;
}

}  // namespace covgrad
