#pragma once

#include "covgrad/system_model.hpp"

namespace covgrad {

// x_n = A x_{n-1} + B u_n + G w_n,  y_n = C x_n + v_n.
// All Jacobians are constant, so the covariance recursion does not see the
// controls and every control gradient vanishes.
class LinearModel final : public SystemModel {
 public:
  LinearModel(Matrix A, Matrix B, Matrix G, Matrix C, Matrix Q, Matrix R);

  // A small 3-state, 2-input, 2-output system used by tests and gradcheck.
  static LinearModel Example();

  int state_dim() const override { return static_cast<int>(A_.rows()); }
  int control_dim() const override { return static_cast<int>(B_.cols()); }
  int noise_dim() const override { return static_cast<int>(G_.cols()); }
  int obs_dim() const override { return static_cast<int>(C_.rows()); }

  Vector f(const Vector& x, const Vector& u, const Vector& w) const override {
    return A_ * x + B_ * u + G_ * w;
  }
  Vector h(const Vector& x) const override { return C_ * x; }
  Matrix F(const Vector&, const Vector&) const override { return A_; }
  Matrix G(const Vector&, const Vector&) const override { return G_; }
  Matrix H(const Vector&) const override { return C_; }
  Matrix Ju(const Vector&, const Vector&) const override { return B_; }
  Matrix dF_dx(const Vector&, const Vector&, int) const override { return Matrix::Zero(A_.rows(), A_.cols()); }
  Matrix dF_du(const Vector&, const Vector&, int) const override { return Matrix::Zero(A_.rows(), A_.cols()); }
  Matrix dG_dx(const Vector&, const Vector&, int) const override { return Matrix::Zero(G_.rows(), G_.cols()); }
  Matrix dG_du(const Vector&, const Vector&, int) const override { return Matrix::Zero(G_.rows(), G_.cols()); }
  Matrix dH_dx(const Vector&, int) const override { return Matrix::Zero(C_.rows(), C_.cols()); }
  Matrix Q(int) const override { return Q_; }
  Matrix R(int, const Vector&) const override { return R_; }

 private:
  Matrix A_, B_, G_, C_, Q_, R_;
};

// One-dimensional model with control-dependent noise gain and a curved
// observation:
//   f(x, u, w) = x + u^2 + u w,   h(x) = x + x^2 / 2.
// Small enough that the one-step loss can be expanded by hand.
class ScalarModel final : public SystemModel {
 public:
  ScalarModel(double q, double r) : q_(q), r_(r) {}

  int state_dim() const override { return 1; }
  int control_dim() const override { return 1; }
  int noise_dim() const override { return 1; }
  int obs_dim() const override { return 1; }

  Vector f(const Vector& x, const Vector& u, const Vector& w) const override;
  Vector h(const Vector& x) const override;
  Matrix F(const Vector& x, const Vector& u) const override;
  Matrix G(const Vector& x, const Vector& u) const override;
  Matrix H(const Vector& x) const override;
  Matrix Ju(const Vector& x, const Vector& u) const override;
  Matrix dF_dx(const Vector& x, const Vector& u, int k) const override;
  Matrix dF_du(const Vector& x, const Vector& u, int k) const override;
  Matrix dG_dx(const Vector& x, const Vector& u, int k) const override;
  Matrix dG_du(const Vector& x, const Vector& u, int k) const override;
  Matrix dH_dx(const Vector& x, int k) const override;
  Matrix Q(int) const override { return Matrix::Constant(1, 1, q_); }
  Matrix R(int, const Vector&) const override { return Matrix::Constant(1, 1, r_); }

 private:
  double q_, r_;
};

}  // namespace covgrad
