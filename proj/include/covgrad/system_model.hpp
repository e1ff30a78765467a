#pragma once

#include <Eigen/Dense>

namespace covgrad {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A discrete-time nonlinear system
//   x_n = f(x_{n-1}, u_n, w_n),   y_n = h(x_n) + v_n,
// with w_n ~ N(0, Q(n)) and v_n ~ N(0, R(n, x_n)).
//
// Besides the maps themselves, a model exposes the Jacobians used by the
// filter (all evaluated at w = 0) and the component-wise derivatives of those
// Jacobians, which the covariance backward pass needs to chain gradients
// through the linearisation points.
class SystemModel {
 public:
  virtual ~SystemModel() = default;

  virtual int state_dim() const = 0;
  virtual int control_dim() const = 0;
  virtual int noise_dim() const = 0;
  virtual int obs_dim() const = 0;

  virtual Vector f(const Vector& x, const Vector& u, const Vector& w) const = 0;
  virtual Vector h(const Vector& x) const = 0;

  // df/dx, df/dw, dh/dx, df/du.
  virtual Matrix F(const Vector& x, const Vector& u) const = 0;
  virtual Matrix G(const Vector& x, const Vector& u) const = 0;
  virtual Matrix H(const Vector& x) const = 0;
  virtual Matrix Ju(const Vector& x, const Vector& u) const = 0;

  // Derivative of the Jacobian w.r.t. the k-th component of x or u.
  virtual Matrix dF_dx(const Vector& x, const Vector& u, int k) const = 0;
  virtual Matrix dF_du(const Vector& x, const Vector& u, int k) const = 0;
  virtual Matrix dG_dx(const Vector& x, const Vector& u, int k) const = 0;
  virtual Matrix dG_du(const Vector& x, const Vector& u, int k) const = 0;
  virtual Matrix dH_dx(const Vector& x, int k) const = 0;

  // Step index n is 1-based (the step at which the noise is applied).
  virtual Matrix Q(int n) const = 0;
  virtual Matrix R(int n, const Vector& x) const = 0;

  // Constant measurement noise unless overridden.
  virtual Matrix dR_dx(int n, const Vector& x, int k) const {
    (void)n;
    (void)x;
    (void)k;
    return Matrix::Zero(obs_dim(), obs_dim());
  }

  // True when R does not depend on the state; lets the backward pass skip the
  // dR/dx traces.
  virtual bool has_state_dependent_noise() const { return false; }
};

}  // namespace covgrad
