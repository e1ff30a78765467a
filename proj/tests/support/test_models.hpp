#pragma once

#include <cmath>
#include <memory>
#include <random>

#include "covgrad/bicycle_model.hpp"
#include "covgrad/ekf.hpp"
#include "covgrad/gradcheck.hpp"

namespace covgrad::testing {

// Two-state model whose measurement noise grows with the first state:
//   f = [x0 + u0 + w0, x1 + sin(x0) u1 + w1],  h = x,  R(x) = (1 + x0^2) r I.
class StateNoiseModel final : public SystemModel {
 public:
  explicit StateNoiseModel(double q = 0.05, double r = 0.3) : q_(q), r_(r) {}

  int state_dim() const override { return 2; }
  int control_dim() const override { return 2; }
  int noise_dim() const override { return 2; }
  int obs_dim() const override { return 2; }

  Vector f(const Vector& x, const Vector& u, const Vector& w) const override {
    Vector out(2);
    out << x(0) + u(0) + w(0), x(1) + std::sin(x(0)) * u(1) + w(1);
    return out;
  }
  Vector h(const Vector& x) const override { return x; }

  Matrix F(const Vector& x, const Vector& u) const override {
    Matrix J = Matrix::Identity(2, 2);
    J(1, 0) = std::cos(x(0)) * u(1);
    return J;
  }
  Matrix G(const Vector&, const Vector&) const override { return Matrix::Identity(2, 2); }
  Matrix H(const Vector&) const override { return Matrix::Identity(2, 2); }
  Matrix Ju(const Vector& x, const Vector&) const override {
    Matrix J = Matrix::Zero(2, 2);
    J(0, 0) = 1.0;
    J(1, 1) = std::sin(x(0));
    return J;
  }
  Matrix dF_dx(const Vector& x, const Vector& u, int k) const override {
    Matrix D = Matrix::Zero(2, 2);
    if (k == 0) D(1, 0) = -std::sin(x(0)) * u(1);
    return D;
  }
  Matrix dF_du(const Vector& x, const Vector&, int k) const override {
    Matrix D = Matrix::Zero(2, 2);
    if (k == 1) D(1, 0) = std::cos(x(0));
    return D;
  }
  Matrix dG_dx(const Vector&, const Vector&, int) const override { return Matrix::Zero(2, 2); }
  Matrix dG_du(const Vector&, const Vector&, int) const override { return Matrix::Zero(2, 2); }
  Matrix dH_dx(const Vector&, int) const override { return Matrix::Zero(2, 2); }

  Matrix Q(int) const override { return q_ * Matrix::Identity(2, 2); }
  Matrix R(int, const Vector& x) const override {
    return (1.0 + x(0) * x(0)) * r_ * Matrix::Identity(2, 2);
  }
  Matrix dR_dx(int, const Vector& x, int k) const override {
    return k == 0 ? Matrix(2.0 * x(0) * r_ * Matrix::Identity(2, 2)) : Matrix::Zero(2, 2);
  }
  bool has_state_dependent_noise() const override { return true; }

 private:
  double q_, r_;
};

// Forwards everything to `inner` with Q and R multiplied by fixed factors.
class ScaledNoise final : public SystemModel {
 public:
  ScaledNoise(std::shared_ptr<const SystemModel> inner, double q_scale, double r_scale)
      : m_(std::move(inner)), q_scale_(q_scale), r_scale_(r_scale) {}

  int state_dim() const override { return m_->state_dim(); }
  int control_dim() const override { return m_->control_dim(); }
  int noise_dim() const override { return m_->noise_dim(); }
  int obs_dim() const override { return m_->obs_dim(); }
  Vector f(const Vector& x, const Vector& u, const Vector& w) const override { return m_->f(x, u, w); }
  Vector h(const Vector& x) const override { return m_->h(x); }
  Matrix F(const Vector& x, const Vector& u) const override { return m_->F(x, u); }
  Matrix G(const Vector& x, const Vector& u) const override { return m_->G(x, u); }
  Matrix H(const Vector& x) const override { return m_->H(x); }
  Matrix Ju(const Vector& x, const Vector& u) const override { return m_->Ju(x, u); }
  Matrix dF_dx(const Vector& x, const Vector& u, int k) const override { return m_->dF_dx(x, u, k); }
  Matrix dF_du(const Vector& x, const Vector& u, int k) const override { return m_->dF_du(x, u, k); }
  Matrix dG_dx(const Vector& x, const Vector& u, int k) const override { return m_->dG_dx(x, u, k); }
  Matrix dG_du(const Vector& x, const Vector& u, int k) const override { return m_->dG_du(x, u, k); }
  Matrix dH_dx(const Vector& x, int k) const override { return m_->dH_dx(x, k); }
  Matrix Q(int n) const override { return q_scale_ * m_->Q(n); }
  Matrix R(int n, const Vector& x) const override { return r_scale_ * m_->R(n, x); }

 private:
  std::shared_ptr<const SystemModel> m_;
  double q_scale_, r_scale_;
};

inline Matrix RandomSpd(int d, std::mt19937_64& rng, double floor = 0.5) {
  std::normal_distribution<double> nd;
  const Matrix A = Matrix::NullaryExpr(d, d, [&] { return nd(rng); });
  return A * A.transpose() / d + floor * Matrix::Identity(d, d);
}

inline Matrix RandomMatrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  return Matrix::NullaryExpr(rows, cols, [&] { return nd(rng); });
}

// Bicycle controls drawn independently inside a box that keeps the
// linearisation well away from the steering singularity.
inline ControlSequence RandomBicycleControls(int N, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> speed(0.5, 4.5), steer(-25.0 * bicycle::kDeg,
                                                                 25.0 * bicycle::kDeg);
  ControlSequence u;
  for (int n = 0; n < N; ++n) {
    Vector v(2);
    v << speed(rng), steer(rng);
    u.push_back(v);
  }
  return u;
}

inline ControlSequence RandomControls(int N, int du, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  ControlSequence u;
  for (int n = 0; n < N; ++n) u.push_back(Vector::NullaryExpr(du, [&] { return nd(rng); }));
  return u;
}

// P0 = diag(5 deg, 10 m, 10 m, 1 m, 1 m)^2.
inline BeliefState BicycleInitialBelief() {
  Vector sd(5);
  sd << 5.0 * bicycle::kDeg, 10.0, 10.0, 1.0, 1.0;
  return {Vector::Zero(5), Matrix(sd.array().square().matrix().asDiagonal())};
}

inline double MaxAbsDiff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace covgrad::testing
