#pragma once

#include <numbers>

#include "covgrad/system_model.hpp"

namespace covgrad {

// Kinematic bicycle carrying a GPS antenna at an unknown offset (lever arm)
// in the body frame.
//
// State   x = (theta, px, py, lx, ly)   [rad, m, m, m, m]
// Control u = (mu, nu)                  [m/s, rad]   forward speed, steering
// Noise   w = (w_mu, w_nu), added to the controls
// Output  y = p + Omega(theta) l        [m]
struct BicycleParams {
  double wheelbase = 4.0;  // m
  double dt = 1.0;         // s
  Matrix Q;                // 2x2
  Matrix R;                // 2x2
  Vector u_min;            // (mu, nu) lower bounds
  Vector u_max;
  Vector du_max;           // (dmu_max [m/s^2], dnu_max [rad/s])

  static BicycleParams Default();
  void Validate() const;
};

namespace bicycle {
inline constexpr int kTheta = 0;
inline constexpr int kPx = 1;
inline constexpr int kPy = 2;
inline constexpr int kLx = 3;
inline constexpr int kLy = 4;
inline constexpr int kMu = 0;
inline constexpr int kNu = 1;
inline constexpr double kDeg = std::numbers::pi / 180.0;

Eigen::Matrix2d Rotation(double theta);
Eigen::Matrix2d RotationDerivative(double theta);
}  // namespace bicycle

class BicycleModel final : public SystemModel {
 public:
  explicit BicycleModel(BicycleParams params);

  const BicycleParams& params() const { return params_; }

  int state_dim() const override { return 5; }
  int control_dim() const override { return 2; }
  int noise_dim() const override { return 2; }
  int obs_dim() const override { return 2; }

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
  Matrix Q(int) const override { return params_.Q; }
  Matrix R(int, const Vector&) const override { return params_.R; }

 private:
  BicycleParams params_;
};

}  // namespace covgrad
