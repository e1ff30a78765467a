#include "covgrad/bicycle_model.hpp"

#include <cmath>
#include <string>

#include "covgrad/errors.hpp"

namespace covgrad {

using namespace bicycle;

namespace {

void CheckSteering(double steer) {
  if (!(std::abs(steer) < std::numbers::pi / 2)) {
    throw DomainError("steering angle " + std::to_string(steer) + " outside (-pi/2, pi/2)");
  }
}

void CheckIndex(int k, int size, const char* what) {
  if (k < 0 || k >= size) {
    throw ContractError(std::string(what) + " component index " + std::to_string(k) +
                        " out of range");
  }
}

bool IsSpd(const Matrix& M) {
  if (M.rows() != M.cols() || !M.isApprox(M.transpose())) return false;
  Eigen::LLT<Matrix> llt(M);
  return llt.info() == Eigen::Success;
}

}  // namespace

namespace bicycle {

Eigen::Matrix2d Rotation(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d R;
  R << c, -s, s, c;
  return R;
}

Eigen::Matrix2d RotationDerivative(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Eigen::Matrix2d R;
  R << -s, -c, c, -s;
  return R;
}

}  // namespace bicycle

BicycleParams BicycleParams::Default() {
  BicycleParams p;
  p.wheelbase = 4.0;
  p.dt = 1.0;
  p.Q = Eigen::Vector2d(0.1 * 0.1, kDeg * kDeg).asDiagonal();
  p.R = Matrix::Identity(2, 2);
  p.u_min = Eigen::Vector2d(0.0, -30.0 * kDeg);
  p.u_max = Eigen::Vector2d(5.0, 30.0 * kDeg);
  p.du_max = Eigen::Vector2d(1.0, 15.0 * kDeg);
  return p;
}

void BicycleParams::Validate() const {
  if (!(wheelbase > 0.0)) throw ContractError("wheelbase must be positive");
  if (!(dt > 0.0)) throw ContractError("dt must be positive");
  if (Q.rows() != 2 || !IsSpd(Q)) throw ContractError("Q must be a 2x2 SPD matrix");
  if (R.rows() != 2 || !IsSpd(R)) throw ContractError("R must be a 2x2 SPD matrix");
  if (u_min.size() != 2 || u_max.size() != 2 || du_max.size() != 2) {
    throw ContractError("control bounds must have two components");
  }
  if ((u_min.array() > u_max.array()).any()) throw ContractError("u_min must not exceed u_max");
  if ((du_max.array() < 0.0).any()) throw ContractError("rate bounds must be non-negative");
  if (std::abs(u_min(kNu)) >= std::numbers::pi / 2 || std::abs(u_max(kNu)) >= std::numbers::pi / 2) {
    throw ContractError("steering bounds must lie inside (-pi/2, pi/2)");
  }
}

BicycleModel::BicycleModel(BicycleParams params) : params_(std::move(params)) {
  params_.Validate();
}

Vector BicycleModel::f(const Vector& x, const Vector& u, const Vector& w) const {
  const double speed = u(kMu) + w(kMu);
  const double steer = u(kNu) + w(kNu);
  CheckSteering(steer);
  const double dt = params_.dt;
  Vector out = x;
  out(kTheta) += dt / params_.wheelbase * speed * std::tan(steer);
  out(kPx) += dt * std::cos(x(kTheta)) * speed;
  out(kPy) += dt * std::sin(x(kTheta)) * speed;
  return out;
}

Vector BicycleModel::h(const Vector& x) const {
  return x.segment<2>(kPx) + Rotation(x(kTheta)) * x.segment<2>(kLx);
}

Matrix BicycleModel::F(const Vector& x, const Vector& u) const {
  CheckSteering(u(kNu));
  const double dt = params_.dt;
  Matrix out = Matrix::Identity(5, 5);
  out(kPx, kTheta) = -dt * std::sin(x(kTheta)) * u(kMu);
  out(kPy, kTheta) = dt * std::cos(x(kTheta)) * u(kMu);
  return out;
}

Matrix BicycleModel::G(const Vector& x, const Vector& u) const {
  CheckSteering(u(kNu));
  const double dt = params_.dt;
  const double t = std::tan(u(kNu));
  Matrix out = Matrix::Zero(5, 2);
  out(kTheta, kMu) = dt / params_.wheelbase * t;
  out(kTheta, kNu) = dt / params_.wheelbase * u(kMu) * (1.0 + t * t);
  out(kPx, kMu) = dt * std::cos(x(kTheta));
  out(kPy, kMu) = dt * std::sin(x(kTheta));
  return out;
}

// Noise adds to the controls, so df/du == df/dw.
Matrix BicycleModel::Ju(const Vector& x, const Vector& u) const { return G(x, u); }

Matrix BicycleModel::H(const Vector& x) const {
  Matrix out = Matrix::Zero(2, 5);
  out.col(kTheta) = RotationDerivative(x(kTheta)) * x.segment<2>(kLx);
  out.block<2, 2>(0, kPx).setIdentity();
  out.block<2, 2>(0, kLx) = Rotation(x(kTheta));
  return out;
}

Matrix BicycleModel::dF_dx(const Vector& x, const Vector& u, int k) const {
  CheckIndex(k, 5, "state");
  Matrix out = Matrix::Zero(5, 5);
  if (k == kTheta) {
    const double dt = params_.dt;
    out(kPx, kTheta) = -dt * std::cos(x(kTheta)) * u(kMu);
    out(kPy, kTheta) = -dt * std::sin(x(kTheta)) * u(kMu);
  }
  return out;
}

Matrix BicycleModel::dF_du(const Vector& x, const Vector& u, int k) const {
  CheckIndex(k, 2, "control");
  (void)u;
  Matrix out = Matrix::Zero(5, 5);
  if (k == kMu) {
    const double dt = params_.dt;
    out(kPx, kTheta) = -dt * std::sin(x(kTheta));
    out(kPy, kTheta) = dt * std::cos(x(kTheta));
  }
  return out;
}

Matrix BicycleModel::dG_dx(const Vector& x, const Vector& u, int k) const {
  CheckIndex(k, 5, "state");
  (void)u;
  Matrix out = Matrix::Zero(5, 2);
  if (k == kTheta) {
    const double dt = params_.dt;
    out(kPx, kMu) = -dt * std::sin(x(kTheta));
    out(kPy, kMu) = dt * std::cos(x(kTheta));
  }
  return out;
}

Matrix BicycleModel::dG_du(const Vector& x, const Vector& u, int k) const {
  CheckIndex(k, 2, "control");
  (void)x;
  CheckSteering(u(kNu));
  const double scale = params_.dt / params_.wheelbase;
  const double t = std::tan(u(kNu));
  const double sec2 = 1.0 + t * t;
  Matrix out = Matrix::Zero(5, 2);
  if (k == kMu) {
    out(kTheta, kNu) = scale * sec2;
  } else {
    out(kTheta, kMu) = scale * sec2;
    out(kTheta, kNu) = scale * u(kMu) * 2.0 * sec2 * t;
  }
  return out;
}

Matrix BicycleModel::dH_dx(const Vector& x, int k) const {
  CheckIndex(k, 5, "state");
  Matrix out = Matrix::Zero(2, 5);
  const double theta = x(kTheta);
  switch (k) {
    case kTheta:
      // d^2 Omega / d theta^2 = -Omega
      out.col(kTheta) = -Rotation(theta) * x.segment<2>(kLx);
      out.block<2, 2>(0, kLx) = RotationDerivative(theta);
      break;
    case kLx:
      out.col(kTheta) = RotationDerivative(theta).col(0);
      break;
    case kLy:
      out.col(kTheta) = RotationDerivative(theta).col(1);
      break;
    default:
      break;
  }
  return out;
}

}  // namespace covgrad
