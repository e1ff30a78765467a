#include "covgrad/linear_model.hpp"

namespace covgrad {
namespace {
Matrix Scalar(double v) { return Matrix::Constant(1, 1, v); }
}  // namespace

Vector ScalarModel::f(const Vector& x, const Vector& u, const Vector& w) const {
  return Vector::Constant(1, x(0) + u(0) * u(0) + u(0) * w(0));
}

Vector ScalarModel::h(const Vector& x) const {
  return Vector::Constant(1, x(0) + 0.5 * x(0) * x(0));
}

Matrix ScalarModel::F(const Vector&, const Vector&) const { return Scalar(1.0); }
Matrix ScalarModel::G(const Vector&, const Vector& u) const { return Scalar(u(0)); }
Matrix ScalarModel::H(const Vector& x) const { return Scalar(1.0 + x(0)); }
Matrix ScalarModel::Ju(const Vector&, const Vector& u) const { return Scalar(2.0 * u(0)); }
Matrix ScalarModel::dF_dx(const Vector&, const Vector&, int) const { return Scalar(0.0); }
Matrix ScalarModel::dF_du(const Vector&, const Vector&, int) const { return Scalar(0.0); }
Matrix ScalarModel::dG_dx(const Vector&, const Vector&, int) const { return Scalar(0.0); }
Matrix ScalarModel::dG_du(const Vector&, const Vector&, int) const { return Scalar(1.0); }
Matrix ScalarModel::dH_dx(const Vector&, int) const { return Scalar(1.0); }

}  // namespace covgrad
