#include "covgrad/linear_model.hpp"

#include "covgrad/errors.hpp"

namespace covgrad {

LinearModel::LinearModel(Matrix A, Matrix B, Matrix G, Matrix C, Matrix Q, Matrix R)
    : A_(std::move(A)), B_(std::move(B)), G_(std::move(G)), C_(std::move(C)), Q_(std::move(Q)),
      R_(std::move(R)) {
  const auto d = A_.rows();
  if (A_.cols() != d || B_.rows() != d || G_.rows() != d || C_.cols() != d ||
      Q_.rows() != G_.cols() || Q_.cols() != G_.cols() || R_.rows() != C_.rows() ||
      R_.cols() != C_.rows()) {
    throw ModelContractError("inconsistent linear model dimensions");
  }
}

LinearModel LinearModel::Example() {
  Matrix A(3, 3);
  A << 1.0, 0.1, 0.0,
       0.0, 1.0, 0.1,
       0.0, 0.0, 0.95;
  Matrix B(3, 2);
  B << 0.0, 0.0,
       0.1, 0.0,
       0.0, 0.2;
  Matrix G(3, 2);
  G << 0.05, 0.0,
       0.1, 0.0,
       0.0, 0.1;
  Matrix C(2, 3);
  C << 1.0, 0.0, 0.0,
       0.0, 0.0, 1.0;
  Matrix Q = Eigen::Vector2d(0.2, 0.1).asDiagonal();
  Matrix R = Eigen::Vector2d(0.5, 0.3).asDiagonal();
  return {A, B, G, C, Q, R};
}

}  // namespace covgrad
