#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <random>

#include "covgrad/bicycle_model.hpp"
#include "covgrad/ekf.hpp"
#include "covgrad/errors.hpp"
#include "covgrad/linear_model.hpp"
#include "support/test_models.hpp"

namespace covgrad {
namespace {

using testing::BicycleInitialBelief;
using testing::RandomBicycleControls;
using testing::RandomMatrix;
using testing::RandomSpd;

TEST(Ekf, PropagateMatchesLinearRiccati) {
  const LinearModel model = LinearModel::Example();
  std::mt19937_64 rng(1);
  const BeliefState b{Vector::Zero(3), RandomSpd(3, rng)};
  Vector u(2);
  u << 0.4, -1.0;
  const PropagateResult r = propagate(b, u, model, 1);
  const Matrix A = model.F(b.x_hat, u), G = model.G(b.x_hat, u);
  EXPECT_LT((r.P_prior - (A * b.P * A.transpose() + G * model.Q(1) * G.transpose())).norm(), 1e-13);
  EXPECT_LT((r.x_hat_prior - model.Ju(b.x_hat, u) * u).norm(), 1e-14);
}

TEST(Ekf, ScalarUpdateByHand) {
  // P = 2, H = 1, R = 2: S = 4, K = 1/2, P+ = 1.
  LinearModel model(Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                    Matrix::Identity(1, 1), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 2.0));
  const UpdateResult r = update(Vector::Zero(1), Matrix::Constant(1, 1, 2.0), model, 1);
  EXPECT_DOUBLE_EQ(r.S(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(r.K(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(r.P_post(0, 0), 1.0);
}

TEST(Ekf, UpdateEqualsInformationForm) {
  std::mt19937_64 rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 6, m = 1 + trial % 4;
    const Matrix P = RandomSpd(d, rng);
    const Matrix H = RandomMatrix(m, d, rng);
    const Matrix R = RandomSpd(m, rng);
    LinearModel model(Matrix::Identity(d, d), Matrix::Zero(d, 1), Matrix::Identity(d, d), H,
                      Matrix::Identity(d, d), R);
    const Matrix joseph_free = update(Vector::Zero(d), P, model, 1).P_post;
    const Matrix info = information_update(P, H, R);
    worst = std::max(worst, (joseph_free - info).cwiseAbs().maxCoeff() / info.cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(Ekf, CovariancesSymmetricAndOrdered) {
  const BicycleModel model(BicycleParams::Default());
  std::mt19937_64 rng(3);
  const EKFTrace trace = forward_pass(BicycleInitialBelief(), RandomBicycleControls(40, rng), model);
  ASSERT_EQ(trace.steps.size(), 40u);
  for (const auto& s : trace.steps) {
    EXPECT_EQ(s.P_prior, s.P_prior.transpose());
    EXPECT_EQ(s.P_post, s.P_post.transpose());
    // An update never adds uncertainty: P_prior - P_post is PSD.
    const Eigen::SelfAdjointEigenSolver<Matrix> es(s.P_prior - s.P_post);
    EXPECT_GT(es.eigenvalues().minCoeff(), -1e-9 * s.P_prior.trace());
    const Eigen::SelfAdjointEigenSolver<Matrix> post(s.P_post);
    EXPECT_GT(post.eigenvalues().minCoeff(), 0.0);
  }
}

TEST(Ekf, ZeroInnovationFilterStepMatchesForwardPass) {
  const BicycleModel model(BicycleParams::Default());
  std::mt19937_64 rng(4);
  const ControlSequence u = RandomBicycleControls(8, rng);
  const EKFTrace trace = forward_pass(BicycleInitialBelief(), u, model);
  BeliefState b = BicycleInitialBelief();
  for (int n = 1; n <= 8; ++n) {
    const Vector predicted = model.f(b.x_hat, u[n - 1], Vector::Zero(2));
    b = filter_step(b, u[n - 1], model.h(predicted), model, n);
    EXPECT_LT((b.x_hat - trace.steps[n - 1].x_hat).norm(), 1e-12);
    EXPECT_LT((b.P - trace.steps[n - 1].P_post).norm(), 1e-10);
  }
}

TEST(Ekf, RealInnovationMovesEstimateTowardMeasurement) {
  LinearModel model(Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                    Matrix::Identity(1, 1), Matrix::Constant(1, 1, 1.0), Matrix::Constant(1, 1, 2.0));
  const BeliefState b{Vector::Zero(1), Matrix::Constant(1, 1, 1.0)};
  const BeliefState next = filter_step(b, Vector::Zero(1), Vector::Constant(1, 4.0), model, 1);
  // P- = 2, K = 1/2.
  EXPECT_DOUBLE_EQ(next.x_hat(0), 2.0);
  EXPECT_DOUBLE_EQ(next.P(0, 0), 1.0);
}

TEST(Ekf, DeterministicForwardPass) {
  const BicycleModel model(BicycleParams::Default());
  std::mt19937_64 rng(5);
  const ControlSequence u = RandomBicycleControls(30, rng);
  const Matrix a = forward_pass(BicycleInitialBelief(), u, model).final_covariance();
  const Matrix b = forward_pass(BicycleInitialBelief(), u, model).final_covariance();
  EXPECT_EQ(a, b);
}

TEST(Ekf, Errors) {
  const BicycleModel model(BicycleParams::Default());
  EXPECT_THROW(forward_pass(BicycleInitialBelief(), {}, model), ContractError);

  BeliefState wrong{Vector::Zero(3), Matrix::Identity(3, 3)};
  EXPECT_THROW(forward_pass(wrong, {Vector::Zero(2)}, model), ModelContractError);
  EXPECT_THROW(forward_pass(BicycleInitialBelief(), {Vector::Zero(3)}, model), ModelContractError);

  // Zero prior, zero process and measurement noise: S = 0.
  LinearModel degenerate(Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                         Matrix::Identity(1, 1), Matrix::Zero(1, 1), Matrix::Zero(1, 1));
  try {
    forward_pass({Vector::Zero(1), Matrix::Zero(1, 1)}, {Vector::Zero(1), Vector::Zero(1)}, degenerate);
    FAIL() << "expected SingularInnovationError";
  } catch (const SingularInnovationError& e) {
    ASSERT_TRUE(e.step().has_value());
    EXPECT_EQ(*e.step(), 1);
    EXPECT_EQ(e.stage(), "S");
  }

  EXPECT_THROW(information_update(Matrix::Zero(2, 2), Matrix::Identity(2, 2), Matrix::Identity(2, 2)),
               SingularPriorError);
}

TEST(Ekf, FinalCovarianceWithoutSteps) {
  EKFTrace trace;
  trace.initial = BicycleInitialBelief();
  EXPECT_EQ(trace.final_covariance(), trace.initial.P);
}

}  // namespace
}  // namespace covgrad
