#include <gtest/gtest.h>

#include <random>

#include "covgrad/backprop.hpp"
#include "covgrad/bicycle_model.hpp"
#include "covgrad/ekf.hpp"
#include "covgrad/errors.hpp"
#include "covgrad/gradcheck.hpp"
#include "covgrad/linear_model.hpp"
#include "support/test_models.hpp"

namespace covgrad {
namespace {

using testing::BicycleInitialBelief;
using testing::RandomBicycleControls;
using testing::RandomControls;
using testing::RandomSpd;
using testing::StateNoiseModel;

// One step of the scalar model, expanded by hand:
//   x1 = x0 + u^2, P- = p + q u^2, H = 1 + x1, S = H^2 P- + r,
//   L = P+ = P- r / S.
struct ScalarOracle {
  double x0, p, u, q, r;
  double Pm() const { return p + q * u * u; }
  double H() const { return 1.0 + x0 + u * u; }
  double S() const { return H() * H() * Pm() + r; }
  double loss() const { return Pm() * r / S(); }
  double dL_dPm() const { return r * r / (S() * S()); }
  double dL_dH() const { return -2.0 * H() * Pm() * Pm() * r / (S() * S()); }
  double du() const { return dL_dPm() * 2.0 * q * u + dL_dH() * 2.0 * u; }
  double dx0() const { return dL_dH(); }
  double dp() const { return dL_dPm(); }
  double dq() const { return dL_dPm() * u * u; }
  double dr() const { return H() * H() * Pm() * Pm() / (S() * S()); }
};

TEST(Backprop, ScalarModelMatchesClosedForm) {
  const ScalarOracle o{0.3, 0.5, 0.7, 0.2, 0.4};
  // Values of the closed form above, frozen.
  EXPECT_NEAR(o.loss(), 0.10327920990368177, 1e-15);
  EXPECT_NEAR(o.du(), -0.12530061107827797, 1e-15);
  EXPECT_NEAR(o.dx0(), -0.095466027025042397, 1e-15);
  EXPECT_NEAR(o.dp(), 0.029827952702790683, 1e-15);
  EXPECT_NEAR(o.dq(), 0.014615696824367435, 1e-15);
  EXPECT_NEAR(o.dr(), 0.21360523546853236, 1e-15);

  const ScalarModel model(o.q, o.r);
  const BeliefState initial{Vector::Constant(1, o.x0), Matrix::Constant(1, 1, o.p)};
  const LossAndGradient lg = gradient_of_loss(initial, {Vector::Constant(1, o.u)}, model, LossSpec::Trace());
  EXPECT_NEAR(lg.loss, 0.10327920990368177, 1e-14);
  EXPECT_NEAR(lg.grads.dL_du(0, 0), -0.12530061107827797, 1e-13);
  EXPECT_NEAR(lg.grads.dL_dxhat(0, 0), -0.095466027025042397, 1e-13);
  EXPECT_NEAR(lg.grads.dL_dP0(0, 0), 0.029827952702790683, 1e-13);
  EXPECT_NEAR(lg.grads.dL_dQ[0](0, 0), 0.014615696824367435, 1e-13);
  EXPECT_NEAR(lg.grads.dL_dR[0](0, 0), 0.21360523546853236, 1e-13);
}

TEST(Backprop, ScalarModelLongHorizonMatchesFiniteDifferences) {
  const ScalarModel model(0.2, 0.4);
  const BeliefState initial{Vector::Constant(1, 0.3), Matrix::Constant(1, 1, 0.5)};
  std::mt19937_64 rng(21);
  const ControlSequence u = RandomControls(12, 1, rng, 0.5);
  const GradientSet g = backward_pass(forward_pass(initial, u, model), LossSpec::Trace(), model);
  EXPECT_TRUE(compare(g.dL_du, fd_gradient_controls(initial, u, model, LossSpec::Trace()), 1e-5).passed);
}

class BicycleGradients : public ::testing::TestWithParam<std::tuple<int, LossKind>> {};

TEST_P(BicycleGradients, AllInputsMatchFiniteDifferences) {
  const auto [N, kind] = GetParam();
  const BicycleModel model(BicycleParams::Default());
  const BeliefState initial = BicycleInitialBelief();
  const LossSpec spec = kind == LossKind::Trace            ? LossSpec::Trace()
                        : kind == LossKind::NormalizedTrace ? LossSpec::NormalizedTrace(initial.P)
                                                            : LossSpec::Schatten();
  std::mt19937_64 rng(100 + N);
  const ControlSequence u = RandomBicycleControls(N, rng);
  const GradientSet g = backward_pass(forward_pass(initial, u, model), spec, model);

  const Comparison cu = compare(g.dL_du, fd_gradient_controls(initial, u, model, spec), 1e-4);
  EXPECT_TRUE(cu.passed) << "u: rel " << cu.max_rel_error << " at (" << cu.worst_row << ", " << cu.worst_col << ")";
  EXPECT_TRUE(compare(g.dL_dQ, fd_gradient_Q(initial, u, model, spec), 1e-4).passed);
  EXPECT_TRUE(compare(g.dL_dR, fd_gradient_R(initial, u, model, spec), 1e-4).passed);
  EXPECT_TRUE(compare(g.dL_dP0, fd_gradient_P0(initial, u, model, spec), 1e-4).passed);
}

INSTANTIATE_TEST_SUITE_P(Horizons, BicycleGradients,
                         ::testing::Combine(::testing::Values(1, 3, 10),
                                            ::testing::Values(LossKind::Trace, LossKind::NormalizedTrace,
                                                              LossKind::Schatten)),
                         [](const auto& info) {
                           return "N" + std::to_string(std::get<0>(info.param)) + "_" +
                                  ToString(std::get<1>(info.param));
                         });

TEST(Backprop, InitialEstimateGradientMatchesFiniteDifferences) {
  const BicycleModel model(BicycleParams::Default());
  BeliefState initial = BicycleInitialBelief();
  initial.x_hat << 0.2, 1.0, -2.0, 0.5, 0.3;
  std::mt19937_64 rng(22);
  const ControlSequence u = RandomBicycleControls(6, rng);
  const LossSpec spec = LossSpec::Schatten();
  const GradientSet g = backward_pass(forward_pass(initial, u, model), spec, model);
  for (int k = 0; k < 5; ++k) {
    const double h = 1e-5 * (1.0 + std::abs(initial.x_hat(k)));
    BeliefState plus = initial, minus = initial;
    plus.x_hat(k) += h;
    minus.x_hat(k) -= h;
    const double fd = (loss_of_controls(plus, u, model, spec) - loss_of_controls(minus, u, model, spec)) / (2 * h);
    EXPECT_NEAR(g.dL_dxhat(0, k), fd, 1e-5 * std::max(1.0, std::abs(fd))) << "component " << k;
  }
}

TEST(Backprop, StateDependentMeasurementNoise) {
  const StateNoiseModel model;
  const BeliefState initial{Vector::Constant(2, 0.4), Matrix::Identity(2, 2)};
  std::mt19937_64 rng(23);
  const ControlSequence u = RandomControls(8, 2, rng, 0.6);
  for (const LossSpec& spec : {LossSpec::Trace(), LossSpec::Schatten(3.0)}) {
    const GradientSet g = backward_pass(forward_pass(initial, u, model), spec, model);
    const Comparison c = compare(g.dL_du, fd_gradient_controls(initial, u, model, spec), 1e-5);
    EXPECT_TRUE(c.passed) << c.max_rel_error;
  }
}

TEST(Backprop, LinearModelHasNoControlGradient) {
  const LinearModel model = LinearModel::Example();
  const BeliefState initial{Vector::Zero(3), Matrix::Identity(3, 3)};
  std::mt19937_64 rng(24);
  const ControlSequence u = RandomControls(50, 2, rng);
  const GradientSet g = backward_pass(forward_pass(initial, u, model), LossSpec::Trace(), model);
  EXPECT_LT(g.dL_du.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_GT(g.dL_dQ.back().norm(), 0.0);
}

TEST(Backprop, GradientsAreSymmetric) {
  const BicycleModel model(BicycleParams::Default());
  std::mt19937_64 rng(25);
  const GradientSet g = backward_pass(forward_pass(BicycleInitialBelief(), RandomBicycleControls(15, rng), model),
                                      LossSpec::Schatten(), model);
  EXPECT_LT((g.dL_dP0 - g.dL_dP0.transpose()).norm(), 1e-14 * g.dL_dP0.norm());
  for (const auto& m : g.dL_dQ) EXPECT_LT((m - m.transpose()).norm(), 1e-14 * (1 + m.norm()));
  for (const auto& m : g.dL_dR) EXPECT_LT((m - m.transpose()).norm(), 1e-14 * (1 + m.norm()));
}

TEST(Backprop, LinearInTheSeed) {
  const BicycleModel model(BicycleParams::Default());
  std::mt19937_64 rng(26);
  const EKFTrace trace = forward_pass(BicycleInitialBelief(), RandomBicycleControls(10, rng), model);
  const Matrix A = RandomSpd(5, rng), B = RandomSpd(5, rng);
  const GradientSet ga = backward_pass_seeded(trace, A, model);
  const GradientSet gb = backward_pass_seeded(trace, B, model);
  const GradientSet gab = backward_pass_seeded(trace, 2.0 * A - 0.5 * B, model);
  const Matrix expected = 2.0 * ga.dL_du - 0.5 * gb.dL_du;
  EXPECT_LT((gab.dL_du - expected).norm(), 1e-10 * expected.norm());

  // Only the symmetric part of a seed matters.
  const Matrix M = testing::RandomMatrix(5, 5, rng);
  EXPECT_LT((backward_pass_seeded(trace, M, model).dL_du -
             backward_pass_seeded(trace, M.transpose(), model).dL_du).norm(), 1e-12);

  EXPECT_EQ(backward_pass_seeded(trace, Matrix::Identity(5, 5), model).dL_du,
            backward_pass(trace, LossSpec::Trace(), model).dL_du);
  EXPECT_THROW(backward_pass_seeded(trace, Matrix::Identity(4, 4), model), ContractError);
}

TEST(Backprop, IntermediatesOnRequest) {
  const BicycleModel model(BicycleParams::Default());
  std::mt19937_64 rng(27);
  const EKFTrace trace = forward_pass(BicycleInitialBelief(), RandomBicycleControls(7, rng), model);
  EXPECT_TRUE(backward_pass(trace, LossSpec::Trace(), model).intermediates.empty());
  const GradientSet g = backward_pass(trace, LossSpec::Trace(), model, {.store_intermediates = true});
  ASSERT_EQ(g.intermediates.size(), 7u);
  EXPECT_EQ(g.intermediates.back().dL_dP_post, Matrix::Identity(5, 5));
  EXPECT_EQ(g.intermediates.front().dL_dF.rows(), 5);
  EXPECT_EQ(g.dL_dxhat.rows(), 8);
}

TEST(Backprop, BitIdenticalReruns) {
  const BicycleModel model(BicycleParams::Default());
  std::mt19937_64 rng(28);
  const ControlSequence u = RandomBicycleControls(50, rng);
  const auto a = gradient_of_loss(BicycleInitialBelief(), u, model, LossSpec::Schatten());
  const auto b = gradient_of_loss(BicycleInitialBelief(), u, model, LossSpec::Schatten());
  EXPECT_EQ(a.loss, b.loss);
  EXPECT_EQ(a.grads.dL_du, b.grads.dL_du);
  EXPECT_EQ(a.grads.dL_dP0, b.grads.dL_dP0);
}

TEST(Backprop, RichardsonExtrapolationImprovesAgreement) {
  // Central differences have O(h^2) error; extrapolating two step sizes
  // must land closer to the analytic gradient than either one.
  const BicycleModel model(BicycleParams::Default());
  std::mt19937_64 rng(29);
  const BeliefState initial = BicycleInitialBelief();
  const ControlSequence u = RandomBicycleControls(5, rng);
  const LossSpec spec = LossSpec::Trace();
  const Matrix g = backward_pass(forward_pass(initial, u, model), spec, model).dL_du;
  const Matrix coarse = fd_gradient_controls(initial, u, model, spec, {.step_scale = 2e-2});
  const Matrix fine = fd_gradient_controls(initial, u, model, spec, {.step_scale = 1e-2});
  const Matrix extrapolated = (4.0 * fine - coarse) / 3.0;
  const double e_coarse = (coarse - g).norm(), e_fine = (fine - g).norm(), e_extra = (extrapolated - g).norm();
  EXPECT_LT(e_fine, e_coarse);
  EXPECT_GT(e_coarse / e_fine, 3.0);
  EXPECT_LT(e_extra, e_fine);
}

TEST(Backprop, SingularMeasurementNoiseReported) {
  LinearModel model(Matrix::Identity(1, 1), Matrix::Identity(1, 1), Matrix::Identity(1, 1),
                    Matrix::Identity(1, 1), Matrix::Constant(1, 1, 1.0), Matrix::Zero(1, 1));
  const EKFTrace trace = forward_pass({Vector::Zero(1), Matrix::Identity(1, 1)}, {Vector::Zero(1)}, model);
  EXPECT_THROW(backward_pass(trace, LossSpec::Trace(), model), SingularNoiseError);
}

}  // namespace
}  // namespace covgrad
