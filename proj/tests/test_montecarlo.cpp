#include <gtest/gtest.h>

#include <memory>

#include "covgrad/bicycle_model.hpp"
#include "covgrad/errors.hpp"
#include "covgrad/montecarlo.hpp"
#include "covgrad/planner.hpp"
#include "support/test_models.hpp"

namespace covgrad {
namespace {

PlanProblem Problem(std::shared_ptr<const SystemModel> model, int N) {
  const BicycleParams params = BicycleParams::Default();
  PlanProblem p;
  p.initial = testing::BicycleInitialBelief();
  p.model = std::move(model);
  p.loss = LossSpec::Trace();
  p.horizon = N;
  p.constraints = {params.u_min, params.u_max, params.du_max * params.dt};
  return p;
}

Vector TrueStart() {
  Vector x = Vector::Zero(5);
  x(bicycle::kLx) = 1.0;
  return x;
}

TEST(MonteCarlo, ZeroProcessNoiseFollowsNominalPath) {
  auto bike = std::make_shared<BicycleModel>(BicycleParams::Default());
  const PlanProblem prob = Problem(bike, 30);
  const ControlSequence u = sample_initial_controls(prob, 1);
  const testing::ScaledNoise quiet(bike, 0.0, 1.0);
  const Rollout r = rollout(TrueStart(), u, quiet, 7);
  const auto nominal = rollout_noise_free(TrueStart(), u, *bike);
  ASSERT_EQ(r.true_states.size(), 31u);
  ASSERT_EQ(r.observations.size(), 30u);
  for (int n = 0; n <= 30; ++n) EXPECT_LT((r.true_states[n] - nominal[n]).norm(), 1e-12);
}

TEST(MonteCarlo, SeedsAreReproducibleAndDistinct) {
  auto bike = std::make_shared<BicycleModel>(BicycleParams::Default());
  const PlanProblem prob = Problem(bike, 20);
  const ControlSequence u = sample_initial_controls(prob, 1);
  const TrialRecord a = run_trial(prob, u, TrueStart(), 5);
  const TrialRecord b = run_trial(prob, u, TrueStart(), 5);
  const TrialRecord c = run_trial(prob, u, TrueStart(), 6);
  EXPECT_EQ(a.estimates.back(), b.estimates.back());
  EXPECT_NE(a.estimates.back(), c.estimates.back());
  EXPECT_EQ(a.trace_history.size(), 20u);
  EXPECT_EQ(a.abs_errors.size(), 21u);
  EXPECT_EQ(a.output_errors.size(), 21u);
}

TEST(MonteCarlo, ThreadCountDoesNotChangeResults) {
  auto bike = std::make_shared<BicycleModel>(BicycleParams::Default());
  const PlanProblem prob = Problem(bike, 25);
  const ControlSequence u = sample_initial_controls(prob, 2);
  const auto one = run_trials(prob, u, TrueStart(), {.trials = 12, .base_seed = 40, .threads = 1});
  const auto many = run_trials(prob, u, TrueStart(), {.trials = 12, .base_seed = 40, .threads = 4});
  const ErrorSummary s1 = aggregate(one), s2 = aggregate(many);
  EXPECT_EQ(s1.mean_abs_error, s2.mean_abs_error);
  EXPECT_EQ(s1.std_abs_error, s2.std_abs_error);
  EXPECT_EQ(s1.mean_trace, s2.mean_trace);
  // Trial i is seeded with base_seed + i.
  EXPECT_EQ(one[3].estimates.back(), run_trial(prob, u, TrueStart(), 43).estimates.back());
}

TEST(MonteCarlo, FilterTraceMatchesPlanningCovariance) {
  // With a fixed control sequence the covariance only depends on the
  // linearisation points, which stay close to the planning rollout.
  auto bike = std::make_shared<BicycleModel>(BicycleParams::Default());
  const PlanProblem prob = Problem(bike, 40);
  const ControlSequence u = sample_initial_controls(prob, 3);
  const TrialRecord t = run_trial(prob, u, TrueStart(), 11);
  const double planned = forward_pass(prob.initial, u, *bike).final_covariance().trace();
  EXPECT_NEAR(t.trace_history.back(), planned, 0.5 * planned);
}

TEST(Aggregate, HandComputedStatistics) {
  TrialRecord a, b;
  a.abs_errors = {Vector::Constant(2, 1.0), Vector::Constant(2, 2.0)};
  b.abs_errors = {Vector::Constant(2, 3.0), Vector::Constant(2, 2.0)};
  a.estimates = b.estimates = a.true_states = b.true_states = {Vector::Zero(2), Vector::Zero(2)};
  a.trace_history = {4.0};
  b.trace_history = {2.0};
  a.output_errors = {0.0, 1.0};
  b.output_errors = {0.0, 3.0};
  const ErrorSummary s = aggregate({a, b});
  EXPECT_EQ(s.trials, 2);
  EXPECT_DOUBLE_EQ(s.mean_abs_error(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(s.std_abs_error(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.std_abs_error(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(s.mean_trace(0), 3.0);
  EXPECT_DOUBLE_EQ(s.mean_final_position_error, 2.0);
  EXPECT_THROW(aggregate({}), ContractError);
}

TEST(Aggregate, FinalErrorNorm) {
  TrialRecord a, b;
  Vector e1(3), e2(3);
  e1 << 9.0, 3.0, 4.0;
  e2 << 9.0, 0.0, 1.0;
  a.abs_errors = {e1};
  b.abs_errors = {e2};
  EXPECT_DOUBLE_EQ(mean_final_error_norm({a, b}, {1, 2}), 3.0);
}

}  // namespace
}  // namespace covgrad
