#include "covgrad/montecarlo.hpp"

#include <cmath>
#include <random>

#include "covgrad/errors.hpp"
#include "covgrad/parallel.hpp"

namespace covgrad {
namespace {

// Square root of a PSD covariance that tolerates zero (noise-free) blocks.
Matrix CovarianceRoot(const Matrix& C) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(Symmetrize(C));
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Vector Gaussian(const Matrix& root, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vector z(root.cols());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = nd(rng);
  return root * z;
}

}  // namespace

Rollout rollout(const Vector& true_initial, const ControlSequence& controls,
                const SystemModel& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Rollout out;
  out.true_states.push_back(true_initial);
  for (std::size_t i = 0; i < controls.size(); ++i) {
    const int n = static_cast<int>(i) + 1;
    const Matrix q_root = CovarianceRoot(model.Q(n));
    Vector next;
    for (int attempt = 0;; ++attempt) {
      try {
        next = model.f(out.true_states.back(), controls[i], Gaussian(q_root, rng));
        break;
      } catch (const DomainError&) {
        if (attempt == 5) throw;
      }
    }
    const Matrix r_root = CovarianceRoot(model.R(n, next));
    out.observations.push_back(model.h(next) + Gaussian(r_root, rng));
    out.true_states.push_back(std::move(next));
  }
  return out;
}

TrialRecord run_trial(const PlanProblem& problem, const ControlSequence& controls,
                      const Vector& true_initial, std::uint64_t seed) {
  const SystemModel& model = *problem.model;
  Rollout sim = rollout(true_initial, controls, model, seed);

  TrialRecord rec;
  BeliefState belief = problem.initial;
  rec.estimates.push_back(belief.x_hat);
  for (std::size_t i = 0; i < controls.size(); ++i) {
    belief = filter_step(belief, controls[i], sim.observations[i], model, static_cast<int>(i) + 1);
    rec.estimates.push_back(belief.x_hat);
    rec.trace_history.push_back(belief.P.trace());
  }
  for (std::size_t n = 0; n < rec.estimates.size(); ++n) {
    rec.abs_errors.push_back((rec.estimates[n] - sim.true_states[n]).cwiseAbs());
    rec.output_errors.push_back((model.h(rec.estimates[n]) - model.h(sim.true_states[n])).norm());
  }
  rec.true_states = std::move(sim.true_states);
  rec.observations = std::move(sim.observations);
  return rec;
}

std::vector<TrialRecord> run_trials(const PlanProblem& problem, const ControlSequence& controls,
                                    const Vector& true_initial,
                                    const MonteCarloOptions& options) {
  if (options.trials < 1) throw ContractError("need at least one trial");
  std::vector<TrialRecord> out(options.trials);
  ParallelFor(options.trials, options.threads, [&](int i) {
    out[i] = run_trial(problem, controls, true_initial, options.base_seed + static_cast<std::uint64_t>(i));
  });
  return out;
}

ErrorSummary aggregate(const std::vector<TrialRecord>& trials) {
  if (trials.empty()) throw ContractError("aggregate needs at least one trial");
  const auto steps = trials.front().abs_errors.size();
  const auto d = trials.front().abs_errors.front().size();
  for (const auto& t : trials) {
    if (t.abs_errors.size() != steps || t.trace_history.size() + 1 != steps) {
      throw ContractError("trials have different lengths");
    }
  }
  ErrorSummary s;
  s.trials = static_cast<int>(trials.size());
  s.mean_abs_error = Matrix::Zero(steps, d);
  s.std_abs_error = Matrix::Zero(steps, d);
  s.mean_trace = Vector::Zero(steps - 1);
  const double count = static_cast<double>(trials.size());

  // Fixed index order keeps the sums reproducible.
  for (const auto& t : trials) {
    for (std::size_t n = 0; n < steps; ++n) s.mean_abs_error.row(n) += t.abs_errors[n].transpose();
    for (std::size_t n = 0; n + 1 < steps; ++n) s.mean_trace(n) += t.trace_history[n];
    s.mean_final_position_error += t.output_errors.back();
  }
  s.mean_abs_error /= count;
  s.mean_trace /= count;
  s.mean_final_position_error /= count;
  for (const auto& t : trials) {
    for (std::size_t n = 0; n < steps; ++n) {
      s.std_abs_error.row(n) +=
          (t.abs_errors[n].transpose() - s.mean_abs_error.row(n)).array().square().matrix();
    }
  }
  s.std_abs_error = (s.std_abs_error / count).cwiseSqrt();
  return s;
}

double mean_final_error_norm(const std::vector<TrialRecord>& trials,
                             const std::vector<int>& components) {
  if (trials.empty()) throw ContractError("no trials");
  double total = 0.0;
  for (const auto& t : trials) {
    double sq = 0.0;
    for (int k : components) sq += t.abs_errors.back()(k) * t.abs_errors.back()(k);
    total += std::sqrt(sq);
  }
  return total / static_cast<double>(trials.size());
}

}  // namespace covgrad
