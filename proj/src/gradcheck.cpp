#include "covgrad/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "covgrad/errors.hpp"
#include "covgrad/parallel.hpp"

namespace covgrad {
namespace {

// Wraps a model and adds a perturbation to Q or R at a single step.
class NoisePerturbedModel final : public SystemModel {
 public:
  NoisePerturbedModel(const SystemModel& base, int step, Matrix dQ, Matrix dR)
      : base_(base), step_(step), dQ_(std::move(dQ)), dR_(std::move(dR)) {}

  int state_dim() const override { return base_.state_dim(); }
  int control_dim() const override { return base_.control_dim(); }
  int noise_dim() const override { return base_.noise_dim(); }
  int obs_dim() const override { return base_.obs_dim(); }
  Vector f(const Vector& x, const Vector& u, const Vector& w) const override { return base_.f(x, u, w); }
  Vector h(const Vector& x) const override { return base_.h(x); }
  Matrix F(const Vector& x, const Vector& u) const override { return base_.F(x, u); }
  Matrix G(const Vector& x, const Vector& u) const override { return base_.G(x, u); }
  Matrix H(const Vector& x) const override { return base_.H(x); }
  Matrix Ju(const Vector& x, const Vector& u) const override { return base_.Ju(x, u); }
  Matrix dF_dx(const Vector& x, const Vector& u, int k) const override { return base_.dF_dx(x, u, k); }
  Matrix dF_du(const Vector& x, const Vector& u, int k) const override { return base_.dF_du(x, u, k); }
  Matrix dG_dx(const Vector& x, const Vector& u, int k) const override { return base_.dG_dx(x, u, k); }
  Matrix dG_du(const Vector& x, const Vector& u, int k) const override { return base_.dG_du(x, u, k); }
  Matrix dH_dx(const Vector& x, int k) const override { return base_.dH_dx(x, k); }
  Matrix dR_dx(int n, const Vector& x, int k) const override { return base_.dR_dx(n, x, k); }
  bool has_state_dependent_noise() const override { return base_.has_state_dependent_noise(); }
  Matrix Q(int n) const override {
    Matrix q = base_.Q(n);
    if (n == step_ && dQ_.size() > 0) q += dQ_;
    return q;
  }
  Matrix R(int n, const Vector& x) const override {
    Matrix r = base_.R(n, x);
    if (n == step_ && dR_.size() > 0) r += dR_;
    return r;
  }

 private:
  const SystemModel& base_;
  int step_;
  Matrix dQ_, dR_;
};

double StepFor(double value, double scale) { return scale * (1.0 + std::abs(value)); }

Matrix SymmetricUnit(Eigen::Index d, Eigen::Index i, Eigen::Index j) {
  Matrix E = Matrix::Zero(d, d);
  E(i, j) = 1.0;
  E(j, i) = 1.0;
  return E;
}

// Gradient over the symmetric entries of a d x d input; `loss_at(delta)`
// evaluates the loss with the input shifted by `delta`.
Matrix SymmetricFd(Eigen::Index d, const std::function<double(const Matrix&)>& loss_at,
                   const Matrix& base, const FdOptions& options) {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> entries;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) entries.emplace_back(i, j);
  Matrix out = Matrix::Zero(d, d);
  const double center = options.central ? 0.0 : loss_at(Matrix::Zero(d, d));
  ParallelFor(static_cast<int>(entries.size()), options.threads, [&](int e) {
    const auto [i, j] = entries[e];
    const double h = StepFor(base(i, j), options.step_scale);
    const Matrix E = SymmetricUnit(d, i, j);
    double g = options.central ? (loss_at(h * E) - loss_at(-h * E)) / (2.0 * h)
                               : (loss_at(h * E) - center) / h;
    if (i != j) g *= 0.5;
    out(i, j) = g;
    out(j, i) = g;
  });
  return out;
}

}  // namespace

double loss_of_controls(const BeliefState& initial, const ControlSequence& controls,
                        const SystemModel& model, const LossSpec& spec) {
  return evaluate(spec, forward_pass(initial, controls, model).final_covariance());
}

Matrix fd_gradient_controls(const BeliefState& initial, const ControlSequence& controls,
                            const SystemModel& model, const LossSpec& spec,
                            const FdOptions& options) {
  const int N = static_cast<int>(controls.size());
  const int du = model.control_dim();
  Matrix out(N, du);
  const double center =
      options.central ? 0.0 : loss_of_controls(initial, controls, model, spec);

  ParallelFor(N * du, options.threads, [&](int idx) {
    const int n = idx / du, k = idx % du;
    ControlSequence perturbed = controls;
    double h = StepFor(controls[n](k), options.step_scale);
    for (int attempt = 0;; ++attempt) {
      try {
        perturbed[n](k) = controls[n](k) + h;
        const double up = loss_of_controls(initial, perturbed, model, spec);
        if (!options.central) {
          out(n, k) = (up - center) / h;
          return;
        }
        perturbed[n](k) = controls[n](k) - h;
        const double down = loss_of_controls(initial, perturbed, model, spec);
        out(n, k) = (up - down) / (2.0 * h);
        return;
      } catch (const DomainError&) {
        if (attempt == 3) throw;
        h *= 0.5;
      }
    }
  });
  return out;
}

std::vector<Matrix> fd_gradient_Q(const BeliefState& initial, const ControlSequence& controls,
                                  const SystemModel& model, const LossSpec& spec,
                                  const FdOptions& options) {
  const int N = static_cast<int>(controls.size());
  std::vector<Matrix> out;
  for (int n = 1; n <= N; ++n) {
    const Matrix base = model.Q(n);
    out.push_back(SymmetricFd(
        base.rows(),
        [&](const Matrix& delta) {
          NoisePerturbedModel m(model, n, delta, Matrix());
          return loss_of_controls(initial, controls, m, spec);
        },
        base, options));
  }
  return out;
}

std::vector<Matrix> fd_gradient_R(const BeliefState& initial, const ControlSequence& controls,
                                  const SystemModel& model, const LossSpec& spec,
                                  const FdOptions& options) {
  const int N = static_cast<int>(controls.size());
  const EKFTrace trace = forward_pass(initial, controls, model);
  std::vector<Matrix> out;
  for (int n = 1; n <= N; ++n) {
    const Matrix base = trace.steps[n - 1].R;
    out.push_back(SymmetricFd(
        base.rows(),
        [&](const Matrix& delta) {
          NoisePerturbedModel m(model, n, Matrix(), delta);
          return loss_of_controls(initial, controls, m, spec);
        },
        base, options));
  }
  return out;
}

Matrix fd_gradient_P0(const BeliefState& initial, const ControlSequence& controls,
                      const SystemModel& model, const LossSpec& spec, const FdOptions& options) {
  return SymmetricFd(
      initial.P.rows(),
      [&](const Matrix& delta) {
        BeliefState b = initial;
        b.P += delta;
        return loss_of_controls(b, controls, model, spec);
      },
      initial.P, options);
}

Matrix fd_symmetric_gradient(const std::function<double(const Matrix&)>& fn, const Matrix& X,
                             double step_scale) {
  FdOptions options;
  options.step_scale = step_scale;
  return SymmetricFd(
      X.rows(), [&](const Matrix& delta) { return fn(X + delta); }, X, options);
}

Comparison compare(const Matrix& analytic, const Matrix& numeric, double rel_tol,
                   double abs_floor) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) {
    throw ContractError("compare: shape mismatch");
  }
  Comparison c;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
    for (Eigen::Index j = 0; j < analytic.cols(); ++j) {
      const double a = analytic(i, j), b = numeric(i, j);
      const double gap = std::abs(a - b);
      if (!std::isfinite(gap)) {
        c.passed = false;
        c.max_rel_error = c.max_abs_error = std::numeric_limits<double>::infinity();
        c.worst_row = i;
        c.worst_col = j;
        return c;
      }
      c.max_abs_error = std::max(c.max_abs_error, gap);
      if (gap <= abs_floor) continue;
      const double rel = gap / std::max(std::abs(a), std::abs(b));
      if (rel > c.max_rel_error) {
        c.max_rel_error = rel;
        c.worst_row = i;
        c.worst_col = j;
      }
      if (gap > rel_tol * std::max(std::abs(a), std::abs(b))) c.passed = false;
    }
  }
  return c;
}

Comparison compare(const std::vector<Matrix>& analytic, const std::vector<Matrix>& numeric,
                   double rel_tol, double abs_floor) {
  if (analytic.size() != numeric.size()) throw ContractError("compare: length mismatch");
  Comparison total;
  for (std::size_t n = 0; n < analytic.size(); ++n) {
    const Comparison c = compare(analytic[n], numeric[n], rel_tol, abs_floor);
    total.max_abs_error = std::max(total.max_abs_error, c.max_abs_error);
    total.passed = total.passed && c.passed;
    if (c.max_rel_error > total.max_rel_error) {
      total.max_rel_error = c.max_rel_error;
      total.worst_row = static_cast<Eigen::Index>(n);
      total.worst_col = c.worst_row;
    }
  }
  return total;
}

double ModelDerivativeReport::worst() const {
  return std::max({F, G, H, Ju, dF_dx, dF_du, dG_dx, dG_du, dH_dx, dR_dx});
}

namespace {

double RelErr(const Matrix& a, const Matrix& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff(), 1e-8});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

// Central difference of a matrix-valued function of a vector, along e_k.
template <typename Fn>
Matrix DiffAlong(const Fn& fn, const Vector& v, int k, double step) {
  Vector up = v, down = v;
  const double h = step * (1.0 + std::abs(v(k)));
  up(k) += h;
  down(k) -= h;
  return (fn(up) - fn(down)) / (2.0 * h);
}

template <typename Fn>
Matrix JacobianFd(const Fn& fn, const Vector& v, double step) {
  const Vector f0 = fn(v);
  Matrix J(f0.size(), v.size());
  for (int k = 0; k < v.size(); ++k) {
    J.col(k) = DiffAlong([&](const Vector& z) -> Matrix { return fn(z); }, v, k, step);
  }
  return J;
}

}  // namespace

ModelDerivativeReport check_model_derivatives(const SystemModel& model, const Vector& x,
                                              const Vector& u, double step) {
  ModelDerivativeReport r;
  const Vector w0 = Vector::Zero(model.noise_dim());
  r.F = RelErr(model.F(x, u), JacobianFd([&](const Vector& z) { return model.f(z, u, w0); }, x, step));
  r.G = RelErr(model.G(x, u), JacobianFd([&](const Vector& z) { return model.f(x, u, z); }, w0, step));
  r.Ju = RelErr(model.Ju(x, u), JacobianFd([&](const Vector& z) { return model.f(x, z, w0); }, u, step));
  r.H = RelErr(model.H(x), JacobianFd([&](const Vector& z) { return model.h(z); }, x, step));
  for (int k = 0; k < model.state_dim(); ++k) {
    r.dF_dx = std::max(r.dF_dx, RelErr(model.dF_dx(x, u, k),
                                       DiffAlong([&](const Vector& z) { return model.F(z, u); }, x, k, step)));
    r.dG_dx = std::max(r.dG_dx, RelErr(model.dG_dx(x, u, k),
                                       DiffAlong([&](const Vector& z) { return model.G(z, u); }, x, k, step)));
    r.dH_dx = std::max(r.dH_dx, RelErr(model.dH_dx(x, k),
                                       DiffAlong([&](const Vector& z) { return model.H(z); }, x, k, step)));
    r.dR_dx = std::max(r.dR_dx, RelErr(model.dR_dx(1, x, k),
                                       DiffAlong([&](const Vector& z) { return model.R(1, z); }, x, k, step)));
  }
  for (int k = 0; k < model.control_dim(); ++k) {
    r.dF_du = std::max(r.dF_du, RelErr(model.dF_du(x, u, k),
                                       DiffAlong([&](const Vector& z) { return model.F(x, z); }, u, k, step)));
    r.dG_du = std::max(r.dG_du, RelErr(model.dG_du(x, u, k),
                                       DiffAlong([&](const Vector& z) { return model.G(x, z); }, u, k, step)));
  }
  return r;
}

// --- Matrix calculus rules -------------------------------------------------

std::string ToString(MatrixRule rule) {
  switch (rule) {
    case MatrixRule::XYXt: return "XYX^T";
    case MatrixRule::YXYt: return "YXY^T";
    case MatrixRule::Inverse: return "inverse";
    case MatrixRule::VectorChain: return "vector-chain";
    case MatrixRule::ScalarTrace: return "scalar-trace";
  }
  return "unknown";
}

double QuadraticLoss::operator()(const Matrix& M) const {
  if (M.cols() == 1) return C.col(0).dot(M.col(0)) + 0.5 * M.col(0).dot(W * M.col(0));
  return (C.transpose() * M).trace() + 0.5 * (W * M * W * M.transpose()).trace();
}

Matrix QuadraticLoss::gradient(const Matrix& M) const {
  if (M.cols() == 1) return C + W * M;
  return C + W * M * W;
}

namespace {

// Plain entrywise central differences (no symmetric pairing).
Matrix EntrywiseFd(const std::function<double(const Matrix&)>& fn, const Matrix& X) {
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const double h = 1e-5 * (1.0 + std::abs(X(i, j)));
      Matrix up = X, down = X;
      up(i, j) += h;
      down(i, j) -= h;
      out(i, j) = (fn(up) - fn(down)) / (2.0 * h);
    }
  }
  return out;
}

RuleCheck Finish(Matrix analytic, Matrix numeric) {
  RuleCheck rc;
  const double scale = std::max(
      {analytic.cwiseAbs().maxCoeff(), numeric.cwiseAbs().maxCoeff(), 1e-12});
  rc.max_rel_error = (analytic - numeric).cwiseAbs().maxCoeff() / scale;
  rc.analytic = std::move(analytic);
  rc.numeric = std::move(numeric);
  return rc;
}

Vector ChainMap(const Vector& x, const Matrix& Y) {
  Vector m = x.cwiseProduct(x);
  if (Y.size() > 0) m += Y * x.array().sin().matrix();
  return m;
}

Matrix ChainJacobian(const Vector& x, const Matrix& Y) {
  Matrix J = Matrix((2.0 * x).asDiagonal());
  if (Y.size() > 0) J += Y * x.array().cos().matrix().asDiagonal();
  return J;
}

Matrix RandomMatrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Matrix M(rows, cols);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = nd(rng);
  return M;
}

Matrix RandomSpd(int d, std::mt19937_64& rng) {
  const Matrix A = RandomMatrix(d, d, rng);
  return A * A.transpose() / d + Matrix::Identity(d, d);
}

Matrix RandomSymmetric(int d, std::mt19937_64& rng) {
  const Matrix A = RandomMatrix(d, d, rng);
  return 0.5 * (A + A.transpose());
}

}  // namespace

RuleCheck check_matrix_rule(MatrixRule rule, const Matrix& X, const Matrix& Y,
                            const QuadraticLoss& loss) {
  switch (rule) {
    case MatrixRule::XYXt: {
      auto phi = [&](const Matrix& Z) -> Matrix { return Z * Y * Z.transpose(); };
      const Matrix dM = loss.gradient(phi(X));
      return Finish(2.0 * dM * X * Y.transpose(),
                    EntrywiseFd([&](const Matrix& Z) { return loss(phi(Z)); }, X));
    }
    case MatrixRule::YXYt: {
      auto phi = [&](const Matrix& Z) -> Matrix { return Y * Z * Y.transpose(); };
      const Matrix dM = loss.gradient(phi(X));
      return Finish(Y.transpose() * dM * Y,
                    EntrywiseFd([&](const Matrix& Z) { return loss(phi(Z)); }, X));
    }
    case MatrixRule::Inverse: {
      auto phi = [&](const Matrix& Z) -> Matrix { return Z.inverse(); };
      const Matrix M = phi(X);
      const Matrix dM = loss.gradient(M);
      return Finish(-M.transpose() * dM * M.transpose(),
                    EntrywiseFd([&](const Matrix& Z) { return loss(phi(Z)); }, X));
    }
    case MatrixRule::VectorChain: {
      const Vector x = X.col(0);
      const Matrix dm = loss.gradient(ChainMap(x, Y));
      return Finish(ChainJacobian(x, Y).transpose() * dm,
                    EntrywiseFd([&](const Matrix& z) { return loss(ChainMap(z.col(0), Y)); }, X));
    }
    case MatrixRule::ScalarTrace: {
      auto phi = [&](double s) -> Matrix { return X + s * Y + s * s * Y * Y; };
      const double analytic = (Y.transpose() * loss.gradient(phi(0.0))).trace();
      const double h = 1e-5;
      const double numeric = (loss(phi(h)) - loss(phi(-h))) / (2.0 * h);
      return Finish(Matrix::Constant(1, 1, analytic), Matrix::Constant(1, 1, numeric));
    }
  }
  throw ContractError("unknown matrix rule");
}

double verify_matrix_rule(MatrixRule rule, int dim, std::mt19937_64& rng) {
  if (dim < 1 || dim > 8) throw ContractError("verify_matrix_rule supports 1 <= dim <= 8");
  QuadraticLoss loss;
  switch (rule) {
    case MatrixRule::XYXt: {
      // Symmetric Y and symmetric dL/dM are the rule's assumptions.
      loss.C = RandomSymmetric(dim, rng);
      loss.W = RandomSpd(dim, rng) / dim;
      return check_matrix_rule(rule, RandomMatrix(dim, dim, rng),
                               RandomSpd(dim, rng), loss).max_rel_error;
    }
    case MatrixRule::YXYt: {
      loss.C = RandomMatrix(dim, dim, rng);
      loss.W = RandomSpd(dim, rng) / dim;
      return check_matrix_rule(rule, RandomMatrix(dim, dim, rng),
                               RandomMatrix(dim, dim, rng), loss).max_rel_error;
    }
    case MatrixRule::Inverse: {
      loss.C = RandomMatrix(dim, dim, rng);
      loss.W = RandomSpd(dim, rng) / dim;
      // Well conditioned: identity-dominated
      const Matrix X = 2.0 * Matrix::Identity(dim, dim) + 0.3 * RandomMatrix(dim, dim, rng) / std::sqrt(dim);
      return check_matrix_rule(rule, X, Matrix(), loss).max_rel_error;
    }
    case MatrixRule::VectorChain: {
      loss.C = RandomMatrix(dim, 1, rng);
      loss.W = RandomSpd(dim, rng) / dim;
      return check_matrix_rule(rule, RandomMatrix(dim, 1, rng), RandomMatrix(dim, dim, rng),
                               loss).max_rel_error;
    }
    case MatrixRule::ScalarTrace: {
      loss.C = RandomMatrix(dim, dim, rng);
      loss.W = RandomSpd(dim, rng) / dim;
      return check_matrix_rule(rule, RandomMatrix(dim, dim, rng), RandomMatrix(dim, dim, rng),
                               loss).max_rel_error;
    }
  }
  throw ContractError("unknown matrix rule");
}

}  // namespace covgrad
