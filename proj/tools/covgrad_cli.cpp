// covgrad: plan, simulate, gradcheck and bench subcommands.
//
// Exit codes: 0 success, 1 input/config error, 2 infeasible input or
// line-search failure, 3 gradient check failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <random>

#include "covgrad/bench.hpp"
#include "covgrad/config.hpp"
#include "covgrad/csv_io.hpp"
#include "covgrad/gradcheck.hpp"
#include "covgrad/linear_model.hpp"
#include "covgrad/montecarlo.hpp"
#include "covgrad/planner.hpp"

namespace fs = std::filesystem;
using namespace covgrad;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitGradcheck = 3;

struct CommonOptions {
  std::string config_path;
  std::string json_config_path;
  std::string out_dir;
};

RunConfig LoadConfig(const CommonOptions& o) {
  RunConfig cfg;
  if (!o.json_config_path.empty()) {
    cfg = load_json_config(o.json_config_path);
  } else if (!o.config_path.empty()) {
    cfg = load_config(o.config_path);
  } else {
    cfg = RunConfig::Defaults();
  }
  apply_seed_environment(cfg);
  if (!o.out_dir.empty()) cfg.output.directory = o.out_dir;
  return cfg;
}

fs::path OutputDir(const RunConfig& cfg) {
  fs::path dir(cfg.output.directory);
  fs::create_directories(dir);
  return dir;
}

void WriteJson(const fs::path& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  out << std::setw(2) << doc << '\n';
}

// --- plan ------------------------------------------------------------------

struct PlanFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> loss;
  std::optional<double> schatten_power;
  std::optional<int> horizon;
  std::optional<int> max_iters;
};

int CmdPlan(const CommonOptions& common, const PlanFlags& flags) {
  RunConfig cfg = LoadConfig(common);
  if (flags.seed) cfg.planner.seed = *flags.seed;
  if (flags.loss) cfg.loss.kind = ParseLossKind(*flags.loss);
  if (flags.schatten_power) cfg.loss.schatten_power = *flags.schatten_power;
  if (flags.horizon) cfg.planner.horizon = *flags.horizon;
  if (flags.max_iters) cfg.planner.optimizer.max_iters = *flags.max_iters;
  cfg.Validate();

  const auto model = make_model(cfg);
  const PlanProblem problem = make_problem(cfg, model);
  const ControlSequence initial = sample_initial_controls(problem, cfg.planner.seed);
  const PlanResult result = optimize(problem, initial);

  const fs::path dir = OutputDir(cfg);
  if (cfg.output.csv) {
    write_controls_csv((dir / "initial_controls.csv").string(), initial);
    write_controls_csv((dir / "controls.csv").string(), result.controls);
    write_states_csv((dir / "states.csv").string(), result.states);
    write_loss_history_csv((dir / "loss_history.csv").string(), result.loss_history);
  }
  if (cfg.output.json) {
    WriteJson(dir / "plan_summary.json",
              {{"final_loss", result.final_loss},
               {"initial_loss", result.initial_loss},
               {"iterations", result.iterations},
               {"termination", ToString(result.termination)},
               {"feasible", result.feasible},
               {"loss", ToString(cfg.loss.kind)},
               {"horizon", cfg.planner.horizon},
               {"seed", cfg.planner.seed},
               {"corridor_violation", result.corridor_violation}});
  }
  std::cout << "plan: " << ToString(cfg.loss.kind) << " " << result.initial_loss << " -> "
            << result.final_loss << " in " << result.iterations << " iterations ("
            << ToString(result.termination) << ")\n";
  if (result.termination == Termination::LineSearchFailed ||
      result.termination == Termination::NumericalFailure) {
    std::cerr << "plan: " << result.message << '\n';
    return kExitInfeasible;
  }
  return kExitOk;
}

// --- simulate --------------------------------------------------------------

struct SimulateFlags {
  std::string controls_path;
  std::optional<int> trials;
  std::optional<std::uint64_t> base_seed;
  std::optional<int> threads;
};

int CmdSimulate(const CommonOptions& common, const SimulateFlags& flags) {
  RunConfig cfg = LoadConfig(common);
  if (flags.trials) cfg.simulate.trials = *flags.trials;
  if (flags.base_seed) cfg.simulate.base_seed = *flags.base_seed;
  if (flags.threads) cfg.simulate.threads = *flags.threads;
  cfg.Validate();

  const auto model = make_model(cfg);
  const ControlSequence controls = read_controls_csv(flags.controls_path, model->control_dim());
  cfg.planner.horizon = static_cast<int>(controls.size());
  const PlanProblem problem = make_problem(cfg, model);
  const int bad = first_violation(controls, problem.constraints);
  if (bad >= 0) {
    std::cerr << "simulate: controls violate the constraints at step " << bad + 1 << '\n';
    return kExitInfeasible;
  }

  const auto trials = run_trials(problem, controls, true_initial_state(cfg), monte_carlo_options(cfg));
  const ErrorSummary summary = aggregate(trials);
  const double lever = mean_final_error_norm(trials, {bicycle::kLx, bicycle::kLy});

  const fs::path dir = OutputDir(cfg);
  if (cfg.output.csv) {
    write_error_summary_csv((dir / "error_summary.csv").string(), summary);
    write_trace_history_csv((dir / "trace_history.csv").string(), summary);
  }
  if (cfg.output.json) {
    WriteJson(dir / "simulate_summary.json",
              {{"trials", summary.trials},
               {"mean_final_lever_arm_error", lever},
               {"mean_final_position_error", summary.mean_final_position_error},
               {"base_seed", cfg.simulate.base_seed}});
  }
  std::cout << "simulate: " << summary.trials << " trials, mean final lever-arm error " << lever
            << " m, mean final position error " << summary.mean_final_position_error << " m\n";
  return kExitOk;
}

// --- gradcheck -------------------------------------------------------------

struct GradcheckFlags {
  std::string model = "bicycle";
  int horizon = 10;
  double tol = 1e-4;
  std::optional<double> abs_floor;
  std::uint64_t seed = 7;
};

struct CheckRow {
  std::string name;
  double max_rel_error;
  bool passed;
  std::string where;
};

int CmdGradcheck(const CommonOptions& common, const GradcheckFlags& flags) {
  RunConfig cfg = LoadConfig(common);
  const double floor = flags.abs_floor.value_or(std::min(1e-8, flags.tol));
  std::vector<CheckRow> rows;

  std::mt19937_64 rng(flags.seed);
  for (MatrixRule rule : kAllMatrixRules) {
    double worst = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
      worst = std::max(worst, verify_matrix_rule(rule, 1 + draw % 8, rng));
    }
    rows.push_back({"rule " + ToString(rule), worst, worst < flags.tol, "-"});
  }

  std::shared_ptr<const SystemModel> model;
  BeliefState initial;
  LossSpec spec;
  ControlSequence controls;
  if (flags.model == "bicycle") {
    auto bike = make_model(cfg);
    cfg.planner.horizon = flags.horizon;
    PlanProblem problem = make_problem(cfg, bike);
    controls = sample_initial_controls(problem, flags.seed);
    initial = problem.initial;
    spec = problem.loss;
    model = bike;
  } else if (flags.model == "linear") {
    auto lin = std::make_shared<LinearModel>(LinearModel::Example());
    initial = {Vector::Zero(lin->state_dim()), Matrix::Identity(lin->state_dim(), lin->state_dim())};
    spec = LossSpec::Trace();
    std::normal_distribution<double> nd;
    for (int n = 0; n < flags.horizon; ++n) {
      controls.push_back(Vector::NullaryExpr(lin->control_dim(), [&] { return nd(rng); }));
    }
    model = lin;
  } else {
    throw ConfigError("unknown model '" + flags.model + "' (expected bicycle or linear)");
  }

  const GradientSet grads = backward_pass(forward_pass(initial, controls, *model), spec, *model);
  auto add = [&](const std::string& name, const Comparison& c, const char* row_label) {
    std::string where = "-";
    if (c.worst_row >= 0) {
      where = std::string("(") + row_label + "=" + std::to_string(c.worst_row + 1) +
              ", k=" + std::to_string(c.worst_col) + ")";
    }
    rows.push_back({name, c.max_rel_error, c.passed, where});
  };
  add("dL/du", compare(grads.dL_du, fd_gradient_controls(initial, controls, *model, spec),
                       flags.tol, floor), "n");
  add("dL/dQ", compare(grads.dL_dQ, fd_gradient_Q(initial, controls, *model, spec), flags.tol, floor), "n");
  add("dL/dR", compare(grads.dL_dR, fd_gradient_R(initial, controls, *model, spec), flags.tol, floor), "n");
  add("dL/dP0", compare(grads.dL_dP0, fd_gradient_P0(initial, controls, *model, spec), flags.tol, floor), "i");
  if (flags.model == "linear") {
    const double max_du = grads.dL_du.cwiseAbs().maxCoeff();
    rows.push_back({"|dL/du|_inf (linear)", max_du, max_du < 1e-9, "-"});
  }

  bool ok = true;
  std::cout << std::left << std::setw(24) << "check" << std::setw(16) << "max_rel_error"
            << std::setw(8) << "status" << "worst\n";
  for (const auto& r : rows) {
    ok = ok && r.passed;
    std::cout << std::left << std::setw(24) << r.name << std::setw(16) << std::setprecision(3)
              << std::scientific << r.max_rel_error << std::setw(8) << (r.passed ? "ok" : "FAIL")
              << r.where << '\n';
  }
  std::cout << std::defaultfloat;
  std::cout << "gradcheck: " << (ok ? "all checks below" : "FAILED at") << " tolerance "
            << flags.tol << '\n';
  return ok ? kExitOk : kExitGradcheck;
}

// --- bench -----------------------------------------------------------------

struct BenchFlags {
  std::optional<int> horizon;
  int repetitions = 20;
};

int CmdBench(const CommonOptions& common, const BenchFlags& flags) {
  RunConfig cfg = LoadConfig(common);
  if (flags.horizon) cfg.planner.horizon = *flags.horizon;
  cfg.Validate();
  const auto model = make_model(cfg);
  const PlanProblem problem = make_problem(cfg, model);
  const ControlSequence controls = sample_initial_controls(problem, cfg.planner.seed);
  const BenchReport report = run_bench(problem.initial, controls, *model, problem.loss, flags.repetitions);

  const fs::path dir = OutputDir(cfg);
  write_bench_csv((dir / "bench.csv").string(), report);
  std::cout << "bench: N=" << report.horizon << " analytical " << report.analytical.mean_seconds
            << " s (+/- " << report.analytical.std_seconds << "), finite differences "
            << report.finite_difference.mean_seconds << " s (+/- "
            << report.finite_difference.std_seconds << "), speedup " << report.speedup() << "x\n";
  return kExitOk;
}

void AddCommon(CLI::App* app, CommonOptions& o) {
  auto* cfg = app->add_option("--config", o.config_path, "Sectioned key = value config file");
  auto* json = app->add_option("--json-config", o.json_config_path, "JSON config file");
  cfg->excludes(json);
  app->add_option("--out", o.out_dir, "Output directory (overrides [output] directory)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Covariance-gradient EKF planning toolkit"};
  app.require_subcommand(1);

  CommonOptions plan_common, sim_common, check_common, bench_common;
  PlanFlags plan_flags;
  SimulateFlags sim_flags;
  GradcheckFlags check_flags;
  BenchFlags bench_flags;

  auto* plan = app.add_subcommand("plan", "Optimise a minimum-uncertainty control sequence");
  AddCommon(plan, plan_common);
  plan->add_option("--seed", plan_flags.seed, "Seed for the initial random controls");
  plan->add_option("--loss", plan_flags.loss, "trace | normalized_trace | schatten");
  plan->add_option("--schatten-power", plan_flags.schatten_power, "Schatten exponent");
  plan->add_option("--horizon", plan_flags.horizon, "Number of steps N");
  plan->add_option("--max-iters", plan_flags.max_iters, "Optimizer iteration cap");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo estimation-error study of a control sequence");
  AddCommon(sim, sim_common);
  sim->add_option("--controls", sim_flags.controls_path, "controls.csv to simulate")->required();
  sim->add_option("--trials", sim_flags.trials, "Number of trials");
  sim->add_option("--base-seed", sim_flags.base_seed, "Seed of trial 0");
  sim->add_option("--threads", sim_flags.threads, "Worker threads (0 = all cores)");

  auto* check = app.add_subcommand("gradcheck", "Compare analytical gradients with finite differences");
  AddCommon(check, check_common);
  check->add_option("--model", check_flags.model, "bicycle | linear");
  check->add_option("--horizon", check_flags.horizon, "Number of steps N");
  check->add_option("--tol", check_flags.tol, "Relative tolerance");
  check->add_option("--abs-floor", check_flags.abs_floor, "Absolute floor (default min(1e-8, tol))");
  check->add_option("--seed", check_flags.seed, "Seed for controls and random rule instances");

  auto* bench = app.add_subcommand("bench", "Time analytical vs finite-difference gradients");
  AddCommon(bench, bench_common);
  bench->add_option("--horizon", bench_flags.horizon, "Number of steps N");
  bench->add_option("--reps", bench_flags.repetitions, "Repetitions")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*plan) return CmdPlan(plan_common, plan_flags);
    if (*sim) return CmdSimulate(sim_common, sim_flags);
    if (*check) return CmdGradcheck(check_common, check_flags);
    if (*bench) return CmdBench(bench_common, bench_flags);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const CsvError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
