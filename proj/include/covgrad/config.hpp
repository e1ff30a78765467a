#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "covgrad/bicycle_model.hpp"
#include "covgrad/errors.hpp"
#include "covgrad/loss.hpp"
#include "covgrad/montecarlo.hpp"
#include "covgrad/planner.hpp"

namespace covgrad {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ModelConfig {
  BicycleParams params = BicycleParams::Default();
  Vector initial_std;     // sqrt of diag(P0)
  Vector initial_state;   // x_hat_0
  Vector true_lever_arm;  // truth used by simulate; estimate starts at initial_state
};

struct LossConfig {
  LossKind kind = LossKind::NormalizedTrace;
  double schatten_power = kDefaultSchattenPower;
};

struct PlannerConfig {
  int horizon = 150;
  OptimizerOptions optimizer;
  std::uint64_t seed = 0;
  int smoothing_window = 15;
  double corridor_max_distance = 0.0;  // <= 0 disables the corridor
  double corridor_weight = 100.0;
};

struct SimulateConfig {
  int trials = 200;
  std::uint64_t base_seed = 1000;
  int threads = 0;
};

struct OutputConfig {
  std::string directory = "out";
  bool csv = true;
  bool json = true;
};

struct RunConfig {
  ModelConfig model;
  LossConfig loss;
  PlannerConfig planner;
  SimulateConfig simulate;
  OutputConfig output;

  // Defaults reproduce the bicycle/GPS lever-arm setup.
  static RunConfig Defaults();
  void Validate() const;
};

// Sectioned `key = value` text; vectors are comma-separated. Unknown sections
// or keys are errors. Syntax errors report the line, value errors the field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Same schema as nested JSON objects; vectors are arrays.
RunConfig load_json_config(const std::string& path);

// Applies COVGRAD_SEED (if set) to the planner and simulate seeds.
void apply_seed_environment(RunConfig& config);

std::shared_ptr<BicycleModel> make_model(const RunConfig& config);
BeliefState initial_belief(const RunConfig& config);
LossSpec make_loss(const RunConfig& config);
PlanProblem make_problem(const RunConfig& config, std::shared_ptr<const SystemModel> model);
Vector true_initial_state(const RunConfig& config);
MonteCarloOptions monte_carlo_options(const RunConfig& config);

}  // namespace covgrad
