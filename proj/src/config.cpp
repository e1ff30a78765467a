#include "covgrad/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <sstream>

#include "covgrad/errors.hpp"

namespace covgrad {
namespace {

using Setter = std::function<void(RunConfig&, const std::string&)>;

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double ParseDouble(const std::string& text) {
  const std::string t = Trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + t + "'");
  }
  if (used != t.size()) throw ConfigError("expected a number, got '" + t + "'");
  return v;
}

long long ParseInt(const std::string& text) {
  const double v = ParseDouble(text);
  if (v != static_cast<double>(static_cast<long long>(v))) {
    throw ConfigError("expected an integer, got '" + Trim(text) + "'");
  }
  return static_cast<long long>(v);
}

bool ParseBool(const std::string& text) {
  const std::string t = Trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError("expected a boolean, got '" + t + "'");
}

Vector ParseVector(const std::string& text, Eigen::Index expected) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) values.push_back(ParseDouble(item));
  if (static_cast<Eigen::Index>(values.size()) != expected) {
    throw ConfigError("expected " + std::to_string(expected) + " comma-separated values, got " +
                      std::to_string(values.size()));
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

Matrix DiagSquared(const Vector& std_dev) { return std_dev.array().square().matrix().asDiagonal(); }

const std::map<std::string, Setter>& Schema() {
  static const std::map<std::string, Setter> schema = {
      {"model.wheelbase", [](RunConfig& c, const std::string& v) { c.model.params.wheelbase = ParseDouble(v); }},
      {"model.dt", [](RunConfig& c, const std::string& v) { c.model.params.dt = ParseDouble(v); }},
      {"model.process_noise_std", [](RunConfig& c, const std::string& v) { c.model.params.Q = DiagSquared(ParseVector(v, 2)); }},
      {"model.gps_noise_std", [](RunConfig& c, const std::string& v) { c.model.params.R = DiagSquared(ParseVector(v, 2)); }},
      {"model.u_min", [](RunConfig& c, const std::string& v) { c.model.params.u_min = ParseVector(v, 2); }},
      {"model.u_max", [](RunConfig& c, const std::string& v) { c.model.params.u_max = ParseVector(v, 2); }},
      {"model.rate_max", [](RunConfig& c, const std::string& v) { c.model.params.du_max = ParseVector(v, 2); }},
      {"model.initial_std", [](RunConfig& c, const std::string& v) { c.model.initial_std = ParseVector(v, 5); }},
      {"model.initial_state", [](RunConfig& c, const std::string& v) { c.model.initial_state = ParseVector(v, 5); }},
      {"model.true_lever_arm", [](RunConfig& c, const std::string& v) { c.model.true_lever_arm = ParseVector(v, 2); }},
      {"loss.kind", [](RunConfig& c, const std::string& v) {
         try {
           c.loss.kind = ParseLossKind(Trim(v));
         } catch (const ContractError& e) {
           throw ConfigError(e.what());
         }
       }},
      {"loss.schatten_power", [](RunConfig& c, const std::string& v) { c.loss.schatten_power = ParseDouble(v); }},
      {"planner.horizon", [](RunConfig& c, const std::string& v) { c.planner.horizon = static_cast<int>(ParseInt(v)); }},
      {"planner.max_iters", [](RunConfig& c, const std::string& v) { c.planner.optimizer.max_iters = static_cast<int>(ParseInt(v)); }},
      {"planner.tolerance", [](RunConfig& c, const std::string& v) { c.planner.optimizer.tolerance = ParseDouble(v); }},
      {"planner.patience", [](RunConfig& c, const std::string& v) { c.planner.optimizer.patience = static_cast<int>(ParseInt(v)); }},
      {"planner.armijo_c1", [](RunConfig& c, const std::string& v) { c.planner.optimizer.armijo_c1 = ParseDouble(v); }},
      {"planner.max_halvings", [](RunConfig& c, const std::string& v) { c.planner.optimizer.max_halvings = static_cast<int>(ParseInt(v)); }},
      {"planner.alpha0", [](RunConfig& c, const std::string& v) { c.planner.optimizer.alpha0 = ParseDouble(v); }},
      {"planner.verify_gradients", [](RunConfig& c, const std::string& v) { c.planner.optimizer.verify_gradients = ParseBool(v); }},
      {"planner.seed", [](RunConfig& c, const std::string& v) { c.planner.seed = static_cast<std::uint64_t>(ParseInt(v)); }},
      {"planner.smoothing_window", [](RunConfig& c, const std::string& v) { c.planner.smoothing_window = static_cast<int>(ParseInt(v)); }},
      {"planner.corridor_max_distance", [](RunConfig& c, const std::string& v) { c.planner.corridor_max_distance = ParseDouble(v); }},
      {"planner.corridor_weight", [](RunConfig& c, const std::string& v) { c.planner.corridor_weight = ParseDouble(v); }},
      {"simulate.trials", [](RunConfig& c, const std::string& v) { c.simulate.trials = static_cast<int>(ParseInt(v)); }},
      {"simulate.base_seed", [](RunConfig& c, const std::string& v) { c.simulate.base_seed = static_cast<std::uint64_t>(ParseInt(v)); }},
      {"simulate.threads", [](RunConfig& c, const std::string& v) { c.simulate.threads = static_cast<int>(ParseInt(v)); }},
      {"output.directory", [](RunConfig& c, const std::string& v) { c.output.directory = Trim(v); }},
      {"output.formats", [](RunConfig& c, const std::string& v) {
         c.output.csv = c.output.json = false;
         std::stringstream ss(v);
         std::string item;
         while (std::getline(ss, item, ',')) {
           item = Trim(item);
           if (item == "csv") c.output.csv = true;
           else if (item == "json") c.output.json = true;
           else throw ConfigError("unknown output format '" + item + "'");
         }
       }},
  };
  return schema;
}

void Apply(RunConfig& config, const std::string& section, const std::string& key,
           const std::string& value) {
  const std::string field = section + "." + key;
  const auto it = Schema().find(field);
  if (it == Schema().end()) throw ConfigError("unknown field [" + section + "] " + key);
  try {
    it->second(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError("field [" + section + "] " + key + ": " + e.what());
  }
}

void Finish(RunConfig& config) {
  try {
    config.Validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
}

}  // namespace

RunConfig RunConfig::Defaults() {
  RunConfig c;
  c.model.initial_std = Vector(5);
  c.model.initial_std << 5.0 * bicycle::kDeg, 10.0, 10.0, 1.0, 1.0;
  c.model.initial_state = Vector::Zero(5);
  c.model.true_lever_arm = Eigen::Vector2d(1.0, 0.0);
  return c;
}

void RunConfig::Validate() const {
  model.params.Validate();
  if (model.initial_std.size() != 5 || (model.initial_std.array() <= 0.0).any()) {
    throw ConfigError("field [model] initial_std: needs 5 positive values");
  }
  if (model.initial_state.size() != 5) throw ConfigError("field [model] initial_state: needs 5 values");
  if (model.true_lever_arm.size() != 2) throw ConfigError("field [model] true_lever_arm: needs 2 values");
  if (loss.kind == LossKind::Schatten && !(loss.schatten_power >= 1.0)) {
    throw ConfigError("field [loss] schatten_power: must be >= 1");
  }
  if (planner.horizon < 1) throw ConfigError("field [planner] horizon: must be >= 1");
  if (planner.optimizer.max_iters < 0) throw ConfigError("field [planner] max_iters: must be >= 0");
  if (!(planner.optimizer.tolerance >= 0.0)) throw ConfigError("field [planner] tolerance: must be >= 0");
  if (planner.optimizer.patience < 1) throw ConfigError("field [planner] patience: must be >= 1");
  if (!(planner.optimizer.armijo_c1 > 0.0 && planner.optimizer.armijo_c1 < 1.0)) {
    throw ConfigError("field [planner] armijo_c1: must be in (0, 1)");
  }
  if (planner.optimizer.max_halvings < 0) throw ConfigError("field [planner] max_halvings: must be >= 0");
  if (!(planner.optimizer.alpha0 > 0.0)) throw ConfigError("field [planner] alpha0: must be positive");
  if (planner.smoothing_window < 1) throw ConfigError("field [planner] smoothing_window: must be >= 1");
  if (planner.corridor_max_distance > 0.0 && !(planner.corridor_weight > 0.0)) {
    throw ConfigError("field [planner] corridor_weight: must be positive");
  }
  if (simulate.trials < 1) throw ConfigError("field [simulate] trials: must be >= 1");
  if (output.directory.empty()) throw ConfigError("field [output] directory: must not be empty");
}

RunConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config syntax error at line " + std::to_string(e.line()) + ": " +
                      e.message());
  }
  RunConfig config = RunConfig::Defaults();
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("top-level key '" + section + "' outside a section");
    for (const auto& [key, value] : body) Apply(config, section, key, value.data());
  }
  Finish(config);
  return config;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

RunConfig load_json_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(path + ": top level must be an object");
  RunConfig config = RunConfig::Defaults();
  auto scalar = [](const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number()) {
      std::ostringstream os;
      os.precision(17);
      os << v.get<double>();
      return os.str();
    }
    throw ConfigError("unsupported JSON value " + v.dump());
  };
  try {
    for (const auto& [section, body] : doc.items()) {
      if (!body.is_object()) throw ConfigError("section '" + section + "' must be an object");
      for (const auto& [key, value] : body.items()) {
        std::string text;
        if (value.is_array()) {
          for (std::size_t i = 0; i < value.size(); ++i) text += (i ? "," : "") + scalar(value[i]);
        } else {
          text = scalar(value);
        }
        Apply(config, section, key, text);
      }
    }
    Finish(config);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return config;
}

void apply_seed_environment(RunConfig& config) {
  const char* env = std::getenv("COVGRAD_SEED");
  if (!env || !*env) return;
  try {
    const auto seed = static_cast<std::uint64_t>(ParseInt(env));
    config.planner.seed = seed;
    config.simulate.base_seed = seed;
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("COVGRAD_SEED: ") + e.what());
  }
}

std::shared_ptr<BicycleModel> make_model(const RunConfig& config) {
  return std::make_shared<BicycleModel>(config.model.params);
}

BeliefState initial_belief(const RunConfig& config) {
  return {config.model.initial_state, DiagSquared(config.model.initial_std)};
}

LossSpec make_loss(const RunConfig& config) {
  switch (config.loss.kind) {
    case LossKind::Trace:
      return LossSpec::Trace();
    case LossKind::NormalizedTrace:
      return LossSpec::NormalizedTrace(initial_belief(config).P);
    case LossKind::Schatten:
      return LossSpec::Schatten(config.loss.schatten_power);
  }
  throw ConfigError("unknown loss kind");
}

PlanProblem make_problem(const RunConfig& config, std::shared_ptr<const SystemModel> model) {
  PlanProblem p;
  p.initial = initial_belief(config);
  p.model = std::move(model);
  p.loss = make_loss(config);
  p.horizon = config.planner.horizon;
  const auto& bp = config.model.params;
  p.constraints = {bp.u_min, bp.u_max, bp.du_max * bp.dt};
  p.optimizer = config.planner.optimizer;
  p.smoothing_window = config.planner.smoothing_window;
  if (config.planner.corridor_max_distance > 0.0) {
    Corridor c;
    c.x_index = bicycle::kPx;
    c.y_index = bicycle::kPy;
    c.max_distance = config.planner.corridor_max_distance;
    c.weight = config.planner.corridor_weight;
    p.corridor = c;
  }
  return p;
}

Vector true_initial_state(const RunConfig& config) {
  Vector x = config.model.initial_state;
  x.segment<2>(bicycle::kLx) = config.model.true_lever_arm;
  return x;
}

MonteCarloOptions monte_carlo_options(const RunConfig& config) {
  MonteCarloOptions o;
  o.trials = config.simulate.trials;
  o.base_seed = config.simulate.base_seed;
  o.threads = config.simulate.threads;
  return o;
}

}  // namespace covgrad
