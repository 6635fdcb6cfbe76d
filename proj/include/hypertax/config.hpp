#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <unordered_set>

#include <json.hpp>

#include "hypertax/errors.hpp"
#include "hypertax/geometry.hpp"

namespace hypertax {

// Hyperparameters for one embedding run. Defaults are desk-scale; everything
// is overridable through the JSON config documented in the README.
struct TrainingConfig {
  std::size_t dim = 10;
  std::size_t epochs = 300;
  std::size_t burn_in_epochs = 10;   // run at learning_rate / 10
  double learning_rate = 0.3;
  std::size_t negatives_k = 50;      // negatives sampled per positive edge
  bool directed = true;              // edge-list treated as directed for sampling
  std::uint64_t seed = 42;
  double init_range = 1e-3;          // coordinates start uniform in [-r, r]
  double epsilon = kDefaultEpsilon;  // ball containment margin
  bool include_self_in_denominator = false;

  void validate() const {
    if (dim < 2) throw ConfigError("dim must be >= 2");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (burn_in_epochs > epochs) throw ConfigError("burn_in_epochs must be <= epochs");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw ConfigError("learning_rate must be a positive finite number");
    }
    if (negatives_k < 1) throw ConfigError("negatives_k must be >= 1");
    if (!(init_range > 0.0) || init_range >= 0.1) {
      throw ConfigError("init_range must be in (0, 0.1)");
    }
    if (!(epsilon > 0.0) || epsilon > 0.01) {
      throw ConfigError("epsilon must be in (0, 0.01]");
    }
  }

  static TrainingConfig from_json(const nlohmann::json& j) {
    TrainingConfig c = from_json_partial(j);
    c.validate();
    return c;
  }

  // Reads fields without cross-field validation. For configs that get fields
  // filled in later (sweep cells), which re-validate once complete.
  static TrainingConfig from_json_partial(const nlohmann::json& j) {
    static const std::unordered_set<std::string> known = {
        "dim",  "epochs",     "burn_in_epochs", "learning_rate", "negatives_k",
        "directed", "seed", "init_range",     "epsilon",       "include_self_in_denominator"};
    if (!j.is_object()) throw ConfigError("training config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      (void)value;
      if (!known.count(key)) throw ConfigError("unknown training config key: '" + key + "'");
    }
    TrainingConfig c;
    try {
      if (j.contains("dim")) c.dim = j.at("dim").get<std::size_t>();
      if (j.contains("epochs")) c.epochs = j.at("epochs").get<std::size_t>();
      if (j.contains("burn_in_epochs")) c.burn_in_epochs = j.at("burn_in_epochs").get<std::size_t>();
      if (j.contains("learning_rate")) c.learning_rate = j.at("learning_rate").get<double>();
      if (j.contains("negatives_k")) c.negatives_k = j.at("negatives_k").get<std::size_t>();
      if (j.contains("directed")) c.directed = j.at("directed").get<bool>();
      if (j.contains("seed")) c.seed = static_cast<std::uint64_t>(j.at("seed").get<std::int64_t>());
      if (j.contains("init_range")) c.init_range = j.at("init_range").get<double>();
      if (j.contains("epsilon")) c.epsilon = j.at("epsilon").get<double>();
      if (j.contains("include_self_in_denominator")) {
        c.include_self_in_denominator = j.at("include_self_in_denominator").get<bool>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("invalid training config value: ") + e.what());
    }
    return c;
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["dim"] = dim;
    j["epochs"] = epochs;
    j["burn_in_epochs"] = burn_in_epochs;
    j["learning_rate"] = learning_rate;
    j["negatives_k"] = negatives_k;
    j["directed"] = directed;
    j["seed"] = seed;
    j["init_range"] = init_range;
    j["epsilon"] = epsilon;
    j["include_self_in_denominator"] = include_self_in_denominator;
    return j;
  }
};

}  // namespace hypertax
