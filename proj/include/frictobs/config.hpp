#pragma once

// Flat key=value configuration with dotted section prefixes:
//
//   # comment
//   plant.m = 0.052
//   friction.sigma = 0.3
//   scenario.pulses = 0.1:0.005:2.0; 1.1:0.005:-1.5
//
// Sections: plant, friction (generating model), model (nominal model used by
// the observer and the open-loop predictor; defaults to friction), observer,
// sim, scenario, ident.

#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "frictobs/csv.hpp"
#include "frictobs/friction.hpp"
#include "frictobs/gain_design.hpp"
#include "frictobs/ident.hpp"
#include "frictobs/plant.hpp"

namespace frictobs {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ObserverSettings {
  std::pair<double, double> poles{-350.0, -10.0};
  std::optional<ObserverGains> gains;  // overrides poles when set
  double deadband = kDefaultDeadband;
};

struct IdentSettings {
  std::optional<Theta> theta0;
  std::optional<Theta> lower;
  std::optional<Theta> upper;
  std::optional<double> pulse_start;
  int max_iterations = 2000;
  double tolerance = 1e-8;
};

struct Config {
  PlantParams plant;
  FrictionParams friction;
  FrictionParams model;
  ObserverSettings observer;
  SimConfig sim;
  ImpulseTrain scenario;
  IdentSettings ident;

  /// Gains from the explicit setting or by placing the poles for the model.
  ObserverGains observer_gains() const {
    if (observer.gains) return *observer.gains;
    return design_gains(observer.poles, plant.m, model.sigma_over_beta());
  }
};

/// Five rectangular pulses one second apart, alternating in direction.
inline ImpulseTrain default_scenario() {
  return {{{0.1, 0.005, 2.0}, {1.1, 0.005, 1.5}, {2.1, 0.005, -2.0}, {3.1, 0.005, 1.0},
           {4.1, 0.005, -1.5}}};
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_number(const std::string& key, const std::string& text) {
  double v = 0.0;
  if (!csv::parse_double(trim(text), v)) {
    throw ConfigError("key '" + key + "': not a number: '" + text + "'");
  }
  return v;
}

inline std::vector<double> to_list(const std::string& key, const std::string& text, char sep,
                                   std::size_t expected) {
  std::vector<double> out;
  for (auto part : csv::split(text, sep)) out.push_back(to_number(key, std::string(part)));
  if (expected && out.size() != expected) {
    throw ConfigError("key '" + key + "': expected " + std::to_string(expected) + " values, got " +
                      std::to_string(out.size()));
  }
  return out;
}

inline Theta to_theta(const std::string& key, const std::string& text) {
  const auto v = to_list(key, text, ',', kThetaSize);
  return {v[0], v[1], v[2], v[3], v[4]};
}

inline ImpulseTrain to_pulses(const std::string& key, const std::string& text) {
  ImpulseTrain train;
  if (trim(text).empty()) return train;
  for (auto item : csv::split(text, ';')) {
    const auto v = to_list(key, std::string(item), ':', 3);
    train.pulses.push_back({v[0], v[1], v[2]});
  }
  return train;
}

}  // namespace detail

/// Parses configuration text. Unknown keys and invalid values throw ConfigError.
inline Config parse_config(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }

  Config cfg;
  cfg.scenario = default_scenario();
  std::map<std::string, std::string> model_kv;
  bool friction_kappa = false;

  for (const auto& [key, value] : kv) {
    auto num = [&] { return detail::to_number(key, value); };
    if (key == "plant.m") cfg.plant.m = num();
    else if (key == "friction.c_f") cfg.friction.c_f = num();
    else if (key == "friction.sigma") cfg.friction.sigma = num();
    else if (key == "friction.beta") cfg.friction.beta = num();
    else if (key == "friction.s_scale") cfg.friction.s_scale = num();
    else if (key == "friction.z_floor") cfg.friction.z_floor = num();
    else if (key == "friction.kappa") { cfg.friction.kappa = num(); friction_kappa = true; }
    else if (key.rfind("model.", 0) == 0) model_kv[key] = value;
    else if (key == "observer.poles") {
      const auto p = detail::to_list(key, value, ',', 2);
      cfg.observer.poles = {p[0], p[1]};
    } else if (key == "observer.gains") {
      const auto g = detail::to_list(key, value, ',', 2);
      cfg.observer.gains = ObserverGains{g[0], g[1]};
    } else if (key == "observer.deadband") cfg.observer.deadband = num();
    else if (key == "sim.dt") cfg.sim.dt = num();
    else if (key == "sim.t_end") cfg.sim.t_end = num();
    else if (key == "sim.noise_std") cfg.sim.noise_std = num();
    else if (key == "sim.quant") cfg.sim.quant = num();
    else if (key == "sim.seed") {
      const double s = num();
      if (s < 0 || s != static_cast<double>(static_cast<unsigned long long>(s))) {
        throw ConfigError("key 'sim.seed': expected a non-negative integer");
      }
      cfg.sim.seed = static_cast<unsigned long long>(s);
    } else if (key == "sim.v_max") cfg.sim.v_max = num();
    else if (key == "sim.deadband") cfg.sim.deadband = num();
    else if (key == "scenario.pulses") cfg.scenario = detail::to_pulses(key, value);
    else if (key == "ident.theta0") cfg.ident.theta0 = detail::to_theta(key, value);
    else if (key == "ident.lower") cfg.ident.lower = detail::to_theta(key, value);
    else if (key == "ident.upper") cfg.ident.upper = detail::to_theta(key, value);
    else if (key == "ident.pulse_start") cfg.ident.pulse_start = num();
    else if (key == "ident.max_iterations") cfg.ident.max_iterations = static_cast<int>(num());
    else if (key == "ident.tolerance") cfg.ident.tolerance = num();
    else throw ConfigError("unknown key '" + key + "'");
  }
  if (!friction_kappa) {
    cfg.friction.kappa = default_kappa(cfg.friction.s_scale, cfg.friction.c_f, cfg.friction.z_floor);
  }

  cfg.model = cfg.friction;
  bool model_kappa = false;
  bool model_shape = false;  // s_scale, c_f or z_floor overridden
  for (const auto& [key, value] : model_kv) {
    const double v = detail::to_number(key, value);
    if (key == "model.c_f") { cfg.model.c_f = v; model_shape = true; }
    else if (key == "model.sigma") cfg.model.sigma = v;
    else if (key == "model.beta") cfg.model.beta = v;
    else if (key == "model.s_scale") { cfg.model.s_scale = v; model_shape = true; }
    else if (key == "model.z_floor") { cfg.model.z_floor = v; model_shape = true; }
    else if (key == "model.kappa") { cfg.model.kappa = v; model_kappa = true; }
    else throw ConfigError("unknown key '" + key + "'");
  }
  if (model_shape && !model_kappa) {
    cfg.model.kappa = default_kappa(cfg.model.s_scale, cfg.model.c_f, cfg.model.z_floor);
  }

  try {
    cfg.plant.validate();
    cfg.friction.validate();
    cfg.model.validate();
    cfg.sim.validate();
    cfg.scenario.validate();
    if (!(cfg.observer.deadband >= 0.0)) throw std::invalid_argument("observer.deadband must be >= 0");
    if (!cfg.observer.gains && (!(cfg.observer.poles.first < 0.0) || !(cfg.observer.poles.second < 0.0))) {
      throw std::invalid_argument("observer.poles must be real and negative");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace frictobs
