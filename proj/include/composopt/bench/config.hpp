#ifndef COMPOSOPT_BENCH_CONFIG_HPP
#define COMPOSOPT_BENCH_CONFIG_HPP

// Flat YAML experiment configuration. Every key is optional except
// `problem`; unknown keys are rejected.
//
//   algorithm     scgm | pagm (defaults to the problem's algorithm)
//   problem       registry name or alias
//   d, m          optional dimension assertions against the registry entry
//   delta         SCGM target radius
//   epsilon       target tolerance
//   epsilon_grid  list of epsilons (scaling studies)
//   mu, t         PAGM smoothing and inner step
//   K             PAGM iteration budget
//   theorem_K     PAGM: derive K from the theorem helper (true/false)
//   theorem_mode  PAGM: additionally enforce mu <= min{1, 1/rho}
//   seed          first seed; trajectory j uses seed + j
//   trajectories  number of trajectories
//   verify        PAGM oracle mode (true/false)
//   out           output directory
//   H_max, C, C1  constant overrides
//   timing        fill the time_s column (breaks byte-level determinism)

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <cstdlib>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "composopt/bench/registry.hpp"

namespace composopt::bench {

struct ExperimentConfig {
  std::string algorithm;
  std::string problem;
  std::optional<long> d;
  std::optional<long> m;
  std::optional<double> delta;
  std::optional<double> epsilon;
  std::vector<double> epsilon_grid;
  std::optional<double> mu;
  std::optional<double> t;
  std::optional<std::size_t> K;
  bool theorem_K = false;
  bool theorem_mode = false;
  std::uint64_t seed = 1;
  std::size_t trajectories = 1;
  bool verify = false;
  std::string out = "out";
  std::optional<double> H_max;
  std::optional<double> C;
  std::optional<double> C1;
  bool timing = false;
};

class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

namespace detail {

inline const std::set<std::string>& config_keys() {
  static const std::set<std::string> keys = {
      "algorithm", "problem", "d",     "m",  "delta",      "epsilon", "epsilon_grid",
      "mu",        "t",       "K",     "theorem_K",       "theorem_mode", "seed",
      "trajectories", "verify", "out", "H_max", "C",      "C1",      "timing"};
  return keys;
}

template <typename T>
T scalar_as(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError("config: '" + key + "' must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError("config: '" + key + "' has an invalid value '" + node.Scalar() + "'");
  }
}

}  // namespace detail

/// Overrides the seed from COMPOSOPT_SEED when set.
inline void apply_environment(ExperimentConfig& config) {
  if (const char* env = std::getenv("COMPOSOPT_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0')
      throw ConfigError(std::string("COMPOSOPT_SEED is not an unsigned integer: '") + env + "'");
    config.seed = v;
  }
}

/// Fills defaults from the registry and re-checks every parameter
/// precondition by deriving the parameters once.
inline void validate_config(ExperimentConfig& config) {
  const RegistryEntry entry = find_problem(config.problem);
  config.problem = entry.name;
  if (config.algorithm.empty()) config.algorithm = entry.algorithm;
  if (config.algorithm != "scgm" && config.algorithm != "pagm")
    throw ConfigError("config: algorithm must be 'scgm' or 'pagm'");
  if (config.algorithm != entry.algorithm)
    throw ConfigError("config: problem '" + entry.name + "' is a " + entry.algorithm +
                      " problem");
  if (config.trajectories < 1) throw ConfigError("config: trajectories must be at least 1");
  const SmoothMap& g = *entry.maps().front();
  if (config.d && *config.d != g.dim_in)
    throw ConfigError("config: d = " + std::to_string(*config.d) + " but '" + entry.name +
                      "' has d = " + std::to_string(g.dim_in));
  if (config.m && *config.m != g.dim_out)
    throw ConfigError("config: m = " + std::to_string(*config.m) + " but '" + entry.name +
                      "' has m = " + std::to_string(g.dim_out));

  if (config.algorithm == "scgm") {
    const auto& s = *entry.scgm;
    if (!config.delta) config.delta = s.delta;
    if (!config.epsilon) config.epsilon = s.epsilon;
    if (config.mu || config.t || config.K || config.theorem_K || config.C || config.C1)
      throw ConfigError("config: mu, t, K, theorem_K, C, C1 apply to pagm only");
    derive_scgm_params(s.problem, s.x1, *config.delta, *config.epsilon, config.H_max);
    for (double e : config.epsilon_grid)
      derive_scgm_params(s.problem, s.x1, *config.delta, e, config.H_max);
  } else {
    const auto& s = *entry.pagm;
    if (config.delta || config.H_max)
      throw ConfigError("config: delta and H_max apply to scgm only");
    if (!config.mu) config.mu = s.mu;
    if (!config.t) config.t = default_inner_step(*config.mu, s.problem.rho);
    if (!config.epsilon) config.epsilon = s.epsilon;
    if (!config.C) config.C = s.C;
    if (!config.C1) config.C1 = s.C1;
    if (!config.K && !config.theorem_K) config.K = s.K;
    if (config.K && config.theorem_K)
      throw ConfigError("config: give either K or theorem_K, not both");
    if (config.K && *config.K < 1) throw ConfigError("config: K must be at least 1");
    PagmParamOptions options;
    options.theorem_mode = config.theorem_mode;
    derive_pagm_params(s.problem, *config.mu, *config.t, 1, options);
  }
}

inline ExperimentConfig parse_config(const YAML::Node& root) {
  if (!root.IsMap()) throw ConfigError("config: top level must be a key-value map");
  ExperimentConfig c;
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (!detail::config_keys().count(key)) throw ConfigError("config: unknown key '" + key + "'");
    const YAML::Node& v = kv.second;
    using detail::scalar_as;
    if (key == "algorithm") c.algorithm = scalar_as<std::string>(v, key);
    else if (key == "problem") c.problem = scalar_as<std::string>(v, key);
    else if (key == "d") c.d = scalar_as<long>(v, key);
    else if (key == "m") c.m = scalar_as<long>(v, key);
    else if (key == "delta") c.delta = scalar_as<double>(v, key);
    else if (key == "epsilon") c.epsilon = scalar_as<double>(v, key);
    else if (key == "epsilon_grid") {
      if (!v.IsSequence()) throw ConfigError("config: 'epsilon_grid' must be a list");
      for (const auto& e : v) c.epsilon_grid.push_back(scalar_as<double>(e, key));
    } else if (key == "mu") c.mu = scalar_as<double>(v, key);
    else if (key == "t") c.t = scalar_as<double>(v, key);
    else if (key == "K") {
      const long k = scalar_as<long>(v, key);
      if (k < 1) throw ConfigError("config: K must be at least 1");
      c.K = static_cast<std::size_t>(k);
    } else if (key == "theorem_K") c.theorem_K = scalar_as<bool>(v, key);
    else if (key == "theorem_mode") c.theorem_mode = scalar_as<bool>(v, key);
    else if (key == "seed") c.seed = scalar_as<std::uint64_t>(v, key);
    else if (key == "trajectories") {
      const long n = scalar_as<long>(v, key);
      if (n < 1) throw ConfigError("config: trajectories must be at least 1");
      c.trajectories = static_cast<std::size_t>(n);
    } else if (key == "verify") c.verify = scalar_as<bool>(v, key);
    else if (key == "out") c.out = scalar_as<std::string>(v, key);
    else if (key == "H_max") c.H_max = scalar_as<double>(v, key);
    else if (key == "C") c.C = scalar_as<double>(v, key);
    else if (key == "C1") c.C1 = scalar_as<double>(v, key);
    else if (key == "timing") c.timing = scalar_as<bool>(v, key);
  }
  if (c.problem.empty()) throw ConfigError("config: 'problem' is required");
  return c;
}

/// Parses, applies COMPOSOPT_SEED and validates.
inline ExperimentConfig load_config(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError("config: cannot read '" + path + "'");
  } catch (const YAML::ParserException& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  ExperimentConfig c = parse_config(root);
  apply_environment(c);
  validate_config(c);
  return c;
}

inline ExperimentConfig load_config_string(const std::string& text) {
  ExperimentConfig c = parse_config(YAML::Load(text));
  apply_environment(c);
  validate_config(c);
  return c;
}

}  // namespace composopt::bench

#endif  // COMPOSOPT_BENCH_CONFIG_HPP
