#ifndef COMPOSOPT_BENCH_EXPERIMENT_HPP
#define COMPOSOPT_BENCH_EXPERIMENT_HPP

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "composopt/bench/config.hpp"
#include "composopt/bench/csv.hpp"
#include "composopt/bench/registry.hpp"
#include "composopt/certify.hpp"
#include "json.hpp"

namespace composopt::bench {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Parameter sidecar: `<trace>.csv.params`, flat YAML with every constant the
// CSV-level audit needs.

struct TraceSidecar {
  std::string algorithm;
  std::string problem;
  std::uint64_t seed = 0;
  std::size_t K = 0;
  std::size_t tau = 0;
  bool verified = false;
  std::map<std::string, double> values;

  double get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) throw InvalidArgument("trace sidecar: missing '" + key + "'");
    return it->second;
  }
};

inline std::string sidecar_yaml(const TraceSidecar& s) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "algorithm" << YAML::Value << s.algorithm;
  out << YAML::Key << "problem" << YAML::Value << s.problem;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "K" << YAML::Value << s.K;
  out << YAML::Key << "tau" << YAML::Value << s.tau;
  out << YAML::Key << "verified" << YAML::Value << s.verified;
  for (const auto& [k, v] : s.values) out << YAML::Key << k << YAML::Value << v;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

inline TraceSidecar read_sidecar(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception&) {
    throw InvalidArgument("trace sidecar: cannot read '" + path + "'");
  }
  if (!root.IsMap()) throw InvalidArgument("trace sidecar: '" + path + "' is not a map");
  TraceSidecar s;
  for (const auto& kv : root) {
    const std::string key = kv.first.as<std::string>();
    if (key == "algorithm") s.algorithm = kv.second.as<std::string>();
    else if (key == "problem") s.problem = kv.second.as<std::string>();
    else if (key == "seed") s.seed = kv.second.as<std::uint64_t>();
    else if (key == "K") s.K = kv.second.as<std::size_t>();
    else if (key == "tau") s.tau = kv.second.as<std::size_t>();
    else if (key == "verified") s.verified = kv.second.as<bool>();
    else s.values[key] = kv.second.as<double>();
  }
  return s;
}

inline TraceSidecar scgm_sidecar(const std::string& problem, const ScgmTrace& trace) {
  const ScgmParams& p = trace.params;
  TraceSidecar s{"scgm", problem, trace.rng_seed, trace.K(), trace.tau, false, {}};
  s.values = {{"delta", p.delta}, {"epsilon", p.epsilon}, {"H_max", p.H_max},
              {"mu", p.mu},       {"C_v", p.C_v},         {"C", p.C},
              {"gamma", p.gamma}, {"Delta", p.Delta},     {"K_raw", p.K_raw},
              {"L_h", p.L_h},     {"L_g", p.L_g},         {"beta", p.beta},
              {"C_g", p.C_g},     {"lower_bound", p.lower_bound}};
  return s;
}

// ---------------------------------------------------------------------------
// Reports

inline json audit_json(const AuditReport& report) {
  json checks = json::array();
  for (const auto& c : report.checks) {
    json j = {{"name", c.name},           {"passed", c.passed},
              {"skipped", c.skipped},     {"instances", c.instances},
              {"failures", c.failures}};
    j["worst_margin"] = std::isfinite(c.worst_margin) ? json(c.worst_margin) : json(nullptr);
    if (c.failures) j["first_failure"] = c.first_failure;
    if (!c.note.empty()) j["note"] = c.note;
    checks.push_back(std::move(j));
  }
  return checks;
}

inline json vec_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline void print_audit(std::ostream& out, const AuditReport& report) {
  for (const auto& c : report.checks) {
    out << "  " << (c.skipped ? "SKIP" : c.passed ? "PASS" : "FAIL") << "  " << c.name;
    if (!c.skipped) {
      out << "  (" << c.instances << " instances";
      if (std::isfinite(c.worst_margin)) out << ", worst margin " << c.worst_margin;
      if (c.failures) out << ", " << c.failures << " failures, first at k = " << c.first_failure;
      out << ")";
    }
    if (!c.note.empty()) out << "  " << c.note;
    out << "\n";
  }
}

struct TrajectoryResult {
  std::uint64_t seed = 0;
  std::size_t K = 0;
  std::size_t tau = 0;
  std::string csv_path;
  bool audited = false;
  AuditReport audit;
  json certificate;
};

struct ExperimentReport {
  ExperimentConfig config;
  json parameters;
  std::vector<TrajectoryResult> trajectories;
  std::string summary_path;

  /// Every executed audit passed.
  bool passed() const {
    for (const auto& t : trajectories)
      if (t.audited && !t.audit.passed()) return false;
    return true;
  }
  int exit_code() const { return passed() ? 0 : 1; }
};

// ---------------------------------------------------------------------------
// PAGM setup

/// Resolved PAGM parameters: K from the config or from the theorem helper
/// with oracle-computed delta_0 and Delta_0 at the initial point.
struct PagmPlan {
  PagmParams params;
  PagmInitialOracle initial;
  std::optional<PagmBudget> budget;
};

inline PagmPlan plan_pagm(const PagmSetup& s, const ExperimentConfig& c) {
  PagmParamOptions options;
  options.theorem_mode = c.theorem_mode;
  PagmPlan plan;
  plan.initial = pagm_initial_oracle(s.problem, *c.mu, s.x1_0, s.x2_0, s.z_0);
  plan.params = derive_pagm_params(s.problem, *c.mu, *c.t, c.K.value_or(1), options);
  if (c.theorem_K) {
    plan.budget = pagm_theorem_budget(plan.params, plan.initial.delta0, plan.initial.Delta0,
                                      *c.C1, *c.C, *c.epsilon);
    plan.params.K = plan.budget->K;
  }
  return plan;
}

inline TraceSidecar pagm_sidecar(const std::string& problem, const PagmTrace& trace,
                                 const PagmPlan& plan, const ExperimentConfig& c) {
  const PagmParams& p = trace.params;
  TraceSidecar s{"pagm", problem, trace.rng_seed, trace.K(), trace.tau, trace.verified, {}};
  s.values = {{"mu", p.mu},       {"t", p.t},         {"rho", p.rho},
              {"c", p.c},         {"theta", p.theta}, {"L_mu", p.L_mu},
              {"gamma", p.gamma}, {"sigma", p.sigma}, {"epsilon", *c.epsilon},
              {"C1", *c.C1},      {"C", *c.C},        {"delta0", plan.initial.delta0},
              {"Delta0", plan.initial.Delta0}};
  return s;
}

// ---------------------------------------------------------------------------
// Experiment execution

namespace detail {

inline std::string trace_name(const ExperimentConfig& c, std::uint64_t seed) {
  return c.algorithm + "_" + c.problem + "_seed" + std::to_string(seed) + ".csv";
}

inline TrajectoryResult run_scgm_trajectory(const ScgmSetup& s, const ScgmParams& params,
                                            const ExperimentConfig& c, std::uint64_t seed,
                                            const std::filesystem::path& dir) {
  const ScgmTrace trace = run_scgm(s.problem, params, s.x1, seed);
  TrajectoryResult r;
  r.seed = seed;
  r.K = trace.K();
  r.tau = trace.tau;
  r.csv_path = (dir / trace_name(c, seed)).string();
  write_text(r.csv_path, to_csv(scgm_table(trace, c.timing)));
  write_text(r.csv_path + ".params", sidecar_yaml(scgm_sidecar(c.problem, trace)));
  r.audited = true;
  r.audit = audit_trace_scgm(s.problem, trace);
  const ScgmState& out = trace.output();
  const ScgmCertificate cert = scgm_certificate(s.problem, trace.params, out.x, out.v);
  r.certificate = {{"kind", "scgm"},
                   {"tau", trace.tau},
                   {"x", vec_json(cert.x)},
                   {"v", vec_json(cert.v)},
                   {"radius", cert.radius},
                   {"residual", cert.residual},
                   {"delta", params.delta},
                   {"epsilon", params.epsilon},
                   {"valid", cert.valid(params.delta, params.epsilon)}};
  if (std::isfinite(cert.witness_distance)) r.certificate["witness_distance"] = cert.witness_distance;
  return r;
}

inline TrajectoryResult run_pagm_trajectory(const PagmSetup& s, const PagmPlan& plan,
                                            const ExperimentConfig& c, std::uint64_t seed,
                                            const std::filesystem::path& dir) {
  PagmOptions options;
  options.verify = c.verify;
  PagmTrace trace = run_pagm(s.problem, plan.params, s.x1_0, s.x2_0, s.z_0, seed, options);
  // Outside verify mode only z^tau gets oracle proximal points, for the certificate.
  if (!trace.verified)
    trace.states.at(trace.tau - 1).oracle =
        pagm_oracle_at(s.problem, trace.params.mu, trace.state(trace.tau).z, nullptr, nullptr);
  TrajectoryResult r;
  r.seed = seed;
  r.K = trace.K();
  r.tau = trace.tau;
  r.csv_path = (dir / trace_name(c, seed)).string();
  write_text(r.csv_path, to_csv(pagm_table(s.problem, trace, c.timing)));
  write_text(r.csv_path + ".params", sidecar_yaml(pagm_sidecar(c.problem, trace, plan, c)));
  if (trace.verified) {
    r.audited = true;
    r.audit = audit_trace_pagm(s.problem, trace, {*c.C1, *c.C});
  } else {
    r.audit.add("pagm-audit").skipped = true;
    r.audit.checks.back().note = "requires verify mode";
  }
  const DcCertificate cert = dc_certificate(trace);
  r.certificate = {{"kind", "dc"},
                   {"tau", cert.tau},
                   {"x", vec_json(cert.x)},
                   {"x_prime", vec_json(cert.x_prime)},
                   {"x_dprime", vec_json(cert.x_dprime)},
                   {"gap_xi", cert.gap_xi},
                   {"gap_prime", cert.gap_prime},
                   {"gap_dprime", cert.gap_dprime},
                   {"epsilon", *c.epsilon},
                   {"valid", cert.valid(*c.epsilon)}};
  return r;
}

template <typename Fn>
std::vector<TrajectoryResult> run_all(const ExperimentConfig& c, Fn&& one) {
  // Each trajectory writes its own files; results are joined in seed order.
  std::vector<std::future<TrajectoryResult>> jobs;
  for (std::size_t j = 0; j < c.trajectories; ++j)
    jobs.push_back(std::async(std::launch::async, one, c.seed + j));
  std::vector<TrajectoryResult> out;
  for (auto& f : jobs) out.push_back(f.get());
  return out;
}

}  // namespace detail

inline json config_json(const ExperimentConfig& c) {
  json j = {{"algorithm", c.algorithm}, {"problem", c.problem}, {"seed", c.seed},
            {"trajectories", c.trajectories}, {"verify", c.verify}, {"timing", c.timing}};
  auto opt = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  opt("delta", c.delta);
  opt("epsilon", c.epsilon);
  opt("mu", c.mu);
  opt("t", c.t);
  opt("H_max", c.H_max);
  opt("C", c.C);
  opt("C1", c.C1);
  if (c.K) j["K"] = *c.K;
  if (c.theorem_K) j["theorem_K"] = true;
  return j;
}

/// Runs every trajectory, writes one CSV and sidecar per trajectory and a
/// summary.json into `config.out`. The config must already be validated.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  ExperimentReport report;
  report.config = config;
  const RegistryEntry entry = find_problem(config.problem);
  const std::filesystem::path dir(config.out);
  std::filesystem::create_directories(dir);

  if (config.algorithm == "scgm") {
    const ScgmSetup& s = *entry.scgm;
    const ScgmParams params =
        derive_scgm_params(s.problem, s.x1, *config.delta, *config.epsilon, config.H_max);
    report.parameters = json::object();
    ScgmTrace shape;
    shape.params = params;
    for (const auto& [k, v] : scgm_sidecar(config.problem, shape).values)
      report.parameters[k] = v;
    report.parameters["K"] = params.K;
    report.trajectories = detail::run_all(config, [&](std::uint64_t seed) {
      return detail::run_scgm_trajectory(s, params, config, seed, dir);
    });
  } else {
    const PagmSetup& s = *entry.pagm;
    const PagmPlan plan = plan_pagm(s, config);
    report.parameters = json::object();
    PagmTrace shape;
    shape.params = plan.params;
    for (const auto& [k, v] : pagm_sidecar(config.problem, shape, plan, config).values)
      report.parameters[k] = v;
    report.parameters["K"] = plan.params.K;
    if (plan.budget) {
      report.parameters["K_raw"] = plan.budget->K_raw;
      report.parameters["K_terms"] = plan.budget->terms;
    }
    report.trajectories = detail::run_all(config, [&](std::uint64_t seed) {
      return detail::run_pagm_trajectory(s, plan, config, seed, dir);
    });
  }

  json traj = json::array();
  for (const auto& t : report.trajectories) {
    traj.push_back({{"seed", t.seed},
                    {"K", t.K},
                    {"tau", t.tau},
                    {"csv", std::filesystem::path(t.csv_path).filename().string()},
                    {"audited", t.audited},
                    {"audit_passed", t.audit.passed()},
                    {"audit", audit_json(t.audit)},
                    {"certificate", t.certificate}});
  }
  const json summary = {{"config", config_json(config)},
                        {"parameters", report.parameters},
                        {"passed", report.passed()},
                        {"trajectories", traj}};
  report.summary_path = (dir / "summary.json").string();
  write_text(report.summary_path, summary.dump(2) + "\n");
  return report;
}

inline void print_experiment(std::ostream& out, const ExperimentReport& r) {
  out << r.config.algorithm << " on " << r.config.problem << ": " << r.trajectories.size()
      << " trajectories, K = " << (r.trajectories.empty() ? 0 : r.trajectories.front().K) << "\n";
  for (const auto& t : r.trajectories) {
    out << "seed " << t.seed << "  tau " << t.tau << "  certificate "
        << (t.certificate.value("valid", false) ? "valid" : "not within target") << "  -> "
        << t.csv_path << "\n";
    print_audit(out, t.audit);
  }
  out << "summary: " << r.summary_path << "\n"
      << (r.passed() ? "all audits passed" : "AUDIT FAILURE") << "\n";
}

// ---------------------------------------------------------------------------
// Audit of a serialized trace

/// Re-checks the inequalities that are expressible in the CSV columns and the
/// sidecar constants. Uses the same tolerance as the in-memory audit.
inline AuditReport audit_csv(const TraceTable& t, const TraceSidecar& s, Tolerance tol = {}) {
  AuditReport report;
  const std::size_t rows = t.rows.size();
  require(rows >= 2, "audit: trace needs at least two rows");
  require(s.K + 1 == rows, "audit: sidecar K does not match the number of rows");
  const std::size_t K = rows - 1;
  const double Kd = static_cast<double>(K);

  if (s.algorithm == "scgm") {
    require(t.header == scgm_csv_header(), "audit: unexpected scgm header");
    const double mu = s.get("mu"), C = s.get("C"), gamma = s.get("gamma");
    auto& descent = report.add("descent");
    for (std::size_t i = 0; i < K; ++i) {
      const double step = t.value(i, "step_norm");
      const double lhs = t.value(i + 1, "envelope");
      const double rhs = t.value(i, "envelope") - C / (2.0 * mu) * step * step;
      descent.record(lhs, rhs, tol.slack(lhs, rhs), i + 1);
    }
    auto& average = report.add("telescoped-average");
    double sum = 0.0;
    for (std::size_t i = 0; i < K; ++i) sum += sq(t.value(i, "residual"));
    const double rhs = 4.0 * s.get("Delta") * gamma / Kd;
    average.record(sum / Kd, rhs, tol.slack(sum / Kd, rhs), K);
    auto& radius = report.add("radius");
    const double r_max = 2.0 * mu * s.get("L_h");
    for (std::size_t i = 0; i < rows; ++i)
      radius.record(t.value(i, "radius"), r_max, tol.slack(t.value(i, "radius"), r_max), i + 1);
    auto& hmax = report.add("h-max");
    const double H = s.get("H_max");
    for (std::size_t i = 0; i < rows; ++i)
      hmax.record(t.value(i, "obj"), H, tol.slack(t.value(i, "obj"), H), i + 1);
    return report;
  }

  require(s.algorithm == "pagm", "audit: unknown algorithm '" + s.algorithm + "'");
  require(t.header == pagm_csv_header(), "audit: unexpected pagm header");
  if (!s.verified) {
    auto& c = report.add("pagm-audit");
    c.skipped = true;
    c.note = "trace was not produced in verify mode";
    return report;
  }
  const double mu = s.get("mu"), theta = s.get("theta"), gamma = s.get("gamma");
  const double drop = t.value(0, "fmu") - t.value(K, "fmu");
  auto& tele = report.add("telescoped-bound");
  if (gamma > 0.0) {
    double sum = 0.0;
    for (std::size_t i = 0; i < K; ++i) sum += t.value(i, "Delta_k") + t.value(i, "delta_k");
    const double lhs = sum / Kd;
    const double rhs = (147.0 * s.get("delta0") / (theta * theta) + 7.0 * s.get("Delta0") +
                        49.0 * t.value(K - 1, "Delta_k") + 32.0 * mu * mu * drop / gamma) /
                       Kd;
    tele.record(lhs, rhs, tol.slack(lhs, rhs), K);
  } else {
    tele.skipped = true;
    tele.note = "gamma = 0";
  }
  auto& dk = report.add("Delta_K-bound");
  const double bound = 8.0 * mu * s.get("C1");
  dk.record(t.value(K - 1, "Delta_k"), bound, tol.slack(t.value(K - 1, "Delta_k"), bound), K);
  auto& cb = report.add("C-bound");
  cb.record(drop, s.get("C"), tol.slack(drop, s.get("C")), K);
  return report;
}

inline AuditReport audit_trace_file(const std::string& csv_path) {
  return audit_csv(read_csv(csv_path), read_sidecar(csv_path + ".params"));
}

// ---------------------------------------------------------------------------
// Complexity scaling (SCGM)

struct ScalingRow {
  double epsilon = 0.0;
  std::size_t K_theory = 0;
  std::optional<std::size_t> first_hit;  // first k with sqrt(mean_{j<=k} res_j^2) <= eps
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  double slope_theory = 0.0;     // least-squares slope of log K_theory vs log eps
  double slope_empirical = 0.0;  // same for the first-hit index (NaN if any miss)
  std::string csv_path;

  bool within_theory() const {
    for (const auto& r : rows)
      if (!r.first_hit || *r.first_hit > r.K_theory) return false;
    return true;
  }
};

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// One trajectory per epsilon (seed = config.seed); the iterates do not depend
/// on epsilon, only the budget does.
inline ScalingReport scaling_study(const ExperimentConfig& config) {
  if (config.algorithm != "scgm")
    throw ConfigError("scaling: only scgm problems are supported");
  std::vector<double> grid = config.epsilon_grid;
  if (grid.size() < 3) throw ConfigError("scaling: epsilon_grid needs at least 3 values");
  std::sort(grid.begin(), grid.end(), std::greater<>());
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] == grid[i - 1]) throw ConfigError("scaling: epsilon_grid has duplicates");

  const ScgmSetup s = *find_problem(config.problem).scgm;
  ScalingReport report;
  std::vector<double> eps, kt, kh;
  bool all_hit = true;
  for (double e : grid) {
    const ScgmParams p = derive_scgm_params(s.problem, s.x1, *config.delta, e, config.H_max);
    const ScgmTrace trace = run_scgm(s.problem, p, s.x1, config.seed);
    ScalingRow row{e, p.K, std::nullopt};
    double sum = 0.0;
    for (std::size_t k = 1; k <= trace.K(); ++k) {
      sum += sq(trace.state(k).residual());
      if (std::sqrt(sum / static_cast<double>(k)) <= e) {
        row.first_hit = k;
        break;
      }
    }
    eps.push_back(e);
    kt.push_back(static_cast<double>(p.K));
    if (row.first_hit) kh.push_back(static_cast<double>(*row.first_hit));
    else all_hit = false;
    report.rows.push_back(row);
  }
  report.slope_theory = loglog_slope(eps, kt);
  report.slope_empirical = all_hit ? loglog_slope(eps, kh) : std::nan("");

  std::filesystem::create_directories(config.out);
  TraceTable t;
  t.header = {"epsilon", "K_theory", "first_hit", "log_epsilon", "log_K_theory", "log_first_hit"};
  for (const auto& r : report.rows) {
    Cell hit, log_hit;
    if (r.first_hit) {
      hit = static_cast<double>(*r.first_hit);
      log_hit = std::log(*hit);
    }
    t.rows.push_back({r.epsilon, static_cast<double>(r.K_theory), hit, std::log(r.epsilon),
                      std::log(static_cast<double>(r.K_theory)), log_hit});
  }
  // The first column is epsilon, not an integer index.
  std::ostringstream csv;
  for (std::size_t i = 0; i < t.header.size(); ++i) csv << (i ? "," : "") << t.header[i];
  csv << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) csv << (i ? "," : "") << format_cell(row[i]);
    csv << '\n';
  }
  report.csv_path = (std::filesystem::path(config.out) / "scaling.csv").string();
  write_text(report.csv_path, csv.str());
  return report;
}

inline void print_scaling(std::ostream& out, const ScalingReport& r) {
  out << "epsilon        K_theory    first_hit   log(eps)     log(K)      log(hit)\n";
  char buf[160];
  for (const auto& row : r.rows) {
    const double lk = std::log(static_cast<double>(row.K_theory));
    if (row.first_hit)
      std::snprintf(buf, sizeof buf, "%-14.6g %-11zu %-11zu %-12.6f %-11.6f %-11.6f\n",
                    row.epsilon, row.K_theory, *row.first_hit, std::log(row.epsilon), lk,
                    std::log(static_cast<double>(*row.first_hit)));
    else
      std::snprintf(buf, sizeof buf, "%-14.6g %-11zu %-11s %-12.6f %-11.6f %-11s\n", row.epsilon,
                    row.K_theory, "-", std::log(row.epsilon), lk, "-");
    out << buf;
  }
  out << "slope of log K_theory vs log eps: " << r.slope_theory << " (expected -2)\n"
      << "slope of log first_hit vs log eps: " << r.slope_empirical << "\n"
      << (r.within_theory() ? "every first hit is within the theoretical K"
                            : "a first hit exceeds the theoretical K")
      << "\ntable: " << r.csv_path << "\n";
}

}  // namespace composopt::bench

#endif  // COMPOSOPT_BENCH_EXPERIMENT_HPP
