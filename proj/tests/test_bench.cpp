#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "composopt/bench/config.hpp"
#include "composopt/bench/csv.hpp"
#include "composopt/bench/experiment.hpp"
#include "composopt/bench/registry.hpp"

using namespace composopt;
using namespace composopt::bench;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("composopt_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

/// Unsets COMPOSOPT_SEED for the lifetime of the guard.
struct SeedEnvGuard {
  SeedEnvGuard() { unsetenv("COMPOSOPT_SEED"); }
  ~SeedEnvGuard() { unsetenv("COMPOSOPT_SEED"); }
};

int run_cli(const std::string& args, std::string* output = nullptr) {
  // ctest runs tests as parallel processes; one log per test.
  const std::string log = (fs::temp_directory_path() /
                           ("composopt_cli_" +
                            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) +
                            ".txt"))
                              .string();
  const std::string cmd = std::string(COMPOSOPT_CLI) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output) *output = slurp(log);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

// ---------------------------------------------------------------------------
// Registry

TEST(Registry, ShipsFourProblemsWithAliases) {
  const auto all = registry_problems();
  ASSERT_GE(all.size(), 4u);
  for (const char* alias : {"SCGM-1", "SCGM-2", "PAGM-1", "PAGM-2"})
    EXPECT_NO_THROW(find_problem(alias)) << alias;
  EXPECT_THROW(find_problem("nope"), InvalidArgument);
}

TEST(Registry, CappedTanhBoundIsSqrtTwo) {
  EXPECT_DOUBLE_EQ(capped_tanh().scgm->problem.g.C_g, std::sqrt(2.0));
}

TEST(Registry, DeclaredConstantsSurviveSampling) {
  for (const auto& e : registry_problems())
    for (const SmoothMap* g : e.maps()) {
      const auto r = validate_constants(*g, 2000, 3);
      EXPECT_GE(r.margin(), 0.0) << e.name;
      EXPECT_TRUE(r.passed()) << e.name;
    }
}

// ---------------------------------------------------------------------------
// Config

TEST(Config, ParsesAndFillsDefaults) {
  SeedEnvGuard guard;
  const auto c = load_config_string("problem: SCGM-1\ndelta: 0.1\nseed: 7\ntrajectories: 2\n");
  EXPECT_EQ(c.problem, "capped-tanh");
  EXPECT_EQ(c.algorithm, "scgm");
  EXPECT_DOUBLE_EQ(*c.delta, 0.1);
  EXPECT_DOUBLE_EQ(*c.epsilon, 0.5);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.trajectories, 2u);
}

TEST(Config, PagmDefaultsComeFromTheRegistry) {
  SeedEnvGuard guard;
  const auto c = load_config_string("problem: PAGM-2\n");
  EXPECT_EQ(c.algorithm, "pagm");
  EXPECT_DOUBLE_EQ(*c.mu, 0.5);
  EXPECT_DOUBLE_EQ(*c.t, default_inner_step(0.5, abs_diff_tanh_1d().pagm->problem.rho));
  EXPECT_EQ(*c.K, abs_diff_tanh_1d().pagm->K);
}

TEST(Config, RejectsUnknownKeys) {
  SeedEnvGuard guard;
  try {
    load_config_string("problem: SCGM-1\ngama: 3\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("gama"), std::string::npos);
  }
}

TEST(Config, RejectsInvalidValues) {
  SeedEnvGuard guard;
  EXPECT_THROW(load_config_string("delta: 0.2\n"), ConfigError);  // no problem
  EXPECT_THROW(load_config_string("problem: unknown\n"), InvalidArgument);
  EXPECT_THROW(load_config_string("problem: SCGM-1\ndelta: abc\n"), ConfigError);
  EXPECT_THROW(load_config_string("problem: SCGM-1\ndelta: -1\n"), InvalidArgument);
  EXPECT_THROW(load_config_string("problem: SCGM-1\nalgorithm: pagm\n"), ConfigError);
  EXPECT_THROW(load_config_string("problem: SCGM-1\nmu: 0.3\n"), ConfigError);
  EXPECT_THROW(load_config_string("problem: SCGM-1\nd: 3\n"), ConfigError);
  EXPECT_THROW(load_config_string("problem: PAGM-2\nK: 0\n"), ConfigError);
  EXPECT_THROW(load_config_string("problem: PAGM-2\nK: 5\ntheorem_K: true\n"), ConfigError);
  EXPECT_THROW(load_config_string("problem: SCGM-1\nepsilon_grid: 0.5\n"), ConfigError);
  EXPECT_THROW(load_config_string("- 1\n- 2\n"), ConfigError);
}

TEST(Config, PreconditionsAreRecheckedAtLoad) {
  SeedEnvGuard guard;
  // t above 1/(1/mu + rho) violates the inner-step condition.
  EXPECT_THROW(load_config_string("problem: PAGM-2\nmu: 0.5\nt: 0.6\n"), InvalidArgument);
  // H_max below h(g(x1)) is inadmissible.
  EXPECT_THROW(load_config_string("problem: SCGM-1\nH_max: 0.0\n"), InvalidArgument);
}

TEST(Config, EnvironmentOverridesSeed) {
  SeedEnvGuard guard;
  setenv("COMPOSOPT_SEED", "42", 1);
  EXPECT_EQ(load_config_string("problem: SCGM-1\nseed: 7\n").seed, 42u);
  setenv("COMPOSOPT_SEED", "4x", 1);
  EXPECT_THROW(load_config_string("problem: SCGM-1\n"), ConfigError);
}

// ---------------------------------------------------------------------------
// CSV

TEST(Csv, ScgmRoundTripIsBitExact) {
  const auto e = capped_tanh();
  const auto& s = *e.scgm;
  const auto p = derive_scgm_params(s.problem, s.x1, 0.2, 0.5);
  const auto trace = run_scgm(s.problem, p, s.x1, 1);
  const TraceTable table = scgm_table(trace, true);
  std::istringstream in(to_csv(table));
  const TraceTable back = parse_csv(in);
  ASSERT_EQ(back.header, scgm_csv_header());
  ASSERT_EQ(back.rows.size(), p.K + 1);
  for (std::size_t k = 1; k <= trace.K() + 1; ++k) {
    const auto& st = trace.state(k);
    EXPECT_EQ(back.value(k - 1, "k"), static_cast<double>(k));
    EXPECT_EQ(back.value(k - 1, "obj"), st.objective);
    EXPECT_EQ(back.value(k - 1, "envelope"), st.envelope);
    EXPECT_EQ(back.value(k - 1, "radius"), st.radius());
    EXPECT_EQ(back.value(k - 1, "residual"), st.residual());
    EXPECT_EQ(back.value(k - 1, "time_s"), trace.elapsed_s[k - 1]);
    if (k <= trace.K()) {
      EXPECT_EQ(back.value(k - 1, "step_norm"), (trace.state(k + 1).x - st.x).norm());
    }
  }
  EXPECT_FALSE(back.at(p.K, "step_norm").has_value());
}

TEST(Csv, PagmRoundTripIsBitExact) {
  const auto e = abs_diff_tanh_1d();
  const auto& s = *e.pagm;
  PagmOptions options;
  options.verify = true;
  const auto trace = run_pagm(s.problem, derive_pagm_params(s.problem, s.mu, s.t, 40), s.x1_0,
                              s.x2_0, s.z_0, 2, options);
  std::istringstream in(to_csv(pagm_table(s.problem, trace, false)));
  const TraceTable back = parse_csv(in);
  ASSERT_EQ(back.header, pagm_csv_header());
  ASSERT_EQ(back.rows.size(), 41u);
  for (std::size_t k = 1; k <= 41; ++k) {
    const auto& st = trace.state(k);
    EXPECT_EQ(back.value(k - 1, "obj"), s.problem.objective(st.x1));
    EXPECT_EQ(back.value(k - 1, "fmu"), st.oracle->f_mu());
    EXPECT_EQ(back.value(k - 1, "Delta_k"), trace.Delta[k]);
    EXPECT_FALSE(back.at(k - 1, "time_s").has_value());
    if (k <= 40) {
      EXPECT_EQ(back.value(k - 1, "delta_k"), trace.delta[k]);
      EXPECT_EQ(back.value(k - 1, "grad_norm"), st.approx_grad.norm());
    }
  }
}

TEST(Csv, OracleColumnsAreEmptyOutsideVerifyMode) {
  const auto e = abs_diff_tanh_1d();
  const auto& s = *e.pagm;
  const auto trace = run_pagm(s.problem, derive_pagm_params(s.problem, s.mu, s.t, 5), s.x1_0,
                              s.x2_0, s.z_0, 2);
  const TraceTable t = pagm_table(s.problem, trace, false);
  for (const auto& col : {"fmu", "delta_k", "Delta_k"})
    for (std::size_t i = 0; i < t.rows.size(); ++i) EXPECT_FALSE(t.at(i, col).has_value());
  EXPECT_TRUE(t.at(0, "sub_exact").has_value());
}

TEST(Csv, ParserRejectsMalformedInput) {
  std::istringstream ragged("a,b\n1,2,3\n");
  EXPECT_THROW(parse_csv(ragged), InvalidArgument);
  std::istringstream bad("a,b\n1,x\n");
  EXPECT_THROW(parse_csv(bad), InvalidArgument);
  std::istringstream empty("");
  EXPECT_THROW(parse_csv(empty), InvalidArgument);
}

// ---------------------------------------------------------------------------
// Experiments

TEST(Experiment, ScgmRunWritesAuditedTrace) {
  SeedEnvGuard guard;
  const fs::path dir = scratch("scgm_run");
  auto c = load_config_string("problem: capped-tanh\ndelta: 0.2\nepsilon: 0.5\nseed: 1\n");
  c.out = dir.string();
  const auto r = run_experiment(c);
  ASSERT_EQ(r.trajectories.size(), 1u);
  EXPECT_TRUE(r.passed());
  EXPECT_EQ(r.exit_code(), 0);
  const auto p = derive_scgm_params(capped_tanh().scgm->problem, capped_tanh().scgm->x1, 0.2, 0.5);
  const TraceTable t = read_csv(r.trajectories[0].csv_path);
  EXPECT_EQ(t.rows.size(), p.K + 1);
  EXPECT_TRUE(audit_trace_file(r.trajectories[0].csv_path).passed());
  const auto summary = json::parse(slurp(r.summary_path));
  EXPECT_TRUE(summary["passed"].get<bool>());
  EXPECT_EQ(summary["trajectories"][0]["K"].get<std::size_t>(), p.K);
}

TEST(Experiment, IdenticalConfigGivesIdenticalBytes) {
  SeedEnvGuard guard;
  std::string csv[2], summary[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path dir = scratch("determinism" + std::to_string(i));
    auto c = load_config_string("problem: SCGM-2\nseed: 5\ntrajectories: 2\n");
    c.out = dir.string();
    const auto r = run_experiment(c);
    csv[i] = slurp(r.trajectories[1].csv_path);
    summary[i] = slurp(r.summary_path);
  }
  EXPECT_FALSE(csv[0].empty());
  EXPECT_EQ(csv[0], csv[1]);
  EXPECT_EQ(summary[0], summary[1]);
}

TEST(Experiment, HalvingEpsilonQuadruplesK) {
  const auto s = *capped_tanh().scgm;
  for (double e : {0.5, 0.25, 0.1}) {
    const auto a = derive_scgm_params(s.problem, s.x1, 0.2, e);
    const auto b = derive_scgm_params(s.problem, s.x1, 0.2, e / 2);
    EXPECT_DOUBLE_EQ(b.K_raw, 4.0 * a.K_raw);
    EXPECT_EQ(b.K, static_cast<std::size_t>(std::ceil(4.0 * a.K_raw)));
  }
}

TEST(Experiment, PagmVerifyRunAuditsAndCsvAuditAgrees) {
  SeedEnvGuard guard;
  const fs::path dir = scratch("pagm_run");
  auto c = load_config_string("problem: PAGM-1\nK: 40\nverify: true\nseed: 3\n");
  c.out = dir.string();
  const auto r = run_experiment(c);
  ASSERT_TRUE(r.trajectories[0].audited);
  EXPECT_TRUE(r.passed());
  const auto file = audit_trace_file(r.trajectories[0].csv_path);
  EXPECT_TRUE(file.passed());
  EXPECT_NO_THROW(file.at("telescoped-bound"));
  // The CSV-level telescoped margin matches the in-memory audit.
  EXPECT_NEAR(file.at("telescoped-bound").worst_margin,
              r.trajectories[0].audit.at("telescoped-bound").worst_margin, 1e-12);
}

TEST(Experiment, PagmWithoutVerifySkipsAuditButCertifies) {
  SeedEnvGuard guard;
  const fs::path dir = scratch("pagm_noverify");
  auto c = load_config_string("problem: PAGM-2\nK: 30\n");
  c.out = dir.string();
  const auto r = run_experiment(c);
  EXPECT_FALSE(r.trajectories[0].audited);
  EXPECT_EQ(r.exit_code(), 0);
  EXPECT_TRUE(r.trajectories[0].certificate.contains("gap_xi"));
  EXPECT_TRUE(audit_trace_file(r.trajectories[0].csv_path).checks.front().skipped);
}

TEST(Experiment, CorruptedCsvFailsTheAudit) {
  SeedEnvGuard guard;
  const fs::path dir = scratch("corrupt");
  auto c = load_config_string("problem: SCGM-1\n");
  c.out = dir.string();
  const auto r = run_experiment(c);
  TraceTable t = read_csv(r.trajectories[0].csv_path);
  // Raise the envelope of x_3 so that descent fails at k = 2.
  t.rows[2][t.column("envelope")] = *t.rows[1][t.column("envelope")] + 1e-3;
  write_text(r.trajectories[0].csv_path, to_csv(t));
  const auto a = audit_trace_file(r.trajectories[0].csv_path);
  EXPECT_FALSE(a.at("descent").passed);
  EXPECT_EQ(a.at("descent").first_failure, 2u);
}

TEST(Scaling, TheoreticalSlopeIsMinusTwoAndHitsAreWithinK) {
  SeedEnvGuard guard;
  const fs::path dir = scratch("scaling");
  auto c = load_config_string("problem: SCGM-1\nepsilon_grid: [0.5, 0.25, 0.125]\n");
  c.out = dir.string();
  const auto r = scaling_study(c);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_NEAR(r.slope_theory, -2.0, 1e-3);
  EXPECT_TRUE(r.within_theory());
  EXPECT_TRUE(fs::exists(r.csv_path));
}

TEST(Scaling, RejectsShortGrids) {
  SeedEnvGuard guard;
  auto one = load_config_string("problem: SCGM-1\nepsilon_grid: [0.5]\n");
  EXPECT_THROW(scaling_study(one), ConfigError);
  auto pagm = load_config_string("problem: PAGM-2\nepsilon_grid: [0.5, 0.25, 0.1]\n");
  EXPECT_THROW(scaling_study(pagm), ConfigError);
}

// ---------------------------------------------------------------------------
// CLI exit-status contract

TEST(Cli, RunAuditAndListProblems) {
  SeedEnvGuard guard;
  const fs::path dir = scratch("cli");
  std::string out;
  EXPECT_EQ(run_cli("list-problems", &out), 0);
  EXPECT_NE(out.find("capped-tanh"), std::string::npos);
  EXPECT_EQ(run_cli("run --algorithm scgm --problem capped-tanh --delta 0.2 --epsilon 0.5 "
                    "--seed 1 --out " + dir.string(), &out), 0) << out;
  const std::string trace = (dir / "scgm_capped-tanh_seed1.csv").string();
  ASSERT_TRUE(fs::exists(trace)) << out;
  EXPECT_EQ(run_cli("audit --trace " + trace, &out), 0) << out;

  TraceTable t = read_csv(trace);
  t.rows[5][t.column("radius")] = 1.0;  // beyond delta = 0.2
  write_text(trace, to_csv(t));
  EXPECT_EQ(run_cli("audit --trace " + trace, &out), 1) << out;
  EXPECT_NE(out.find("FAIL  radius"), std::string::npos) << out;
}

TEST(Cli, InvalidInputExitsWithTwo) {
  SeedEnvGuard guard;
  const fs::path dir = scratch("cli_bad");
  const fs::path cfg = dir / "bad.yaml";
  write_text(cfg.string(), "problem: SCGM-1\nunknown_key: 1\n");
  std::string out;
  EXPECT_EQ(run_cli("run --config " + cfg.string(), &out), 2);
  EXPECT_NE(out.find("unknown_key"), std::string::npos) << out;
  EXPECT_EQ(run_cli("audit --trace " + (dir / "missing.csv").string()), 2);
  EXPECT_EQ(run_cli("validate --problem nope"), 2);
  EXPECT_EQ(run_cli("frobnicate"), 2);
}

TEST(Cli, ValidateAndScaling) {
  SeedEnvGuard guard;
  const fs::path dir = scratch("cli_scaling");
  std::string out;
  EXPECT_EQ(run_cli("validate --problem PAGM-1 --samples 500", &out), 0) << out;
  const fs::path cfg = dir / "scaling.yaml";
  write_text(cfg.string(), "problem: SCGM-2\nepsilon_grid: [0.5, 0.3, 0.2]\nout: " +
                               (dir / "out").string() + "\n");
  EXPECT_EQ(run_cli("scaling --config " + cfg.string(), &out), 0) << out;
  EXPECT_NE(out.find("expected -2"), std::string::npos);
}

TEST(Cli, EnvironmentSeedReachesTheTrace) {
  SeedEnvGuard guard;
  const fs::path dir = scratch("cli_env");
  setenv("COMPOSOPT_SEED", "11", 1);
  EXPECT_EQ(run_cli("run --problem SCGM-2 --seed 1 --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "scgm_capped-tanh-1d_seed11.csv"));
}
