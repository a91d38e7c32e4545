// Command-line harness. Exit status: 0 all audits passed, 1 an audit failed,
// 2 invalid input (config, arguments, files).

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "composopt/bench/config.hpp"
#include "composopt/bench/experiment.hpp"
#include "composopt/bench/registry.hpp"
#include "composopt/certify.hpp"

using namespace composopt;
using namespace composopt::bench;

namespace {

struct RunFlags {
  std::string config;
  std::string algorithm;
  std::string problem;
  std::optional<double> delta, epsilon, mu, t, H_max, C, C1;
  std::optional<long> K;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trajectories;
  std::string out;
  bool theorem_K = false;
  bool verify = false;
  bool timing = false;
};

/// Config file first, then explicit flags, then COMPOSOPT_SEED.
ExperimentConfig resolve(const RunFlags& f) {
  ExperimentConfig c;
  if (!f.config.empty()) {
    YAML::Node root;
    try {
      root = YAML::LoadFile(f.config);
    } catch (const YAML::Exception& e) {
      throw ConfigError("config: cannot read '" + f.config + "': " + e.what());
    }
    c = parse_config(root);
  }
  if (!f.algorithm.empty()) c.algorithm = f.algorithm;
  if (!f.problem.empty()) c.problem = f.problem;
  if (c.problem.empty()) throw ConfigError("run: give --config or --problem");
  if (f.delta) c.delta = f.delta;
  if (f.epsilon) c.epsilon = f.epsilon;
  if (f.mu) c.mu = f.mu;
  if (f.t) c.t = f.t;
  if (f.H_max) c.H_max = f.H_max;
  if (f.C) c.C = f.C;
  if (f.C1) c.C1 = f.C1;
  if (f.K) {
    if (*f.K < 1) throw ConfigError("run: K must be at least 1");
    c.K = static_cast<std::size_t>(*f.K);
  }
  if (f.seed) c.seed = *f.seed;
  if (f.trajectories) c.trajectories = *f.trajectories;
  if (!f.out.empty()) c.out = f.out;
  if (f.theorem_K) c.theorem_K = true;
  if (f.verify) c.verify = true;
  if (f.timing) c.timing = true;
  apply_environment(c);
  validate_config(c);
  return c;
}

void list_problems() {
  for (const auto& e : registry_problems()) {
    std::printf("%-18s %-7s %-5s %s\n", e.name.c_str(), e.alias.c_str(), e.algorithm.c_str(),
                e.description.c_str());
    int i = 1;
    for (const SmoothMap* g : e.maps()) {
      std::printf("%27s g%d: d = %ld, m = %ld, L_g = %.6g, beta = %.6g, C_g = %.6g\n", "", i++,
                  static_cast<long>(g->dim_in), static_cast<long>(g->dim_out), g->L_g, g->beta,
                  g->C_g);
    }
  }
}

int validate_problem(const std::string& name, std::size_t samples, std::uint64_t seed) {
  const RegistryEntry e = find_problem(name);
  bool ok = true;
  int i = 1;
  for (const SmoothMap* g : e.maps()) {
    const ConstantReport r = validate_constants(*g, samples, seed);
    std::printf("%s g%d\n", e.name.c_str(), i++);
    std::printf("  L_g   declared %-12.6g observed %.6g\n", r.declared_L_g, r.observed_L_g);
    std::printf("  beta  declared %-12.6g observed %.6g\n", r.declared_beta, r.observed_beta);
    std::printf("  C_g   declared %-12.6g observed %.6g\n", r.declared_C_g, r.observed_C_g);
    std::printf("  jacobian finite-difference error %.3g\n", r.jacobian_fd_error);
    std::printf("  margin %.6g -> %s\n", r.margin(), r.passed() ? "PASS" : "FAIL");
    ok = ok && r.passed();
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"composopt: smoothing and DC methods for compositional problems"};
  app.require_subcommand(1);

  RunFlags f;
  auto* run = app.add_subcommand("run", "run an experiment and audit every trajectory");
  run->add_option("--config", f.config, "YAML config file");
  run->add_option("--algorithm", f.algorithm, "scgm or pagm");
  run->add_option("--problem", f.problem, "registry name or alias");
  run->add_option("--delta", f.delta, "SCGM target radius");
  run->add_option("--epsilon", f.epsilon, "target tolerance");
  run->add_option("--mu", f.mu, "PAGM smoothing parameter");
  run->add_option("--t", f.t, "PAGM inner step");
  run->add_option("--K", f.K, "PAGM iteration budget");
  run->add_flag("--theorem-K", f.theorem_K, "PAGM: budget from the theorem helper");
  run->add_option("--seed", f.seed, "first seed");
  run->add_option("--trajectories", f.trajectories, "number of trajectories");
  run->add_flag("--verify", f.verify, "PAGM: compute oracle proximal points and audit");
  run->add_flag("--timing", f.timing, "fill the time_s column");
  run->add_option("--out", f.out, "output directory");
  run->add_option("--H-max", f.H_max, "SCGM bound on h(g(x))");
  run->add_option("--C", f.C, "PAGM bound on the surrogate decrease");
  run->add_option("--C1", f.C1, "PAGM bound on h_i(g_i(.)) - inf h_i");

  std::string trace;
  auto* audit = app.add_subcommand("audit", "re-audit a written trace from its CSV and sidecar");
  audit->add_option("--trace", trace, "trace CSV")->required();

  std::string scaling_config;
  auto* scaling = app.add_subcommand("scaling", "iteration-complexity scaling over epsilon_grid");
  scaling->add_option("--config", scaling_config, "YAML config with epsilon_grid")->required();

  app.add_subcommand("list-problems", "list the problem registry");

  std::string problem;
  std::size_t samples = 2000;
  std::uint64_t vseed = 1;
  auto* validate = app.add_subcommand("validate", "check declared constants by sampling");
  validate->add_option("--problem", problem, "registry name or alias")->required();
  validate->add_option("--samples", samples, "sample pairs (default 2000)");
  validate->add_option("--seed", vseed, "sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) {
      const ExperimentReport r = run_experiment(resolve(f));
      print_experiment(std::cout, r);
      return r.exit_code();
    }
    if (audit->parsed()) {
      const AuditReport r = audit_trace_file(trace);
      std::cout << trace << "\n";
      print_audit(std::cout, r);
      std::cout << (r.passed() ? "all audits passed" : "AUDIT FAILURE") << "\n";
      return r.passed() ? 0 : 1;
    }
    if (scaling->parsed()) {
      ExperimentConfig c = load_config(scaling_config);
      const ScalingReport r = scaling_study(c);
      print_scaling(std::cout, r);
      return r.within_theory() ? 0 : 1;
    }
    if (validate->parsed()) return validate_problem(problem, samples, vseed);
    list_problems();
    return 0;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const YAML::Exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
