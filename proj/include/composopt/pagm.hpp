#ifndef COMPOSOPT_PAGM_HPP
#define COMPOSOPT_PAGM_HPP

#include <chrono>
#include <cstdint>
#include <optional>
#include <vector>

#include "composopt/params.hpp"
#include "composopt/prox.hpp"
#include "composopt/rng.hpp"

namespace composopt {

/// Builds the prox-linear model of h_i(g_i(.)) + |. - z|^2/(2 mu) at x_i and
/// returns its minimizer:
///   argmin_x h(g(x_i) + J(x_i)(x - x_i)) + <x_i - z, x - x_i>/mu + |x - x_i|^2/(2t)
inline SubproblemSolution pagm_inner_step(const SmoothMap& g, const ConvexOuter& h,
                                          const Vec& xi, const Vec& z, double mu, double t,
                                          const SubproblemOptions& options = {}) {
  require(mu > 0.0 && t > 0.0, "pagm_inner_step: mu and t must be positive");
  ProxLinearSubproblem sub;
  sub.outer = &h;
  sub.A = g.jacobian(xi);
  sub.b = g(xi) - sub.A * xi;
  sub.linear = (xi - z) / mu;
  sub.anchor = xi;
  sub.step = t;
  return solve_prox_linear(sub, options);
}

struct ProximalPointOptions {
  double tol = 1e-10;  // bound on |x - x*(z)| at exit
  std::size_t max_iterations = 100'000;
  std::optional<Vec> warm_start;
  SubproblemOptions subproblem{};
};

struct ProximalPoint {
  Vec x;
  std::size_t iterations = 0;
};

/// x*(z) = argmin_x h(g(x)) + |x - z|^2 / (2 mu), by repeating the inner step
/// with z frozen. Each repetition contracts |x - x*|^2 by (1 - theta), so with
/// q = sqrt(1 - theta) the exit bound |x_{j+1} - x*| <= q |x_{j+1} - x_j| / (1 - q)
/// is certified.
inline ProximalPoint proximal_point_exact(const SmoothMap& g, const ConvexOuter& h,
                                          const Vec& z, double mu, double rho,
                                          const ProximalPointOptions& options = {}) {
  require(mu > 0.0 && rho >= 0.0 && 1.0 / mu > rho,
          "proximal_point_exact: requires mu^{-1} > rho");
  const double t = default_inner_step(mu, rho);
  const double theta = t * (1.0 / mu - rho);
  const double q = std::sqrt(std::max(0.0, 1.0 - theta));
  ProximalPoint out;
  Vec x = options.warm_start.value_or(z);
  for (std::size_t j = 1; j <= options.max_iterations; ++j) {
    Vec next = pagm_inner_step(g, h, x, z, mu, t, options.subproblem).x;
    const double step = (next - x).norm();
    x = std::move(next);
    out.iterations = j;
    if (q * step <= options.tol * (1.0 - q)) {
      out.x = x;
      return out;
    }
  }
  throw SolverError("proximal_point_exact: iteration cap exceeded");
}

/// Oracle quantities at z^k (verify mode only).
struct PagmOracle {
  Vec x1_star;
  Vec x2_star;
  double f1_mu = 0.0;
  double f2_mu = 0.0;
  double f_mu() const { return f2_mu - f1_mu; }
};

struct PagmState {
  std::size_t k = 0;
  Vec z;
  Vec x1;
  Vec x2;
  Vec approx_grad;        // (x1^{k+1} - x2^{k+1}) / mu; empty on the last state
  bool sub_exact = true;  // both subproblems of step k solved in closed form
  double sub_gap = 0.0;   // largest certified fallback gap of step k
  std::optional<PagmOracle> oracle;
};

struct PagmTrace {
  std::vector<PagmState> states;  // k = 1 ... K+1
  PagmParams params;              // gamma is the value actually used
  std::uint64_t rng_seed = 0;
  std::size_t tau = 1;
  bool verified = false;

  // Verify-mode quantities, indexed by k (entry 0 holds delta_0 / Delta_0,
  // evaluated with z^0 := z^1).
  std::vector<double> delta;  // |x1^{k+1} - x1*(z^k)|^2 + |x2^{k+1} - x2*(z^k)|^2, k = 0..K
  std::vector<double> Delta;  // |x1*(z^k) - x2*(z^k)|^2, k = 0..K+1
  std::size_t oracle_iterations = 0;
  std::vector<double> elapsed_s;  // wall time at which each state was recorded

  std::size_t K() const { return states.empty() ? 0 : states.size() - 1; }
  const PagmState& state(std::size_t k) const { return states.at(k - 1); }
  /// Designated output x1^{tau+1}.
  const Vec& output() const { return state(tau + 1).x1; }
};

struct PagmOptions {
  bool verify = false;
  std::optional<double> gamma_override;  // test-only (gamma = 0 freezes z)
  SubproblemOptions subproblem{};
  double oracle_tol = 1e-11;
};

inline PagmOracle pagm_oracle_at(const DCProblem& problem, double mu, const Vec& z,
                                 const PagmOracle* warm, std::size_t* iterations,
                                 double tol = 1e-11) {
  PagmOracle o;
  ProximalPointOptions opts;
  opts.tol = tol;
  opts.subproblem.tol = 1e-14;
  if (warm) opts.warm_start = warm->x1_star;
  const ProximalPoint p1 = proximal_point_exact(problem.g1, problem.h1, z, mu, problem.rho, opts);
  if (warm) opts.warm_start = warm->x2_star;
  const ProximalPoint p2 = proximal_point_exact(problem.g2, problem.h2, z, mu, problem.rho, opts);
  o.x1_star = p1.x;
  o.x2_star = p2.x;
  o.f1_mu = problem.f1(p1.x) + (p1.x - z).squaredNorm() / (2.0 * mu);
  o.f2_mu = problem.f2(p2.x) + (p2.x - z).squaredNorm() / (2.0 * mu);
  if (iterations) *iterations += p1.iterations + p2.iterations;
  return o;
}

/// Smooth surrogate f_mu(z) = f_{2,mu}(z) - f_{1,mu}(z).
inline double surrogate_value(const DCProblem& problem, double mu, const Vec& z) {
  return pagm_oracle_at(problem, mu, z, nullptr, nullptr).f_mu();
}

/// Fills the verify-mode quantities of a finished trace.
inline void attach_pagm_oracles(const DCProblem& problem, PagmTrace& trace,
                                double tol = 1e-11) {
  const double mu = trace.params.mu;
  const PagmOracle* warm = nullptr;
  for (auto& s : trace.states) {
    s.oracle = pagm_oracle_at(problem, mu, s.z, warm, &trace.oracle_iterations, tol);
    warm = &*s.oracle;
  }
  const std::size_t K = trace.K();
  trace.delta.assign(K + 1, 0.0);
  trace.Delta.assign(K + 2, 0.0);
  for (std::size_t k = 1; k <= K + 1; ++k) {
    const PagmOracle& o = *trace.state(k).oracle;
    trace.Delta[k] = (o.x1_star - o.x2_star).squaredNorm();
  }
  for (std::size_t k = 1; k <= K; ++k) {
    const PagmOracle& o = *trace.state(k).oracle;
    const PagmState& nxt = trace.state(k + 1);
    trace.delta[k] = (nxt.x1 - o.x1_star).squaredNorm() + (nxt.x2 - o.x2_star).squaredNorm();
  }
  const PagmState& first = trace.state(1);
  trace.delta[0] = (first.x1 - first.oracle->x1_star).squaredNorm() +
                   (first.x2 - first.oracle->x2_star).squaredNorm();
  trace.Delta[0] = trace.Delta[1];
  trace.verified = true;
}

/// Oracle quantities at the initial point with the convention z^0 := z^1:
/// delta_0 = sum_i |x_i^1 - x_i*(z^1)|^2 and Delta_0 = |x_1*(z^1) - x_2*(z^1)|^2.
struct PagmInitialOracle {
  double delta0 = 0.0;
  double Delta0 = 0.0;
};

inline PagmInitialOracle pagm_initial_oracle(const DCProblem& problem, double mu, const Vec& x1_0,
                                             const Vec& x2_0, const Vec& z_0) {
  const PagmOracle o = pagm_oracle_at(problem, mu, z_0, nullptr, nullptr);
  return {(x1_0 - o.x1_star).squaredNorm() + (x2_0 - o.x2_star).squaredNorm(),
          (o.x1_star - o.x2_star).squaredNorm()};
}

/// K iterations of (two prox-linear inner steps, one gradient step on z).
inline PagmTrace run_pagm(const DCProblem& problem, PagmParams params, const Vec& x1_0,
                          const Vec& x2_0, const Vec& z_0, std::uint64_t seed,
                          const PagmOptions& options = {}) {
  const Eigen::Index d = problem.dim();
  require(x1_0.size() == d && x2_0.size() == d && z_0.size() == d,
          "run_pagm: initial points have the wrong dimension");
  require(params.K >= 1 && params.mu > 0.0 && params.t > 0.0, "run_pagm: invalid parameters");
  if (options.gamma_override) params.gamma = *options.gamma_override;
  require(params.gamma >= 0.0, "run_pagm: gamma must be non-negative");
  if (options.verify)
    require(d <= 10 && problem.g1.dim_out <= 10 && problem.g2.dim_out <= 10,
            "run_pagm: verify mode is limited to d, m <= 10");

  PagmTrace trace;
  trace.params = params;
  trace.rng_seed = seed;
  trace.states.reserve(params.K + 1);
  trace.elapsed_s.reserve(params.K + 1);
  const auto start = std::chrono::steady_clock::now();
  auto stamp = [&] {
    trace.elapsed_s.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  };

  PagmState cur;
  cur.k = 1;
  cur.z = z_0;
  cur.x1 = x1_0;
  cur.x2 = x2_0;
  for (std::size_t k = 1; k <= params.K; ++k) {
    const SubproblemSolution s1 = pagm_inner_step(problem.g1, problem.h1, cur.x1, cur.z,
                                                  params.mu, params.t, options.subproblem);
    const SubproblemSolution s2 = pagm_inner_step(problem.g2, problem.h2, cur.x2, cur.z,
                                                  params.mu, params.t, options.subproblem);
    cur.approx_grad = (s1.x - s2.x) / params.mu;
    cur.sub_exact = s1.exact && s2.exact;
    cur.sub_gap = std::max(s1.gap, s2.gap);
    PagmState next;
    next.k = k + 1;
    next.z = cur.z - params.gamma * cur.approx_grad;
    next.x1 = s1.x;
    next.x2 = s2.x;
    if (!next.z.allFinite() || !next.x1.allFinite() || !next.x2.allFinite())
      throw SolverError("run_pagm: non-finite iterate at step k = " + std::to_string(k));
    trace.states.push_back(std::move(cur));
    stamp();
    cur = std::move(next);
  }
  trace.states.push_back(std::move(cur));
  stamp();
  trace.tau = sample_output_index(seed, params.K);
  if (options.verify) attach_pagm_oracles(problem, trace, options.oracle_tol);
  return trace;
}

}  // namespace composopt

#endif  // COMPOSOPT_PAGM_HPP
