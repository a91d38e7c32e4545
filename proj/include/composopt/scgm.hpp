#ifndef COMPOSOPT_SCGM_HPP
#define COMPOSOPT_SCGM_HPP

#include <chrono>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "composopt/params.hpp"
#include "composopt/prox.hpp"
#include "composopt/rng.hpp"

namespace composopt {

/// Everything known about iterate x_k once its prox point is in hand.
struct ScgmState {
  std::size_t k = 0;
  Vec x;
  Vec gx;              // g(x_k)
  Vec v;               // selected point of prox_{mu h}(g(x_k))
  Vec grad_surrogate;  // J(x_k)^T (g(x_k) - v) / mu
  double envelope = 0.0;   // h(v) + |v - g(x_k)|^2 / (2 mu)
  double objective = 0.0;  // h(g(x_k))

  double radius() const { return (gx - v).norm(); }
  double residual() const { return grad_surrogate.norm(); }
};

struct ScgmTrace {
  std::vector<ScgmState> states;  // x_1 ... x_{K+1}
  ScgmParams params;              // gamma is the value actually used
  std::uint64_t rng_seed = 0;
  std::size_t tau = 1;            // sampled output index in {1, ..., K}
  std::size_t best_index = 1;     // iterate with the smallest residual
  std::vector<double> elapsed_s;  // wall time at which each state was recorded

  std::size_t K() const { return states.empty() ? 0 : states.size() - 1; }
  const ScgmState& state(std::size_t k) const { return states.at(k - 1); }
  const ScgmState& output() const { return state(tau); }
  const ScgmState& best() const { return state(best_index); }
};

struct ScgmOptions {
  bool enforce_descent = true;  // abort when the per-step descent inequality fails
  bool enforce_H_max = true;    // abort when h(g(x_k)) exceeds the configured H_max
  std::optional<double> gamma_override;  // negative controls only
  Tolerance tol{};
};

/// Evaluates g, the prox selection, the surrogate gradient and the envelope
/// at x. The envelope reuses the prox point, so no second prox call is made.
inline ScgmState evaluate_scgm_state(const CompositionalProblem& problem, double mu,
                                     const Vec& x, std::size_t k) {
  require_finite(x, "scgm: iterate " + std::to_string(k));
  ScgmState s;
  s.k = k;
  s.x = x;
  s.gx = problem.g(x);
  require_finite(s.gx, "scgm: g(x_" + std::to_string(k) + ")");
  s.v = prox(problem.h, mu, s.gx).point;
  s.grad_surrogate = problem.g.jacobian(x).transpose() * (s.gx - s.v) / mu;
  s.envelope = envelope_at(problem.h, mu, s.gx, s.v);
  s.objective = problem.h(s.gx);
  require_finite(s.grad_surrogate, "scgm: surrogate gradient at x_" + std::to_string(k));
  return s;
}

/// One SCGM update: the exact minimizer of
///   F_k(x) = <grad, x - x_k> + (gamma/2) |x - x_k|^2,
/// i.e. x_{k+1} = x_k - grad / gamma.
inline std::pair<Vec, ScgmState> scgm_step(const CompositionalProblem& problem,
                                           const ScgmParams& params, const Vec& x,
                                           std::size_t k = 1) {
  require(params.mu > 0.0 && params.gamma > 0.0, "scgm_step: invalid parameters");
  ScgmState s = evaluate_scgm_state(problem, params.mu, x, k);
  Vec next = x - s.grad_surrogate / params.gamma;
  require_finite(next, "scgm_step: x_" + std::to_string(k + 1));
  return {std::move(next), std::move(s)};
}

/// Runs exactly K iterations and samples tau uniformly from {1, ..., K}.
inline ScgmTrace run_scgm(const CompositionalProblem& problem, ScgmParams params,
                          const Vec& x1, std::uint64_t seed, const ScgmOptions& options = {}) {
  require(x1.size() == problem.g.dim_in, "run_scgm: x1 has the wrong dimension");
  require(params.K >= 1 && params.mu > 0.0, "run_scgm: parameters not derived");
  if (options.gamma_override) params.gamma = *options.gamma_override;
  require(params.gamma > 0.0, "run_scgm: gamma must be positive");

  ScgmTrace trace;
  trace.params = params;
  trace.rng_seed = seed;
  trace.states.reserve(params.K + 1);
  trace.elapsed_s.reserve(params.K + 1);
  const auto start = std::chrono::steady_clock::now();
  auto stamp = [&] {
    trace.elapsed_s.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  };

  auto check_hmax = [&](const ScgmState& s) {
    if (options.enforce_H_max && !options.tol.holds(s.objective, params.H_max))
      throw SolverError("run_scgm: h(g(x_" + std::to_string(s.k) + ")) = " +
                        std::to_string(s.objective) + " exceeds H_max = " +
                        std::to_string(params.H_max));
  };

  trace.states.push_back(evaluate_scgm_state(problem, params.mu, x1, 1));
  stamp();
  check_hmax(trace.states.back());
  const double curvature = params.C / (2.0 * params.mu);
  for (std::size_t k = 1; k <= params.K; ++k) {
    const ScgmState& cur = trace.states.back();
    Vec next = cur.x - cur.grad_surrogate / params.gamma;
    ScgmState s = evaluate_scgm_state(problem, params.mu, next, k + 1);
    check_hmax(s);
    if (options.enforce_descent) {
      const double bound = cur.envelope - curvature * (s.x - cur.x).squaredNorm();
      if (!options.tol.holds(s.envelope, bound))
        throw SolverError("run_scgm: descent inequality violated at k = " +
                          std::to_string(k) + " (envelope " + std::to_string(s.envelope) +
                          " > bound " + std::to_string(bound) + ")");
    }
    trace.states.push_back(std::move(s));
    stamp();
  }

  trace.tau = sample_output_index(seed, params.K);
  std::size_t best = 1;
  for (std::size_t k = 1; k <= trace.states.size(); ++k)
    if (trace.state(k).residual() < trace.state(best).residual()) best = k;
  trace.best_index = best;
  return trace;
}

}  // namespace composopt

#endif  // COMPOSOPT_SCGM_HPP
