#ifndef COMPOSOPT_PARAMS_HPP
#define COMPOSOPT_PARAMS_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <sstream>

#include "composopt/problem.hpp"

namespace composopt {

/// Parameters of the smoothing compositional gradient method. Every field
/// below `H_max` is derived; the problem constants are copied in so a trace
/// can be audited without the problem object.
struct ScgmParams {
  double delta = 0.0;
  double epsilon = 0.0;
  double H_max = 0.0;

  double mu = 0.0;     // delta / (2 L_h)
  double C_v = 0.0;    // C_g + sqrt(2 mu (H_max - lower_bound))
  double C = 0.0;      // L_g^2 + beta C_g + C_v L_g
  double gamma = 0.0;  // 2 C / mu
  double Delta = 0.0;  // h(g(x1)) - lower_bound
  double K_raw = 0.0;  // 16 L_h C Delta / (delta eps^2)
  std::size_t K = 1;   // max(1, ceil(K_raw))

  double L_h = 0.0;
  double L_g = 0.0;
  double beta = 0.0;
  double C_g = 0.0;
  double lower_bound = 0.0;
};

/// Upper bound on h(g(x)) used when none is configured:
/// h(g(x)) <= h(anchor) + L_h |g(x) - anchor| <= lower + L_h (C_g + |anchor|).
inline double default_H_max(const CompositionalProblem& problem) {
  const auto& h = problem.h;
  require(h.minimizer.has_value() && std::isfinite(h.lower_bound),
          "H_max: outer function declares no minimizer; configure H_max explicitly");
  return h.lower_bound + h.L_h * (problem.g.C_g + h.minimizer->norm());
}

inline ScgmParams derive_scgm_params(const CompositionalProblem& problem, const Vec& x1,
                                     double delta, double epsilon,
                                     std::optional<double> H_max = std::nullopt) {
  require(std::isfinite(delta) && delta > 0.0, "scgm params: delta must be positive");
  require(std::isfinite(epsilon) && epsilon > 0.0, "scgm params: epsilon must be positive");
  require(x1.size() == problem.g.dim_in && x1.allFinite(),
          "scgm params: x1 must be a finite point of the input space");
  const auto& h = problem.h;
  const auto& g = problem.g;
  require(std::isfinite(h.lower_bound), "scgm params: h needs a finite lower bound");
  require(std::isfinite(g.C_g), "scgm params: g needs a finite bound C_g");
  require(h.L_h > 0.0, "scgm params: L_h must be positive");

  ScgmParams p;
  p.delta = delta;
  p.epsilon = epsilon;
  p.H_max = H_max.has_value() ? *H_max : default_H_max(problem);
  require(p.H_max >= h.lower_bound, "scgm params: H_max below the lower bound of h");
  const double h1 = problem.objective(x1);
  require(h1 <= p.H_max, "scgm params: H_max is smaller than h(g(x1))");

  p.L_h = h.L_h;
  p.L_g = g.L_g;
  p.beta = g.beta;
  p.C_g = g.C_g;
  p.lower_bound = h.lower_bound;

  p.mu = delta / (2.0 * h.L_h);
  p.C_v = g.C_g + std::sqrt(2.0 * p.mu * (p.H_max - h.lower_bound));
  p.C = g.L_g * g.L_g + g.beta * g.C_g + p.C_v * g.L_g;
  p.gamma = 2.0 * p.C / p.mu;
  p.Delta = h1 - h.lower_bound;
  p.K_raw = 16.0 * h.L_h * p.C * p.Delta / (delta * epsilon * epsilon);
  p.K = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(p.K_raw)));
  return p;
}

/// Parameters of the prox-linear approximate gradient method.
struct PagmParams {
  double mu = 0.0;
  double t = 0.0;
  double rho = 0.0;
  double c = 0.0;       // 1/mu - rho
  double theta = 0.0;   // t c
  double L_mu = 0.0;    // 2 / (mu - mu^2 rho)
  double gamma = 0.0;   // min{1/(4 L_mu), sqrt(t^3 c^4 mu^3 / (48 (1 - t^2 c^2)))}
  double sigma = 0.0;   // 1 / (mu c)
  std::size_t K = 1;
  bool preconditions_hold = true;

  /// Re-derives every dependent value from (mu, t, rho) and compares bitwise.
  bool consistent() const;
};

struct PagmParamOptions {
  // When false, the (mu, t) preconditions are reported in
  // `preconditions_hold` instead of raising. Used by negative controls.
  bool enforce = true;
  // Additionally require mu <= min{1, 1/rho}.
  bool theorem_mode = false;
};

namespace detail {

inline void fill_pagm_derived(PagmParams& p) {
  p.c = 1.0 / p.mu - p.rho;
  p.theta = p.t * p.c;
  p.L_mu = 2.0 / (p.mu - p.mu * p.mu * p.rho);
  const double tc = p.t * p.c;
  const double ratio = (p.t * p.t * p.t) * (p.c * p.c * p.c * p.c) * (p.mu * p.mu * p.mu) /
                       (48.0 * (1.0 - tc * tc));
  p.gamma = std::min(1.0 / (4.0 * p.L_mu), std::sqrt(ratio));
  p.sigma = 1.0 / (p.mu * p.c);
}

}  // namespace detail

inline bool PagmParams::consistent() const {
  PagmParams q = *this;
  detail::fill_pagm_derived(q);
  return q.c == c && q.theta == theta && q.L_mu == L_mu && q.gamma == gamma &&
         q.sigma == sigma;
}

inline PagmParams derive_pagm_params(const DCProblem& problem, double mu, double t,
                                     std::size_t K = 1, PagmParamOptions options = {}) {
  require(std::isfinite(mu) && mu > 0.0, "pagm params: mu must be positive");
  require(std::isfinite(t) && t > 0.0, "pagm params: t must be positive");
  require(K >= 1, "pagm params: K must be at least 1");
  PagmParams p;
  p.mu = mu;
  p.t = t;
  p.rho = problem.rho;
  p.K = K;

  std::ostringstream violations;
  const double inv_mu = 1.0 / mu;
  if (!(inv_mu > std::max(1.0, p.rho)))
    violations << "mu^{-1} > max{1, rho} violated (mu^{-1} = " << inv_mu
               << ", rho = " << p.rho << "); ";
  // 1/t is compared with a few ulps of slack so t = 1/(1/mu + rho) passes.
  const double rhs = inv_mu + p.rho;
  if (!(1.0 / t >= rhs * (1.0 - 1e-14)))
    violations << "t^{-1} >= mu^{-1} + rho violated (t^{-1} = " << 1.0 / t
               << ", mu^{-1} + rho = " << rhs << "); ";
  if (options.theorem_mode && !(mu <= std::min(1.0, 1.0 / p.rho)))
    violations << "mu <= min{1, 1/rho} violated; ";

  p.preconditions_hold = violations.str().empty();
  if (!p.preconditions_hold && options.enforce)
    throw InvalidArgument("pagm params: " + violations.str());
  detail::fill_pagm_derived(p);
  return p;
}

/// Largest step t allowed by t^{-1} >= mu^{-1} + rho.
inline double default_inner_step(double mu, double rho) { return 1.0 / (1.0 / mu + rho); }

/// Iteration budget from the convergence theorem:
///   K = max{704 delta0/theta^2, 28 Delta0, 1568 mu C1, 96 mu^2 C/gamma} / (mu^2 eps^2)
/// where delta0, Delta0 are oracle quantities at the initial point, C bounds
/// the surrogate decrease and C1 bounds h_i(g_i(.)) - inf h_i o g_i.
struct PagmBudget {
  double K_raw = 0.0;
  std::size_t K = 1;
  std::array<double, 4> terms{};
};

inline PagmBudget pagm_theorem_budget(const PagmParams& p, double delta0, double Delta0,
                                      double C1, double C, double epsilon) {
  require(epsilon > 0.0, "pagm budget: epsilon must be positive");
  require(delta0 >= 0.0 && Delta0 >= 0.0 && C1 >= 0.0 && C >= 0.0,
          "pagm budget: constants must be non-negative");
  PagmBudget b;
  b.terms = {704.0 * delta0 / (p.theta * p.theta), 28.0 * Delta0, 1568.0 * p.mu * C1,
             96.0 * p.mu * p.mu * C / p.gamma};
  const double top = *std::max_element(b.terms.begin(), b.terms.end());
  b.K_raw = top / (p.mu * p.mu * epsilon * epsilon);
  b.K = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(b.K_raw)));
  return b;
}

}  // namespace composopt

#endif  // COMPOSOPT_PARAMS_HPP
