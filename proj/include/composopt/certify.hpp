#ifndef COMPOSOPT_CERTIFY_HPP
#define COMPOSOPT_CERTIFY_HPP

#include <deque>
#include <string>

#include "composopt/oracles.hpp"
#include "composopt/pagm.hpp"
#include "composopt/scgm.hpp"

namespace composopt {

// ---------------------------------------------------------------------------
// Reports

/// One audited inequality. `worst_margin` is min over instances of
/// (rhs + slack - lhs); negative means violated.
struct AuditCheck {
  std::string name;
  bool passed = true;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::size_t instances = 0;
  std::size_t failures = 0;
  std::size_t first_failure = 0;  // iteration index of the first failure
  bool skipped = false;
  std::string note;

  void record(double lhs, double rhs, double slack, std::size_t index) {
    const double margin = rhs + slack - lhs;
    ++instances;
    worst_margin = std::min(worst_margin, margin);
    if (!(margin >= 0.0)) {
      if (failures == 0) first_failure = index;
      ++failures;
      passed = false;
    }
  }
};

struct AuditReport {
  std::deque<AuditCheck> checks;  // stable references across add()

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const AuditCheck& c) { return c.passed; });
  }
  const AuditCheck& at(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw InvalidArgument("audit report has no check named '" + name + "'");
  }
  AuditCheck& add(std::string name) {
    AuditCheck check;
    check.name = std::move(name);
    checks.push_back(std::move(check));
    return checks.back();
  }
};

// ---------------------------------------------------------------------------
// SCGM certificate

/// Witness that x is (delta, eps)-stationary in the chain-rule sense:
/// v lies within `radius` of g(x) and J(x)^T witness has norm `residual`,
/// where witness = (g(x) - v)/mu is a subgradient of h at v.
struct ScgmCertificate {
  Vec x;
  Vec v;
  double radius = 0.0;
  double residual = 0.0;
  Vec subgradient_witness;
  // Distance of the witness to the structured subdifferential of h at v
  // (NaN when h carries no subdifferential oracle).
  double witness_distance = std::numeric_limits<double>::quiet_NaN();

  bool valid(double delta, double epsilon) const {
    return radius <= delta && residual <= epsilon;
  }
};

/// Checks v against competitors w: g(x), the minimizer of h, and random points
/// near g(x). Throws if any competitor has a strictly smaller prox objective.
inline void require_prox_point(const OuterFunction& h, double mu, const Vec& u, const Vec& v,
                               std::size_t competitors = 64) {
  const double best = envelope_at(h, mu, u, v);
  const Tolerance tol{};
  auto challenge = [&](const Vec& w) {
    const double val = envelope_at(h, mu, u, w);
    if (!tol.holds(best, val))
      throw InvalidArgument("certificate: v is not a prox point (competitor beats it by " +
                            std::to_string(best - val) + ")");
  };
  challenge(u);
  if (h.minimizer) challenge(*h.minimizer);
  CounterRng rng(0x5eed);
  const double r = std::max(1.0, 2.0 * mu * h.L_h);
  for (std::size_t i = 0; i < competitors; ++i)
    challenge(u + rng.uniform_vec(u.size(), -r, r));
}

inline ScgmCertificate scgm_certificate(const CompositionalProblem& problem,
                                        const ScgmParams& params, const Vec& x, const Vec& v) {
  const Vec gx = problem.g(x);
  require(v.size() == gx.size(), "scgm_certificate: v has the wrong dimension");
  require_prox_point(problem.h, params.mu, gx, v);
  ScgmCertificate cert;
  cert.x = x;
  cert.v = v;
  cert.radius = (gx - v).norm();
  cert.subgradient_witness = (gx - v) / params.mu;
  cert.residual = (problem.g.jacobian(x).transpose() * cert.subgradient_witness).norm();
  if (problem.h.has_subdifferential())
    cert.witness_distance = problem.h.subdiff_distance(v, cert.subgradient_witness);
  return cert;
}

// ---------------------------------------------------------------------------
// DC certificate

/// Witness that x = x1^{tau+1} is nearly eps-critical: xi_i is a subgradient
/// of f_i at x_i*(z^tau), and the three gaps are small.
struct DcCertificate {
  std::size_t tau = 0;
  Vec x;
  Vec x_prime;
  Vec x_dprime;
  Vec xi1;
  Vec xi2;
  double gap_xi = 0.0;       // |xi1 - xi2|
  double gap_prime = 0.0;    // |x - x'|
  double gap_dprime = 0.0;   // |x - x''|

  double max_gap() const { return std::max({gap_xi, gap_prime, gap_dprime}); }
  bool valid(double epsilon) const { return max_gap() <= epsilon; }
};

inline DcCertificate dc_certificate_at(const PagmTrace& trace, std::size_t tau) {
  require(tau >= 1 && tau <= trace.K(), "dc_certificate: tau out of range");
  const PagmState& s = trace.state(tau);
  if (!s.oracle) throw InvalidArgument("dc_certificate: no oracle proximal points at z^tau");
  const double mu = trace.params.mu;
  DcCertificate c;
  c.tau = tau;
  c.x = trace.state(tau + 1).x1;
  c.x_prime = s.oracle->x1_star;
  c.x_dprime = s.oracle->x2_star;
  c.xi1 = (s.z - c.x_prime) / mu;
  c.xi2 = (s.z - c.x_dprime) / mu;
  c.gap_xi = (c.xi1 - c.xi2).norm();
  c.gap_prime = (c.x - c.x_prime).norm();
  c.gap_dprime = (c.x - c.x_dprime).norm();
  return c;
}

/// Certificate at the trace's sampled tau. Requires verify-mode oracles there.
inline DcCertificate dc_certificate(const PagmTrace& trace) {
  return dc_certificate_at(trace, trace.tau);
}

/// Distance of xi to J(x)^T dh(g(x)) for scalar maps (d = m = 1).
inline double subgradient_distance_1d(const SmoothMap& g, const OuterFunction& h,
                                      const Vec& x, const Vec& xi) {
  require(g.dim_in == 1 && g.dim_out == 1, "subgradient_distance_1d: scalar maps only");
  require(h.has_subdifferential(), "subgradient_distance_1d: h has no subdifferential");
  const double j = g.jacobian(x)(0, 0);
  const Vec gx = g(x);
  if (j == 0.0) return std::abs(xi(0));
  Vec lambda(1);
  lambda(0) = xi(0) / j;
  return std::abs(j) * h.subdiff_distance(gx, lambda);
}

/// Distance of the classical derivative of h o g at x (central differences)
/// from J(x)^T dh(g(x)); scalar maps only. Zero means the chain-rule inclusion
/// holds at x.
inline double chain_rule_gap_1d(const SmoothMap& g, const OuterFunction& h, const Vec& x,
                                double step = 1e-7) {
  const Vec deriv = oracles::finite_difference_gradient(
      [&](const Vec& p) { return h(g(p)); }, x, step);
  return subgradient_distance_1d(g, h, x, deriv);
}

// ---------------------------------------------------------------------------
// Trace audits

/// Audits an SCGM trace against the inequalities of the convergence proof
/// plus the internal consistency of every recorded quantity.
inline AuditReport audit_trace_scgm(const CompositionalProblem& problem, const ScgmTrace& trace,
                                    Tolerance tol = {}) {
  const ScgmParams& p = trace.params;
  const std::size_t K = trace.K();
  AuditReport report;
  require(K >= 1, "audit_trace_scgm: empty trace");

  auto& descent = report.add("descent");
  const double curvature = p.C / (2.0 * p.mu);
  for (std::size_t k = 1; k <= K; ++k) {
    const auto& a = trace.state(k);
    const auto& b = trace.state(k + 1);
    const double lhs = b.envelope;
    const double rhs = a.envelope - curvature * (b.x - a.x).squaredNorm();
    descent.record(lhs, rhs, tol.slack(lhs, rhs), k);
  }

  auto& average = report.add("telescoped-average");
  double sum = 0.0;
  for (std::size_t k = 1; k <= K; ++k) sum += sq(trace.state(k).residual());
  {
    const double lhs = sum / static_cast<double>(K);
    const double rhs = 4.0 * p.Delta * p.gamma / static_cast<double>(K);
    average.record(lhs, rhs, tol.slack(lhs, rhs), K);
  }

  auto& radius = report.add("radius");
  for (const auto& s : trace.states) {
    const double lhs = s.radius();
    const double rhs = 2.0 * p.mu * p.L_h;
    radius.record(lhs, rhs, tol.slack(lhs, rhs), s.k);
  }

  auto& bound = report.add("prox-point-bound");
  for (const auto& s : trace.states) {
    const double lhs = s.v.norm();
    bound.record(lhs, p.C_v, tol.slack(lhs, p.C_v), s.k);
  }

  auto& hmax = report.add("h-max");
  for (const auto& s : trace.states) hmax.record(s.objective, p.H_max, tol.slack(s.objective, p.H_max), s.k);

  // Recorded quantities must recompute from (x, v) and the problem.
  auto& consistency = report.add("state-consistency");
  const Tolerance exact{1e-12, 1e-14};
  for (std::size_t k = 1; k <= K + 1; ++k) {
    const auto& s = trace.state(k);
    const Vec gx = problem.g(s.x);
    const Vec grad = problem.g.jacobian(s.x).transpose() * (gx - s.v) / p.mu;
    const double env = envelope_at(problem.h, p.mu, gx, s.v);
    double err = (gx - s.gx).norm() + (grad - s.grad_surrogate).norm() +
                 std::abs(env - s.envelope) + std::abs(problem.h(gx) - s.objective);
    if (k <= K) err += (trace.state(k + 1).x - (s.x - s.grad_surrogate / p.gamma)).norm();
    const double scale = 1.0 + s.x.norm() + std::abs(s.envelope) + s.grad_surrogate.norm();
    consistency.record(err, 0.0, exact.slack(scale, 0.0), k);
  }
  return report;
}

/// Configured constants the PAGM audit checks against the realized trace.
struct PagmAuditConfig {
  double C1 = 0.0;  // bound on h_i(g_i(z^K)) - inf h_i o g_i
  double C = 0.0;   // bound on f_mu(z^1) - f_mu(z^{K+1})
  double contraction_slack = 1e-8;
  Tolerance tol{};
};

inline AuditReport audit_trace_pagm(const DCProblem& problem, const PagmTrace& trace,
                                    const PagmAuditConfig& config) {
  require(trace.verified, "audit_trace_pagm: trace was not run in verify mode");
  const PagmParams& p = trace.params;
  const std::size_t K = trace.K();
  const Tolerance tol = config.tol;
  AuditReport report;
  require(K >= 1, "audit_trace_pagm: empty trace");

  for (int i : {1, 2}) {
    auto& check = report.add(i == 1 ? "contraction-x1" : "contraction-x2");
    const double factor = 1.0 - p.t * p.c;
    for (std::size_t k = 1; k <= K; ++k) {
      const auto& cur = trace.state(k);
      const Vec& star = i == 1 ? cur.oracle->x1_star : cur.oracle->x2_star;
      const Vec& before = i == 1 ? cur.x1 : cur.x2;
      const Vec& after = i == 1 ? trace.state(k + 1).x1 : trace.state(k + 1).x2;
      check.record((after - star).squaredNorm(), factor * (before - star).squaredNorm(),
                   config.contraction_slack, k);
    }
  }

  auto& tele = report.add("telescoped-bound");
  const double drop = trace.state(1).oracle->f_mu() - trace.state(K + 1).oracle->f_mu();
  if (p.gamma > 0.0) {
    double sum = 0.0;
    for (std::size_t k = 1; k <= K; ++k) sum += trace.Delta[k] + trace.delta[k];
    const double Kd = static_cast<double>(K);
    const double lhs = sum / Kd;
    const double rhs = (147.0 * trace.delta[0] / (p.theta * p.theta) + 7.0 * trace.Delta[0] +
                        49.0 * trace.Delta[K] + 32.0 * p.mu * p.mu * drop / p.gamma) /
                       Kd;
    tele.record(lhs, rhs, tol.slack(lhs, rhs), K);
  } else {
    tele.skipped = true;
    tele.note = "gamma = 0";
  }

  auto& delta_K = report.add("Delta_K-bound");
  delta_K.record(trace.Delta[K], 8.0 * p.mu * config.C1,
                 tol.slack(trace.Delta[K], 8.0 * p.mu * config.C1), K);

  auto& c1 = report.add("C1-bound");
  for (int i : {1, 2}) {
    const double lower = problem.outer(i).lower_bound;
    if (!std::isfinite(lower)) {
      c1.note = "outer function without a finite lower bound";
      continue;
    }
    const double fz = problem.outer(i)(problem.map(i)(trace.state(K).z));
    c1.record(fz - lower, config.C1, tol.slack(fz - lower, config.C1), K);
  }

  auto& c = report.add("C-bound");
  c.record(drop, config.C, tol.slack(drop, config.C), K);

  // Sampled lemma inequalities along the trace.
  auto& lip = report.add("prox-lipschitz");
  const double lip_const = 1.0 / (1.0 - p.mu * problem.rho);
  for (std::size_t k = 1; k <= K; ++k) {
    const auto& a = *trace.state(k).oracle;
    const auto& b = *trace.state(k + 1).oracle;
    const double dz = (trace.state(k + 1).z - trace.state(k).z).norm();
    for (double lhs : {(b.x1_star - a.x1_star).norm(), (b.x2_star - a.x2_star).norm()})
      lip.record(lhs, lip_const * dz, tol.slack(lhs, lip_const * dz) + 1e-10, k);
  }

  auto& model = report.add("linearization-error");
  for (std::size_t k = 1; k <= K; ++k) {
    for (int i : {1, 2}) {
      const Vec& y = i == 1 ? trace.state(k).x1 : trace.state(k).x2;
      const Vec& z = i == 1 ? trace.state(k + 1).x1 : trace.state(k + 1).x2;
      const SmoothMap& g = problem.map(i);
      const ConvexOuter& h = problem.outer(i);
      const double lhs = std::abs(h(g(z)) - h(g(y) + g.jacobian(y) * (z - y)));
      const double rhs = 0.5 * problem.rho * (z - y).squaredNorm();
      model.record(lhs, rhs, tol.slack(lhs, rhs), k);
    }
  }

  // Oracle values must recompute from the recorded points, and each x_i*(z^k)
  // must be a fixed point of the prox-linear step at z^k.
  auto& oracle = report.add("oracle-consistency");
  for (std::size_t k = 1; k <= K + 1; ++k) {
    const auto& s = trace.state(k);
    const PagmOracle& o = *s.oracle;
    double err = std::abs(trace.Delta[k] - (o.x1_star - o.x2_star).squaredNorm());
    err += std::abs(o.f1_mu - (problem.f1(o.x1_star) + (o.x1_star - s.z).squaredNorm() / (2.0 * p.mu)));
    err += std::abs(o.f2_mu - (problem.f2(o.x2_star) + (o.x2_star - s.z).squaredNorm() / (2.0 * p.mu)));
    if (k <= K) {
      const auto& n = trace.state(k + 1);
      err += std::abs(trace.delta[k] - ((n.x1 - o.x1_star).squaredNorm() +
                                        (n.x2 - o.x2_star).squaredNorm()));
    }
    const double t = default_inner_step(p.mu, problem.rho);
    SubproblemOptions sub;
    sub.tol = 1e-14;
    for (int i : {1, 2}) {
      const Vec& star = i == 1 ? o.x1_star : o.x2_star;
      err += (pagm_inner_step(problem.map(i), problem.outer(i), star, s.z, p.mu, t, sub).x - star)
                 .norm();
    }
    oracle.record(err, 0.0, 1e-9 * (1.0 + s.z.norm()), k);
  }

  auto& update = report.add("update-consistency");
  for (std::size_t k = 1; k <= K; ++k) {
    const auto& a = trace.state(k);
    const auto& b = trace.state(k + 1);
    const double err = (b.z - (a.z - p.gamma * a.approx_grad)).norm() +
                       (a.approx_grad - (b.x1 - b.x2) / p.mu).norm();
    update.record(err, 0.0, 1e-12 * (1.0 + a.z.norm() + a.approx_grad.norm()), k);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Declared-constant validation

struct ConstantReport {
  double declared_L_g = 0.0;
  double declared_beta = 0.0;
  double declared_C_g = 0.0;
  double observed_L_g = 0.0;
  double observed_beta = 0.0;
  double observed_C_g = 0.0;
  double jacobian_fd_error = 0.0;  // max |J - FD(J)|_max over samples

  double margin() const {
    return std::min({declared_L_g - observed_L_g, declared_beta - observed_beta,
                     declared_C_g - observed_C_g});
  }
  bool passed(double fd_tol = 1e-6) const {
    return margin() >= 0.0 && jacobian_fd_error <= fd_tol;
  }
};

/// Samples pairs in [-box, box]^d (half far apart, half close together) and
/// records the largest observed ratios for L_g, beta and |g(x)|.
inline ConstantReport validate_constants(const SmoothMap& g, std::size_t samples,
                                         std::uint64_t seed, double box = 3.0) {
  require(samples >= 2, "validate_constants: need at least 2 samples");
  ConstantReport r;
  r.declared_L_g = g.L_g;
  r.declared_beta = g.beta;
  r.declared_C_g = g.C_g;
  CounterRng rng(seed);
  for (std::size_t i = 0; i < samples; ++i) {
    const Vec x = rng.uniform_vec(g.dim_in, -box, box);
    const double spread = (i % 2 == 0) ? box : 1e-3;
    const Vec y = x + rng.uniform_vec(g.dim_in, -spread, spread);
    const double dist = (x - y).norm();
    const Vec gx = g(x);
    const Mat jx = g.jacobian(x);
    r.observed_C_g = std::max(r.observed_C_g, gx.norm());
    if (dist > 0.0) {
      r.observed_L_g = std::max(r.observed_L_g, (gx - g(y)).norm() / dist);
      r.observed_beta = std::max(r.observed_beta, operator_norm(jx - g.jacobian(y)) / dist);
    }
    const Mat fd = oracles::finite_difference_jacobian(g.value, x, 1e-6);
    r.jacobian_fd_error = std::max(r.jacobian_fd_error, (fd - jx).cwiseAbs().maxCoeff());
  }
  return r;
}

}  // namespace composopt

#endif  // COMPOSOPT_CERTIFY_HPP
