#ifndef COMPOSOPT_PROX_HPP
#define COMPOSOPT_PROX_HPP

#include <cstddef>

#include "composopt/outer.hpp"
#include "composopt/problem.hpp"

namespace composopt {

/// A point of prox_{mu h}(u). Non-convex oracles return a deterministic
/// selection (smallest norm, then lexicographic).
inline ProxResult prox(const OuterFunction& h, double mu, const Vec& u) {
  require(mu > 0.0, "prox: mu must be positive");
  require(u.size() == h.dim, "prox: dimension mismatch");
  if (!h.has_prox()) throw InvalidArgument("prox: '" + h.name + "' has no prox oracle");
  ProxResult r = h.prox_oracle(mu, u);
  require_finite(r.point, "prox");
  return r;
}

/// h(v) + |v - u|^2 / (2 mu) for a given v; equals the Moreau envelope when v
/// is a prox point.
inline double envelope_at(const OuterFunction& h, double mu, const Vec& u, const Vec& v) {
  return h(v) + (v - u).squaredNorm() / (2.0 * mu);
}

/// Moreau envelope h_mu(u).
inline double moreau_value(const OuterFunction& h, double mu, const Vec& u) {
  const ProxResult r = prox(h, mu, u);
  return envelope_at(h, mu, u, r.point);
}

/// G(u) = max_y ( y^T u / mu - |y|^2 / (2 mu) - h(y) ), evaluated through the
/// identity h_mu(u) = |u|^2 / (2 mu) - G(u).
inline double dc_decomposition_G(const OuterFunction& h, double mu, const Vec& u) {
  return u.squaredNorm() / (2.0 * mu) - moreau_value(h, mu, u);
}

/// min_x h(A x + b) + <linear, x - anchor> + |x - anchor|^2 / (2 step)
struct ProxLinearSubproblem {
  const ConvexOuter* outer = nullptr;
  Mat A;
  Vec b;
  Vec linear;
  Vec anchor;
  double step = 0.0;

  double objective(const Vec& x) const {
    const Vec d = x - anchor;
    return (*outer)(A * x + b) + linear.dot(d) + d.squaredNorm() / (2.0 * step);
  }
  /// Center of the proximal quadratic after completing the square.
  Vec center() const { return anchor - step * linear; }
};

struct SubproblemOptions {
  double tol = 1e-10;  // duality gap target of the fallback solver
  std::size_t max_iterations = 2'000'000;
  bool force_fallback = false;
};

struct SubproblemSolution {
  Vec x;
  bool exact = true;  // closed form; false when the iterative fallback was used
  double gap = 0.0;   // certified objective suboptimality (fallback only)
  std::size_t iterations = 0;
};

namespace detail {

/// Fallback for general A: accelerated proximal gradient on the dual
///   min_y (step/2) |A^T y|^2 - <y, A w + b> + h*(y),   x(y) = w - step A^T y,
/// with function-value restart. Stops once the duality gap is below tol and
/// the recovered primal point has stopped moving.
inline SubproblemSolution solve_prox_linear_dual(const ProxLinearSubproblem& sub,
                                                 const SubproblemOptions& options) {
  const ConvexOuter& h = *sub.outer;
  require(static_cast<bool>(h.conjugate),
          "solve_prox_linear: fallback needs the conjugate of '" + h.name + "'");
  const double t = sub.step;
  const Vec w = sub.center();
  const Vec c = sub.A * w + sub.b;
  const Mat Q = t * (sub.A * sub.A.transpose());
  const double lipschitz = t * sq(operator_norm(sub.A));

  SubproblemSolution sol;
  sol.exact = false;
  if (lipschitz <= 0.0) {
    sol.x = w;
    return sol;
  }
  const double s = 1.0 / lipschitz;

  // prox_{s h*}(p) = p - s prox_{h/s}(p / s)
  auto prox_conj = [&](const Vec& p) -> Vec {
    return p - s * h.prox_oracle(1.0 / s, p / s).point;
  };
  auto dual = [&](const Vec& y) { return 0.5 * y.dot(Q * y) - c.dot(y) + h.conjugate(y); };
  auto primal = [&](const Vec& x) {
    return h(sub.A * x + sub.b) + (x - w).squaredNorm() / (2.0 * t);
  };
  auto recover = [&](const Vec& y) -> Vec { return w - t * sub.A.transpose() * y; };

  Vec y = prox_conj(s * c);
  Vec p = y;
  double momentum = 1.0;
  double d_val = dual(y);
  Vec x = recover(y);
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    const Vec y_next = prox_conj(p - s * (Q * p - c));
    const double d_next = dual(y_next);
    if (d_next > d_val && momentum > 1.0) {
      // Restart: drop momentum and take a plain step from the last iterate.
      p = y;
      momentum = 1.0;
      continue;
    }
    const double m_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
    p = y_next + ((momentum - 1.0) / m_next) * (y_next - y);
    momentum = m_next;
    const double change = (y_next - y).norm();
    y = y_next;
    d_val = d_next;

    const Vec x_next = recover(y);
    const double moved = (x_next - x).norm();
    x = x_next;
    const double gap = primal(x) + d_val;
    sol.iterations = it;
    sol.gap = gap;
    const bool stalled = moved <= 1e-13 * (1.0 + x.norm()) || change == 0.0;
    if (gap <= options.tol && stalled) {
      sol.x = x;
      return sol;
    }
  }
  throw SolverError("solve_prox_linear: fallback exceeded its iteration cap (gap " +
                    std::to_string(sol.gap) + ")");
}

}  // namespace detail

/// Unique minimizer of the prox-linear subproblem. Closed form when m = 1 or
/// A A^T = alpha I, through prox_{step h(A . + b)}(anchor - step * linear);
/// otherwise the dual fallback, flagged inexact.
inline SubproblemSolution solve_prox_linear(const ProxLinearSubproblem& sub,
                                            const SubproblemOptions& options = {}) {
  require(sub.outer != nullptr, "solve_prox_linear: missing outer function");
  require(sub.step > 0.0, "solve_prox_linear: step must be positive");
  require(sub.A.rows() == sub.outer->dim && sub.b.size() == sub.outer->dim &&
              sub.A.cols() == sub.anchor.size() && sub.linear.size() == sub.anchor.size(),
          "solve_prox_linear: dimension mismatch");
  SubproblemSolution sol;
  if (!options.force_fallback &&
      (sub.A.rows() == 1 || rows_orthogonal_equal_norm(sub.A, nullptr))) {
    sol.x = sub.outer->affine_prox(sub.step, sub.A, sub.b, sub.center());
  } else {
    sol = detail::solve_prox_linear_dual(sub, options);
  }
  require_finite(sol.x, "solve_prox_linear");
  return sol;
}

}  // namespace composopt

#endif  // COMPOSOPT_PROX_HPP
