#ifndef COMPOSOPT_PROBLEM_HPP
#define COMPOSOPT_PROBLEM_HPP

#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "composopt/types.hpp"

namespace composopt {

/// A point of prox_{mu h}(u) together with its prox objective.
struct ProxResult {
  Vec point;
  double objective = 0.0;  // h(point) + |point - u|^2 / (2 mu)
  bool multiplicity_hint = false;
};

/// Smooth inner map g: R^d -> R^m with declared constants.
///   L_g  : Lipschitz constant of g
///   beta : Lipschitz constant of the Jacobian (operator norm)
///   C_g  : uniform bound on |g(x)|
struct SmoothMap {
  std::string name;
  Eigen::Index dim_in = 0;
  Eigen::Index dim_out = 0;
  std::function<Vec(const Vec&)> value;
  std::function<Mat(const Vec&)> jacobian;  // dim_out x dim_in
  double L_g = 0.0;
  double beta = 0.0;
  double C_g = 0.0;

  Vec operator()(const Vec& x) const { return value(x); }
};

/// Lipschitz outer function h: R^m -> R with a prox oracle.
struct OuterFunction {
  std::string name;
  Eigen::Index dim = 0;
  std::function<double(const Vec&)> value;
  double L_h = 0.0;
  double lower_bound = -std::numeric_limits<double>::infinity();
  // A point where h attains lower_bound, when known.
  std::optional<Vec> minimizer;
  std::function<ProxResult(double mu, const Vec& u)> prox_oracle;
  // Distance from lambda to the (convexified) subdifferential of h at v.
  std::function<double(const Vec& v, const Vec& lambda)> subdiff_distance;

  double operator()(const Vec& u) const { return value(u); }
  bool has_prox() const { return static_cast<bool>(prox_oracle); }
  bool has_subdifferential() const { return static_cast<bool>(subdiff_distance); }
};

/// Convex outer function. Adds the convex conjugate (used to certify
/// subproblem duality gaps) and the affine-composition prox.
struct ConvexOuter : OuterFunction {
  // h*(y); +infinity outside the domain.
  std::function<double(const Vec& y)> conjugate;

  /// prox_{mu h(A . + b)}(u), valid when A A^T = alpha I for some alpha >= 0
  /// (every 1 x d matrix qualifies). Throws otherwise.
  Vec affine_prox(double mu, const Mat& A, const Vec& b, const Vec& u) const;
};

/// True when A A^T = alpha I up to a relative tolerance; alpha is written out.
inline bool rows_orthogonal_equal_norm(const Mat& A, double* alpha,
                                       double tol = 1e-12) {
  const Mat gram = A * A.transpose();
  const double a = gram.diagonal().mean();
  const double scale = std::max(1.0, std::abs(a));
  const Mat residual = gram - a * Mat::Identity(gram.rows(), gram.cols());
  if (residual.cwiseAbs().maxCoeff() > tol * scale) return false;
  if (alpha != nullptr) *alpha = a;
  return true;
}

inline Vec ConvexOuter::affine_prox(double mu, const Mat& A, const Vec& b,
                                    const Vec& u) const {
  require(mu > 0.0, "affine_prox: mu must be positive");
  require(A.rows() == dim && A.cols() == u.size() && b.size() == dim,
          "affine_prox: dimension mismatch");
  double alpha = 0.0;
  if (!rows_orthogonal_equal_norm(A, &alpha))
    throw InvalidArgument("affine_prox: A A^T is not a multiple of the identity");
  if (alpha <= 0.0) return u;  // h(A x + b) is constant in x
  const Vec c = A * u + b;
  const Vec y = prox_oracle(alpha * mu, c).point;
  return u + A.transpose() * (y - c) / alpha;
}

/// min_x h(g(x))
struct CompositionalProblem {
  SmoothMap g;
  OuterFunction h;

  double objective(const Vec& x) const { return h(g(x)); }
};

inline CompositionalProblem make_compositional_problem(SmoothMap g, OuterFunction h) {
  require(g.dim_in > 0 && g.dim_out > 0, "problem: map dimensions must be positive");
  require(g.dim_out == h.dim, "problem: g.dim_out must equal h.dim");
  require(static_cast<bool>(g.value) && static_cast<bool>(g.jacobian),
          "problem: map needs value and jacobian");
  require(static_cast<bool>(h.value), "problem: outer function needs a value");
  return CompositionalProblem{std::move(g), std::move(h)};
}

/// min_x h2(g2(x)) - h1(g1(x)) with convex Lipschitz h1, h2.
struct DCProblem {
  SmoothMap g1, g2;
  ConvexOuter h1, h2;
  double L = 0.0;     // max of the outer Lipschitz constants
  double beta = 0.0;  // max of the Jacobian Lipschitz constants
  double rho = 0.0;   // weak-convexity modulus L * beta

  double f1(const Vec& x) const { return h1(g1(x)); }
  double f2(const Vec& x) const { return h2(g2(x)); }
  double objective(const Vec& x) const { return f2(x) - f1(x); }
  Eigen::Index dim() const { return g1.dim_in; }

  const SmoothMap& map(int i) const { return i == 1 ? g1 : g2; }
  const ConvexOuter& outer(int i) const { return i == 1 ? h1 : h2; }
};

inline DCProblem make_dc_problem(SmoothMap g1, ConvexOuter h1, SmoothMap g2,
                                 ConvexOuter h2) {
  require(g1.dim_in == g2.dim_in && g1.dim_in > 0,
          "dc problem: inner maps must share the input dimension");
  require(g1.dim_out == h1.dim && g2.dim_out == h2.dim,
          "dc problem: map/outer dimension mismatch");
  DCProblem p{std::move(g1), std::move(g2), std::move(h1), std::move(h2)};
  p.L = std::max(p.h1.L_h, p.h2.L_h);
  p.beta = std::max(p.g1.beta, p.g2.beta);
  p.rho = p.L * p.beta;
  require(p.rho > 0.0, "dc problem: weak-convexity modulus must be positive");
  return p;
}

}  // namespace composopt

#endif  // COMPOSOPT_PROBLEM_HPP
