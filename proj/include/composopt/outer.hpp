#ifndef COMPOSOPT_OUTER_HPP
#define COMPOSOPT_OUTER_HPP

#include <array>
#include <numeric>
#include <vector>

#include "composopt/problem.hpp"

namespace composopt {

namespace detail {

inline double sign_or_plus(double x) { return x < 0.0 ? -1.0 : 1.0; }

inline bool near(double a, double b, double scale = 1.0) {
  return std::abs(a - b) <= 1e-12 * std::max(1.0, scale);
}

inline double soft_threshold(double u, double kappa) {
  return std::copysign(std::max(std::abs(u) - kappa, 0.0), u);
}

/// Distance from x to the interval [lo, hi].
inline double interval_distance(double x, double lo, double hi) {
  if (x < lo) return lo - x;
  if (x > hi) return x - hi;
  return 0.0;
}

}  // namespace detail

/// Euclidean projection onto the probability simplex.
inline Vec project_simplex(const Vec& y) {
  const Eigen::Index n = y.size();
  std::vector<double> s(y.data(), y.data() + n);
  std::sort(s.begin(), s.end(), std::greater<>());
  double cumsum = 0.0;
  double shift = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumsum += s[j];
    const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (s[j] - candidate > 0.0) shift = candidate;
  }
  return (y.array() - shift).max(0.0).matrix();
}

struct CappedAbsProx {
  double point = 0.0;
  double objective = 0.0;
  bool tie = false;
};

/// Exact minimizer of min(|t|, theta) + (t - u)^2 / (2 mu).
///
/// The minimizer lies either in the sloped piece |t| <= theta (clamped
/// soft-threshold), the flat piece |t| >= theta (t = u, or the boundary),
/// or on the boundary t = +-theta itself. All three are compared; ties go to
/// the smallest |t|, then the smaller t.
inline CappedAbsProx capped_abs_prox_detail(double theta, double mu, double u) {
  require(theta > 0.0 && mu > 0.0, "capped_abs_prox: theta and mu must be positive");
  const double s = detail::sign_or_plus(u);
  const std::array<double, 3> candidates = {
      s * std::min(std::max(std::abs(u) - mu, 0.0), theta),
      s * std::max(std::abs(u), theta),
      s * theta,
  };
  auto objective = [&](double t) {
    return std::min(std::abs(t), theta) + (t - u) * (t - u) / (2.0 * mu);
  };
  CappedAbsProx best{candidates[0], objective(candidates[0]), false};
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double t = candidates[i];
    const double val = objective(t);
    const double eps = 1e-14 * std::max(1.0, std::abs(best.objective));
    if (val < best.objective - eps) {
      best = {t, val, false};
    } else if (val <= best.objective + eps && t != best.point) {
      best.tie = true;
      if (std::abs(t) < std::abs(best.point) ||
          (std::abs(t) == std::abs(best.point) && t < best.point)) {
        best.point = t;
        best.objective = val;
      }
    }
  }
  return best;
}

inline double capped_abs_prox(double theta, double mu, double u) {
  return capped_abs_prox_detail(theta, mu, u).point;
}

/// |u|_1 on R^m.
inline ConvexOuter l1_norm(Eigen::Index m) {
  require(m > 0, "l1_norm: dimension must be positive");
  ConvexOuter h;
  h.name = m == 1 ? "abs" : "l1";
  h.dim = m;
  h.value = [](const Vec& u) { return u.lpNorm<1>(); };
  h.L_h = std::sqrt(static_cast<double>(m));
  h.lower_bound = 0.0;
  h.minimizer = Vec::Zero(m);
  h.prox_oracle = [](double mu, const Vec& u) {
    require(mu > 0.0, "prox: mu must be positive");
    Vec v = u.unaryExpr([mu](double x) { return detail::soft_threshold(x, mu); });
    return ProxResult{v, v.lpNorm<1>() + (v - u).squaredNorm() / (2.0 * mu), false};
  };
  h.subdiff_distance = [](const Vec& v, const Vec& lambda) {
    double d2 = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const double lo = detail::near(v(j), 0.0) ? -1.0 : (v(j) > 0 ? 1.0 : -1.0);
      const double hi = detail::near(v(j), 0.0) ? 1.0 : lo;
      d2 += sq(detail::interval_distance(lambda(j), lo, hi));
    }
    return std::sqrt(d2);
  };
  h.conjugate = [](const Vec& y) {
    return y.cwiseAbs().maxCoeff() <= 1.0 + 1e-12
               ? 0.0
               : std::numeric_limits<double>::infinity();
  };
  return h;
}

/// Scalar absolute value (the m = 1 case of l1_norm).
inline ConvexOuter abs_value() { return l1_norm(1); }

/// max_j u_j on R^m. Unbounded below; prox via the Moreau decomposition with
/// the simplex (the conjugate's domain).
inline ConvexOuter max_coordinate(Eigen::Index m) {
  require(m > 0, "max_coordinate: dimension must be positive");
  ConvexOuter h;
  h.name = "max";
  h.dim = m;
  h.value = [](const Vec& u) { return u.maxCoeff(); };
  h.L_h = 1.0;
  h.prox_oracle = [](double mu, const Vec& u) {
    require(mu > 0.0, "prox: mu must be positive");
    Vec v = u - mu * project_simplex(u / mu);
    return ProxResult{v, v.maxCoeff() + (v - u).squaredNorm() / (2.0 * mu), false};
  };
  h.subdiff_distance = [](const Vec& v, const Vec& lambda) {
    const double top = v.maxCoeff();
    std::vector<Eigen::Index> active;
    double off = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      if (detail::near(v(j), top, std::abs(top)))
        active.push_back(j);
      else
        off += sq(lambda(j));
    }
    Vec la(static_cast<Eigen::Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) la(i) = lambda(active[i]);
    return std::sqrt(off + (la - project_simplex(la)).squaredNorm());
  };
  h.conjugate = [](const Vec& y) {
    const bool feasible =
        y.minCoeff() >= -1e-12 && std::abs(y.sum() - 1.0) <= 1e-12 * y.size();
    return feasible ? 0.0 : std::numeric_limits<double>::infinity();
  };
  return h;
}

/// sum_j min(|u_j|, theta): non-convex, Lipschitz, bounded below by 0.
inline OuterFunction capped_abs_sum(Eigen::Index m, double theta) {
  require(m > 0, "capped_abs_sum: dimension must be positive");
  require(theta > 0.0, "capped_abs_sum: theta must be positive");
  OuterFunction h;
  h.name = "capped-abs";
  h.dim = m;
  h.value = [theta](const Vec& u) {
    return u.cwiseAbs().cwiseMin(theta).sum();
  };
  h.L_h = std::sqrt(static_cast<double>(m));
  h.lower_bound = 0.0;
  h.minimizer = Vec::Zero(m);
  h.prox_oracle = [theta](double mu, const Vec& u) {
    require(mu > 0.0, "prox: mu must be positive");
    ProxResult r{Vec(u.size()), 0.0, false};
    for (Eigen::Index j = 0; j < u.size(); ++j) {
      const CappedAbsProx c = capped_abs_prox_detail(theta, mu, u(j));
      r.point(j) = c.point;
      r.objective += c.objective;
      r.multiplicity_hint = r.multiplicity_hint || c.tie;
    }
    return r;
  };
  // Convexified subdifferential of min(|t|, theta): sign(t) on the sloped
  // piece, [-1, 1] at 0, 0 on the flat piece, [0, 1] or [-1, 0] at +-theta.
  h.subdiff_distance = [theta](const Vec& v, const Vec& lambda) {
    double d2 = 0.0;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
      const double a = std::abs(v(j));
      const double s = detail::sign_or_plus(v(j));
      double lo = 0.0;
      double hi = 0.0;
      if (detail::near(a, 0.0)) {
        lo = -1.0;
        hi = 1.0;
      } else if (detail::near(a, theta, theta)) {
        lo = std::min(0.0, s);
        hi = std::max(0.0, s);
      } else if (a < theta) {
        lo = hi = s;
      }
      d2 += sq(detail::interval_distance(lambda(j), lo, hi));
    }
    return std::sqrt(d2);
  };
  return h;
}

}  // namespace composopt

#endif  // COMPOSOPT_OUTER_HPP
