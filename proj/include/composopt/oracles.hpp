#ifndef COMPOSOPT_ORACLES_HPP
#define COMPOSOPT_ORACLES_HPP

// Brute-force references. Nothing here calls the solvers under test, except
// high_precision_prox_point, which delegates to proximal_point_exact and is
// itself checked against the grid in one dimension.

#include <functional>

#include "composopt/pagm.hpp"
#include "composopt/problem.hpp"

namespace composopt::oracles {

using Objective = std::function<double(const Vec&)>;

/// Axis-aligned box scanned with `resolution` points per axis, then zoomed
/// `refine_rounds` times to +-1 spacing around the incumbent. Each zoom shrinks
/// the spacing by (resolution - 1) / 2. Cost is (resolution (rounds + 1))^dim.
struct GridSpec {
  Vec lower;
  Vec upper;
  int resolution = 1201;
  int refine_rounds = 3;

  static GridSpec box(Eigen::Index dim, double lo = -6.0, double hi = 6.0,
                      int resolution = 1201, int refine_rounds = 3) {
    return GridSpec{Vec::Constant(dim, lo), Vec::Constant(dim, hi), resolution, refine_rounds};
  }

  Eigen::Index dim() const { return lower.size(); }
  /// Final spacing per coordinate (the documented accuracy).
  Vec accuracy() const {
    Vec h = (upper - lower) / (resolution - 1);
    for (int r = 0; r < refine_rounds; ++r) h *= 2.0 / (resolution - 1);
    return h;
  }
  /// Achievable accuracy of the returned point: the final spacing, floored by
  /// sqrt(machine epsilon) times the box scale, because objective values near a
  /// smooth minimum are indistinguishable within that distance.
  Vec point_accuracy() const {
    const double floor = std::sqrt(std::numeric_limits<double>::epsilon()) *
                         std::max({1.0, lower.cwiseAbs().maxCoeff(), upper.cwiseAbs().maxCoeff()});
    return accuracy().cwiseMax(floor);
  }
};

struct GridResult {
  Vec point;
  double value = 0.0;
};

namespace detail {

/// 1-D scan-and-zoom along `axis` with the other coordinates of `p` fixed.
/// For a function convex along the axis, the incumbent's neighbours bracket
/// the minimizer, so every zoom keeps it.
inline GridResult zoom_axis(const Objective& objective, Vec p, Eigen::Index axis, double lo,
                            double hi, int res, int rounds) {
  GridResult best{p, std::numeric_limits<double>::infinity()};
  for (int round = 0; round <= rounds; ++round) {
    for (int i = 0; i < res; ++i) {
      p(axis) = lo + (hi - lo) * static_cast<double>(i) / (res - 1);
      const double val = objective(p);
      if (val < best.value) {
        best.value = val;
        best.point = p;
      }
    }
    const double spacing = (hi - lo) / (res - 1);
    lo = best.point(axis) - spacing;
    hi = best.point(axis) + spacing;
  }
  return best;
}

}  // namespace detail

/// Minimizes over the grid. In 2-D the search is nested: the outer zoom runs
/// over the first coordinate, each of its evaluations a full inner zoom over
/// the second. Ties keep the lexicographically smallest point (points are
/// visited in increasing order and only strict improvements replace the
/// incumbent).
inline GridResult grid_minimize(const Objective& objective, const GridSpec& spec) {
  const Eigen::Index n = spec.dim();
  require(n == 1 || n == 2, "grid_minimize: dimension must be 1 or 2");
  require(spec.upper.size() == n, "grid_minimize: bound dimension mismatch");
  require(spec.resolution >= 3, "grid_minimize: resolution must be at least 3");
  require(spec.refine_rounds >= 0, "grid_minimize: refine_rounds must be non-negative");
  require((spec.upper.array() > spec.lower.array()).all(),
          "grid_minimize: upper must exceed lower");

  const int res = spec.resolution;
  const int rounds = spec.refine_rounds;
  if (n == 1)
    return detail::zoom_axis(objective, Vec::Zero(1), 0, spec.lower(0), spec.upper(0), res,
                             rounds);
  Vec inner_point(2);
  const Objective profile = [&](const Vec& p) {
    const GridResult r =
        detail::zoom_axis(objective, p, 1, spec.lower(1), spec.upper(1), res, rounds);
    inner_point = r.point;
    return r.value;
  };
  GridResult best{Vec(2), std::numeric_limits<double>::infinity()};
  const Objective tracked = [&](const Vec& p) {
    const double val = profile(p);
    if (val < best.value) {
      best.value = val;
      best.point = inner_point;
    }
    return val;
  };
  detail::zoom_axis(tracked, Vec::Zero(2), 0, spec.lower(0), spec.upper(0), res, rounds);
  return best;
}

/// Grid maximum of y^T u / mu - |y|^2 / (2 mu) - h(y).
inline double grid_maximize_G(const OuterFunction& h, double mu, const Vec& u,
                              const GridSpec& spec) {
  require(u.size() == spec.dim(), "grid_maximize_G: dimension mismatch");
  require(mu > 0.0, "grid_maximize_G: mu must be positive");
  const GridResult r = grid_minimize(
      [&](const Vec& y) { return -(y.dot(u) / mu - y.squaredNorm() / (2.0 * mu) - h(y)); },
      spec);
  return -r.value;
}

/// Central differences per coordinate.
inline Vec finite_difference_gradient(const Objective& fn, const Vec& z, double step) {
  require(step > 0.0, "finite_difference_gradient: step must be positive");
  Vec grad(z.size());
  Vec p = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    p(i) = z(i) + step;
    const double fp = fn(p);
    p(i) = z(i) - step;
    const double fm = fn(p);
    p(i) = z(i);
    grad(i) = (fp - fm) / (2.0 * step);
  }
  return grad;
}

inline Mat finite_difference_jacobian(const std::function<Vec(const Vec&)>& fn, const Vec& z,
                                      double step) {
  require(step > 0.0, "finite_difference_jacobian: step must be positive");
  const Vec f0 = fn(z);
  Mat jac(f0.size(), z.size());
  Vec p = z;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    p(i) = z(i) + step;
    const Vec fp = fn(p);
    p(i) = z(i) - step;
    const Vec fm = fn(p);
    p(i) = z(i);
    jac.col(i) = (fp - fm) / (2.0 * step);
  }
  return jac;
}

/// x_i*(z) to 1e-12 through proximal_point_exact.
inline Vec high_precision_prox_point(const SmoothMap& g, const ConvexOuter& h, const Vec& z,
                                     double mu, double rho) {
  ProximalPointOptions opts;
  opts.tol = 1e-12;
  opts.subproblem.tol = 1e-14;
  return proximal_point_exact(g, h, z, mu, rho, opts).x;
}

/// Reference solution of a prox-linear subproblem by ADMM on the splitting
/// y = A x + b (independent of the closed form and the dual fallback):
///   min h(y) + <linear, x - anchor> + |x - anchor|^2 / (2 step)   s.t. y = A x + b
inline Vec subproblem_reference(const ConvexOuter& h, const Mat& A, const Vec& b,
                                const Vec& linear, const Vec& anchor, double step,
                                double tol = 1e-13, std::size_t max_iterations = 2'000'000) {
  const Vec w = anchor - step * linear;
  const double penalty = 1.0 / step;
  const Mat lhs = Mat::Identity(A.cols(), A.cols()) / step + penalty * A.transpose() * A;
  const Eigen::LDLT<Mat> solver(lhs);
  Vec x = w;
  Vec y = A * x + b;
  Vec scaled_dual = Vec::Zero(b.size());
  for (std::size_t it = 0; it < max_iterations; ++it) {
    x = solver.solve(w / step + penalty * A.transpose() * (y - b - scaled_dual));
    const Vec y_prev = y;
    y = h.prox_oracle(1.0 / penalty, A * x + b + scaled_dual).point;
    const Vec primal_res = A * x + b - y;
    scaled_dual += primal_res;
    const double dual_res = penalty * (A.transpose() * (y - y_prev)).norm();
    if (primal_res.norm() <= tol && dual_res <= tol) return x;
  }
  throw SolverError("subproblem_reference: ADMM did not converge");
}

}  // namespace composopt::oracles

#endif  // COMPOSOPT_ORACLES_HPP
