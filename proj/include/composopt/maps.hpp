#ifndef COMPOSOPT_MAPS_HPP
#define COMPOSOPT_MAPS_HPP

#include "composopt/problem.hpp"

namespace composopt {

// max_u |d/du sech^2(u)| = max_s 2 s (1 - s^2) over s = tanh(u) in (-1, 1).
inline constexpr double kSech2SlopeBound = 0.76980035891950100;  // 4 / (3 sqrt 3)

/// g(x) = tanh(A x + b), componentwise. Bounded by sqrt(m) with
///   L_g  = |A|_op
///   beta = 4/(3 sqrt 3) * |A|_op * max_j |a_j|
/// since J(x) - J(y) = diag(sech^2(Ax+b) - sech^2(Ay+b)) A.
inline SmoothMap tanh_affine(const Mat& A, const Vec& b, std::string name = "tanh-affine") {
  require(A.rows() == b.size() && A.rows() > 0 && A.cols() > 0,
          "tanh_affine: dimension mismatch");
  SmoothMap g;
  g.name = std::move(name);
  g.dim_in = A.cols();
  g.dim_out = A.rows();
  g.value = [A, b](const Vec& x) -> Vec { return (A * x + b).array().tanh().matrix(); };
  g.jacobian = [A, b](const Vec& x) -> Mat {
    const Eigen::ArrayXd t = (A * x + b).array().tanh();
    return (1.0 - t.square()).matrix().asDiagonal() * A;
  };
  const double op = operator_norm(A);
  g.L_g = op;
  g.beta = kSech2SlopeBound * op * A.rowwise().norm().maxCoeff();
  g.C_g = std::sqrt(static_cast<double>(A.rows()));
  return g;
}

/// g(x) = A x + b. Not globally bounded, so C_g is +infinity.
inline SmoothMap affine_map(const Mat& A, const Vec& b) {
  require(A.rows() == b.size(), "affine_map: dimension mismatch");
  SmoothMap g;
  g.name = "affine";
  g.dim_in = A.cols();
  g.dim_out = A.rows();
  g.value = [A, b](const Vec& x) -> Vec { return A * x + b; };
  g.jacobian = [A](const Vec&) -> Mat { return A; };
  g.L_g = operator_norm(A);
  g.beta = 0.0;
  g.C_g = std::numeric_limits<double>::infinity();
  return g;
}

inline SmoothMap constant_map(const Vec& c, Eigen::Index dim_in) {
  SmoothMap g;
  g.name = "constant";
  g.dim_in = dim_in;
  g.dim_out = c.size();
  g.value = [c](const Vec&) -> Vec { return c; };
  g.jacobian = [m = c.size(), dim_in](const Vec&) -> Mat { return Mat::Zero(m, dim_in); };
  g.L_g = 0.0;
  g.beta = 0.0;
  g.C_g = c.norm();
  return g;
}

}  // namespace composopt

#endif  // COMPOSOPT_MAPS_HPP
