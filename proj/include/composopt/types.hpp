#ifndef COMPOSOPT_TYPES_HPP
#define COMPOSOPT_TYPES_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace composopt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Raised when an argument violates a documented precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a solver cannot produce a trustworthy result (iteration cap,
/// non-finite iterate, violated runtime invariant).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline void require_finite(const Vec& v, const std::string& what) {
  if (!v.allFinite()) throw SolverError(what + ": non-finite entry");
}

inline void require_finite(double x, const std::string& what) {
  if (!std::isfinite(x)) throw SolverError(what + ": non-finite value");
}

inline void require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

/// Slack used by every audited inequality: lhs <= rhs up to relative and
/// absolute floating-point allowance.
struct Tolerance {
  double relative = 1e-8;
  double absolute = 1e-12;

  bool holds(double lhs, double rhs) const {
    return lhs <= rhs + slack(lhs, rhs);
  }
  double slack(double lhs, double rhs) const {
    return relative * std::max(std::abs(lhs), std::abs(rhs)) + absolute;
  }
};

inline double sq(double x) { return x * x; }

inline double operator_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

}  // namespace composopt

#endif  // COMPOSOPT_TYPES_HPP
