#ifndef COMPOSOPT_BENCH_REGISTRY_HPP
#define COMPOSOPT_BENCH_REGISTRY_HPP

#include <optional>
#include <string>
#include <vector>

#include "composopt/maps.hpp"
#include "composopt/outer.hpp"
#include "composopt/params.hpp"

namespace composopt::bench {

struct ScgmSetup {
  CompositionalProblem problem;
  Vec x1;
  double delta = 0.2;
  double epsilon = 0.5;
};

/// Shipped DC instance. C1 and C are bounds valid for every trajectory
/// (derived from |tanh| < 1), not fitted to a particular run.
struct PagmSetup {
  DCProblem problem;
  Vec x1_0;
  Vec x2_0;
  Vec z_0;
  double mu = 0.0;
  double t = 0.0;  // default: largest step allowed, 1/(1/mu + rho)
  double C1 = 0.0;
  double C = 0.0;
  double epsilon = 0.5;
  std::size_t K = 200;  // default budget for verify-mode runs
};

struct RegistryEntry {
  std::string name;
  std::string alias;
  std::string algorithm;  // "scgm" or "pagm"
  std::string description;
  std::optional<ScgmSetup> scgm;
  std::optional<PagmSetup> pagm;

  std::vector<const SmoothMap*> maps() const {
    if (scgm) return {&scgm->problem.g};
    return {&pagm->problem.g1, &pagm->problem.g2};
  }
};

namespace detail {

inline Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }
inline Vec v1(double a) { return Vec::Constant(1, a); }
inline Mat m2(double a, double b, double c, double d) {
  return (Mat(2, 2) << a, b, c, d).finished();
}

}  // namespace detail

/// SCGM-1: h = sum_j min(|y_j|, 1/2), g = tanh(x + b) on R^2.
inline RegistryEntry capped_tanh() {
  using namespace detail;
  ScgmSetup s{make_compositional_problem(tanh_affine(Mat::Identity(2, 2), v2(0.3, -0.2)),
                                         capped_abs_sum(2, 0.5)),
              v2(0.4, 0.6)};
  return {"capped-tanh", "SCGM-1", "scgm",
          "sum_j min(|y_j|, 0.5) o tanh(x + b), d = m = 2", std::move(s), std::nullopt};
}

/// SCGM-2: min(|tanh x|, 1/2) on R.
inline RegistryEntry capped_tanh_1d() {
  using namespace detail;
  ScgmSetup s{make_compositional_problem(tanh_affine(Mat::Identity(1, 1), v1(0.0)),
                                         capped_abs_sum(1, 0.5)),
              v1(0.5)};
  return {"capped-tanh-1d", "SCGM-2", "scgm", "min(|y|, 0.5) o tanh(x), d = m = 1",
          std::move(s), std::nullopt};
}

/// PAGM-1: |tanh(A2 x + b2)|_1 - |tanh(A1 x + b1)|_1 on R^2. Both terms lie in
/// [0, 2), so C1 = 2 and C = 4 bound every trajectory.
inline RegistryEntry l1_diff_tanh() {
  using namespace detail;
  const Mat A1 = 0.5 * m2(1.0, -0.5, 0.3, 1.0);
  const Mat A2 = m2(1.0, 0.2, 0.0, 0.8);
  PagmSetup s{make_dc_problem(tanh_affine(A1, v2(0.2, -0.1), "g1"), l1_norm(2),
                              tanh_affine(A2, v2(-0.5, 0.3), "g2"), l1_norm(2)),
              v2(1.0, -1.0), v2(1.0, -1.0), v2(1.0, -1.0)};
  s.mu = 0.4;
  s.t = default_inner_step(s.mu, s.problem.rho);
  s.C1 = 2.0;
  s.C = 4.0;
  s.epsilon = 0.5;
  return {"l1-diff-tanh", "PAGM-1", "pagm", "|tanh(A2 x + b2)|_1 - |tanh(A1 x + b1)|_1, d = m = 2",
          std::nullopt, std::move(s)};
}

/// PAGM-2: |tanh(x - 1/2)| - |tanh(x/2 + 1/5)| on R. Both terms lie in
/// [0, 1), so C1 = 1 and C = 2 bound every trajectory.
inline RegistryEntry abs_diff_tanh_1d() {
  using namespace detail;
  const Mat one = Mat::Identity(1, 1);
  PagmSetup s{make_dc_problem(tanh_affine(0.5 * one, v1(0.2), "g1"), abs_value(),
                              tanh_affine(one, v1(-0.5), "g2"), abs_value()),
              v1(1.5), v1(1.5), v1(1.5)};
  s.mu = 0.5;
  s.t = default_inner_step(s.mu, s.problem.rho);
  s.C1 = 1.0;
  s.C = 2.0;
  s.epsilon = 0.5;
  return {"abs-diff-tanh-1d", "PAGM-2", "pagm", "|tanh(x - 0.5)| - |tanh(0.5 x + 0.2)|, d = m = 1",
          std::nullopt, std::move(s)};
}

inline std::vector<RegistryEntry> registry_problems() {
  return {capped_tanh(), capped_tanh_1d(), l1_diff_tanh(), abs_diff_tanh_1d()};
}

/// Lookup by name or alias (e.g. "capped-tanh" or "SCGM-1").
inline RegistryEntry find_problem(const std::string& name) {
  for (auto& e : registry_problems())
    if (e.name == name || e.alias == name) return e;
  throw InvalidArgument("unknown problem '" + name + "' (see list-problems)");
}

}  // namespace composopt::bench

#endif  // COMPOSOPT_BENCH_REGISTRY_HPP
