#include <gtest/gtest.h>

#include "composopt/oracles.hpp"
#include "composopt/outer.hpp"
#include "composopt/prox.hpp"
#include "composopt/rng.hpp"

using namespace composopt;
namespace orc = composopt::oracles;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

OuterFunction zero_outer(Eigen::Index m) {
  OuterFunction h;
  h.name = "zero";
  h.dim = m;
  h.value = [](const Vec&) { return 0.0; };
  h.L_h = 0.0;
  h.lower_bound = 0.0;
  h.prox_oracle = [](double, const Vec& u) { return ProxResult{u, 0.0, false}; };
  return h;
}

double grid_prox_1d(const OuterFunction& h, double mu, double u) {
  return orc::grid_minimize(
             [&](const Vec& y) { return envelope_at(h, mu, vec({u}), y); },
             orc::GridSpec::box(1))
      .point(0);
}

std::vector<OuterFunction> shipped(Eigen::Index m) {
  return {l1_norm(m), max_coordinate(m), capped_abs_sum(m, 1.0), capped_abs_sum(m, 0.4)};
}

}  // namespace

TEST(Prox, L1SoftThreshold) {
  const auto r = prox(l1_norm(3), 1.0, vec({3.0, -0.5, 0.0}));
  EXPECT_TRUE(r.point.isApprox(vec({2.0, 0.0, 0.0})));
  // Per-coordinate grid oracle.
  const auto h1 = abs_value();
  EXPECT_NEAR(grid_prox_1d(h1, 1.0, 3.0), 2.0, 1e-8);
  EXPECT_NEAR(grid_prox_1d(h1, 1.0, -0.5), 0.0, 1e-8);
  EXPECT_DOUBLE_EQ(r.objective, 2.0 + (1.0 + 0.25) / 2.0);
}

TEST(Prox, MinimizerIsFixedPoint) {
  for (const auto& h : shipped(2)) {
    if (!h.minimizer) continue;
    for (double mu : {0.1, 1.0, 5.0})
      EXPECT_TRUE(prox(h, mu, *h.minimizer).point.isApprox(*h.minimizer)) << h.name;
  }
}

TEST(Prox, RejectsMissingOracleAndBadMu) {
  OuterFunction h = zero_outer(1);
  EXPECT_THROW(prox(h, 0.0, vec({1.0})), InvalidArgument);
  h.prox_oracle = nullptr;
  EXPECT_THROW(prox(h, 1.0, vec({1.0})), InvalidArgument);
}

TEST(CappedAbsProx, ReferenceValues) {
  EXPECT_DOUBLE_EQ(capped_abs_prox(1.0, 1.0, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(capped_abs_prox(1.0, 1.0, 3.0), 3.0);
  EXPECT_DOUBLE_EQ(capped_abs_prox(1.0, 1.0, 0.5), 0.0);
  const auto h = capped_abs_sum(1, 1.0);
  EXPECT_NEAR(grid_prox_1d(h, 1.0, 3.0), 3.0, 1e-8);
  EXPECT_NEAR(grid_prox_1d(h, 1.0, 0.5), 0.0, 1e-8);
}

TEST(CappedAbsProx, TieGoesToSmallestMagnitude) {
  // theta = mu = 1, u = 1.5: t = 0.5 (cost 1) and t = 1.5 (cost 1) tie.
  const auto c = capped_abs_prox_detail(1.0, 1.0, 1.5);
  EXPECT_TRUE(c.tie);
  EXPECT_DOUBLE_EQ(c.point, 0.5);
  EXPECT_TRUE(prox(capped_abs_sum(1, 1.0), 1.0, vec({1.5})).multiplicity_hint);
  EXPECT_DOUBLE_EQ(capped_abs_prox(1.0, 1.0, -1.5), -0.5);
}

TEST(CappedAbsProx, MatchesGridOnRandomInputs) {
  CounterRng rng(21);
  for (int i = 0; i < 60; ++i) {
    const double theta = rng.uniform(0.2, 2.0);
    const double mu = rng.uniform(0.1, 2.0);
    const double u = rng.uniform(-4.0, 4.0);
    const auto h = capped_abs_sum(1, theta);
    const double v = capped_abs_prox(theta, mu, u);
    const double g = grid_prox_1d(h, mu, u);
    // Compare objective values (robust at ties) and points away from ties.
    EXPECT_NEAR(envelope_at(h, mu, vec({u}), vec({v})),
                envelope_at(h, mu, vec({u}), vec({g})), 1e-9);
    if (!capped_abs_prox_detail(theta, mu, u).tie) {
      EXPECT_NEAR(v, g, 1e-6);
    }
  }
}

TEST(Moreau, ReferenceValues) {
  EXPECT_DOUBLE_EQ(moreau_value(l1_norm(1), 1.0, vec({0.0})), 0.0);
  EXPECT_DOUBLE_EQ(moreau_value(l1_norm(1), 1.0, vec({3.0})), 2.5);
  EXPECT_DOUBLE_EQ(moreau_value(capped_abs_sum(1, 1.0), 1.0, vec({3.0})), 1.0);
  // Grid oracle for the same values.
  const auto grid_env = [](const OuterFunction& h, double u) {
    return orc::grid_minimize([&](const Vec& y) { return envelope_at(h, 1.0, vec({u}), y); },
                              orc::GridSpec::box(1))
        .value;
  };
  EXPECT_NEAR(grid_env(l1_norm(1), 3.0), 2.5, 1e-10);
  EXPECT_NEAR(grid_env(capped_abs_sum(1, 1.0), 3.0), 1.0, 1e-10);
}

TEST(Moreau, EnvelopeSandwich) {
  CounterRng rng(22);
  for (Eigen::Index m : {1, 2, 3}) {
    for (const auto& h : shipped(m)) {
      for (int i = 0; i < 100; ++i) {
        const double mu = rng.uniform(0.05, 3.0);
        const Vec u = rng.uniform_vec(m, -5, 5);
        const double env = moreau_value(h, mu, u);
        EXPECT_LE(env, h(u) + 1e-12) << h.name;
        if (std::isfinite(h.lower_bound)) {
          EXPECT_GE(env, h.lower_bound - 1e-12) << h.name;
        }
      }
    }
  }
}

TEST(Prox, OptimalAgainstRandomCompetitors) {
  CounterRng rng(23);
  for (Eigen::Index m : {1, 2, 4}) {
    for (const auto& h : shipped(m)) {
      for (int i = 0; i < 30; ++i) {
        const double mu = rng.uniform(0.05, 3.0);
        const Vec u = rng.uniform_vec(m, -5, 5);
        const auto r = prox(h, mu, u);
        EXPECT_NEAR(r.objective, envelope_at(h, mu, u, r.point), 1e-12);
        for (int j = 0; j < 100; ++j) {
          const Vec w = u + rng.uniform_vec(m, -3, 3);
          EXPECT_LE(r.objective, envelope_at(h, mu, u, w) + 1e-12) << h.name;
        }
      }
    }
  }
}

TEST(Prox, OptimalityInclusion) {
  // (u - v)/mu lies in the (convexified) subdifferential of h at v.
  CounterRng rng(24);
  for (Eigen::Index m : {1, 2, 3}) {
    for (const auto& h : shipped(m)) {
      for (int i = 0; i < 100; ++i) {
        const double mu = rng.uniform(0.05, 3.0);
        const Vec u = rng.uniform_vec(m, -5, 5);
        const Vec v = prox(h, mu, u).point;
        EXPECT_LE(h.subdiff_distance(v, (u - v) / mu), 1e-9) << h.name;
      }
    }
  }
}

TEST(DcDecomposition, ReferenceValues) {
  const Vec u = vec({3.0, -1.0});
  EXPECT_DOUBLE_EQ(dc_decomposition_G(zero_outer(2), 1.0, u), u.squaredNorm() / 2.0);
  EXPECT_DOUBLE_EQ(dc_decomposition_G(l1_norm(1), 1.0, vec({3.0})), 2.0);
  EXPECT_DOUBLE_EQ(dc_decomposition_G(capped_abs_sum(1, 1.0), 1.0, vec({0.0})), 0.0);
}

TEST(DcDecomposition, IdentityAgainstGridMaximum) {
  CounterRng rng(25);
  for (Eigen::Index m : {1, 2}) {
    const auto spec =
        m == 1 ? orc::GridSpec::box(1) : orc::GridSpec::box(2, -6.0, 6.0, 201, 5);
    for (const auto& h : shipped(m)) {
      for (int i = 0; i < (m == 1 ? 20 : 4); ++i) {
        const double mu = rng.uniform(0.2, 2.0);
        const Vec u = rng.uniform_vec(m, -3, 3);
        const double G = orc::grid_maximize_G(h, mu, u, spec);
        EXPECT_NEAR(u.squaredNorm() / (2.0 * mu) - G - moreau_value(h, mu, u), 0.0, 1e-8)
            << h.name;
      }
    }
  }
}

TEST(ProxLinear, SoftThresholdCase) {
  const auto h = l1_norm(2);
  ProxLinearSubproblem sub{&h, Mat::Identity(2, 2), Vec::Zero(2), Vec::Zero(2),
                           vec({3.0, -0.5}), 1.0};
  const auto sol = solve_prox_linear(sub);
  EXPECT_TRUE(sol.exact);
  EXPECT_TRUE(sol.x.isApprox(vec({2.0, 0.0})));
}

TEST(ProxLinear, AnchorAtModelMinimizer) {
  const auto h = l1_norm(2);
  Mat A(2, 3);
  A << 1.0, 2.0, 0.0, -0.5, 0.3, 1.0;
  const Vec anchor = vec({0.4, -0.7, 1.1});
  ProxLinearSubproblem sub{&h, A, -A * anchor, Vec::Zero(3), anchor, 0.7};
  EXPECT_LE((solve_prox_linear(sub).x - anchor).norm(), 1e-9);
  SubproblemOptions forced;
  forced.force_fallback = true;
  EXPECT_LE((solve_prox_linear(sub, forced).x - anchor).norm(), 1e-8);
}

TEST(ProxLinear, ScalarOuterClosedForm) {
  // m = 1 always qualifies for the closed form.
  const auto h = abs_value();
  Mat A(1, 2);
  A << 0.6, -0.8;
  ProxLinearSubproblem sub{&h, A, vec({0.3}), vec({0.1, 0.2}), vec({1.0, -2.0}), 0.5};
  const auto sol = solve_prox_linear(sub);
  EXPECT_TRUE(sol.exact);
  const Vec ref = orc::grid_minimize([&](const Vec& x) { return sub.objective(x); },
                                     orc::GridSpec::box(2, -6, 6, 601, 4))
                      .point;
  EXPECT_LE((sol.x - ref).norm(), 1e-6);
}

TEST(ProxLinear, MaxCoordinateFallbackMatchesGrid) {
  const auto h = max_coordinate(2);
  const double c = std::cos(0.7), s = std::sin(0.7);
  Mat A(2, 2);
  A << c, -s, s, c;
  ProxLinearSubproblem sub{&h, A, vec({0.2, -0.4}), vec({0.3, -0.1}), vec({0.5, 0.8}), 0.6};
  SubproblemOptions forced;
  forced.force_fallback = true;
  const auto sol = solve_prox_linear(sub, forced);
  EXPECT_FALSE(sol.exact);
  EXPECT_LE(sol.gap, forced.tol);
  const Vec ref = orc::grid_minimize([&](const Vec& x) { return sub.objective(x); },
                                     orc::GridSpec::box(2, -6, 6, 601, 4))
                      .point;
  EXPECT_LE((sol.x - ref).norm(), 1e-6);
  EXPECT_LE((solve_prox_linear(sub).x - ref).norm(), 1e-6);
}

TEST(ProxLinear, MatchesAdmmReferenceOnRandomInstances) {
  CounterRng rng(26);
  for (int i = 0; i < 40; ++i) {
    const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng.uniform_int(0, 2));
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng.uniform_int(0, 2));
    const ConvexOuter h = (i % 2 == 0) ? l1_norm(m) : max_coordinate(m);
    ProxLinearSubproblem sub;
    sub.outer = &h;
    sub.A = Mat(m, d);
    for (Eigen::Index r = 0; r < m; ++r)
      for (Eigen::Index q = 0; q < d; ++q) sub.A(r, q) = rng.uniform(-1.5, 1.5);
    sub.b = rng.uniform_vec(m, -1, 1);
    sub.linear = rng.uniform_vec(d, -1, 1);
    sub.anchor = rng.uniform_vec(d, -2, 2);
    sub.step = rng.uniform(0.1, 1.5);
    const auto sol = solve_prox_linear(sub);
    const Vec ref = orc::subproblem_reference(h, sub.A, sub.b, sub.linear, sub.anchor, sub.step);
    EXPECT_LE((sol.x - ref).norm(), 1e-6) << "instance " << i << " exact=" << sol.exact;
    EXPECT_LE(sub.objective(sol.x), sub.objective(ref) + 1e-9);
  }
}

TEST(ProxLinear, RejectsBadInput) {
  const auto h = l1_norm(2);
  ProxLinearSubproblem sub{&h, Mat::Identity(2, 2), Vec::Zero(2), Vec::Zero(2), Vec::Zero(2), 0.0};
  EXPECT_THROW(solve_prox_linear(sub), InvalidArgument);
  sub.step = 1.0;
  sub.A = Mat::Identity(3, 2);
  EXPECT_THROW(solve_prox_linear(sub), InvalidArgument);
  sub.A = Mat::Identity(2, 2);
  EXPECT_THROW(h.affine_prox(1.0, (Mat(2, 2) << 1, 1, 0, 1).finished(), Vec::Zero(2),
                             Vec::Zero(2)),
               InvalidArgument);
}
