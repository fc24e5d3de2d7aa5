#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "palace/cover.hpp"

using namespace palace;

TEST(Fps, LineLikePoints) {
  // High persistence keeps the diagonal branch out of the way, so the
  // metric is l_inf along a line.
  std::vector<DiagramPoint> pts{{0, 100}, {1, 101}, {9, 109}, {10, 110}};
  auto r = fps_place(pts, 2, 0);
  ASSERT_EQ(r.indices.size(), 2u);
  EXPECT_EQ(r.indices[1], 3u);
  EXPECT_EQ(r.covering_radius, 1.0);
  EXPECT_EQ(oracle::kcenter_brute(pts, 2), 1.0);
}

TEST(Fps, NearDiagonalPointsAreAllClose) {
  // Persistence 0.01: every pair is 0.005 apart through the diagonal, so
  // the second pick falls to the lowest index among the tied points.
  std::vector<DiagramPoint> pts{{0, 0.01}, {1, 1.01}, {9, 9.01}, {10, 10.01}};
  auto r = fps_place(pts, 2, 0);
  EXPECT_EQ(r.indices[1], 1u);
  EXPECT_NEAR(r.covering_radius, 0.005, 1e-12);
}

TEST(Fps, AllPointsAndSingleSeed) {
  Rng rng(2);
  std::vector<DiagramPoint> pts;
  for (int i = 0; i < 9; ++i) pts.push_back(oracle::random_point(rng));
  auto all = fps_place(pts, pts.size(), 0);
  EXPECT_EQ(all.covering_radius, 0.0);
  auto one = fps_place(pts, 1, 4);
  EXPECT_EQ(one.indices[0], 4u);
  double far = 0.0;
  for (const auto& p : pts) far = std::max(far, point_bottleneck(p, pts[4]));
  EXPECT_EQ(one.covering_radius, far);
  EXPECT_TRUE(std::isinf(one.insertion_distances[0]));
  EXPECT_THROW(fps_place(pts, 10, 0), std::invalid_argument);
}

TEST(Fps, TwoApproximationAndMonotoneInsertions) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::size_t n = 2 + static_cast<std::size_t>(rng.below(11));
    std::size_t K = 1 + static_cast<std::size_t>(rng.below(std::min<std::size_t>(4, n)));
    std::vector<DiagramPoint> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(oracle::random_point(rng));
    auto r = fps_place(pts, K, 0);
    EXPECT_LE(r.covering_radius, 2.0 * oracle::kcenter_brute(pts, K));
    for (std::size_t i = 1; i < r.insertion_distances.size(); ++i) {
      EXPECT_LE(r.insertion_distances[i], r.insertion_distances[i - 1]);
    }
    EXPECT_DOUBLE_EQ(r.covering_radius, covering_radius(r.positions, pts));
  }
}

TEST(ClassAwareFps, Budgets) {
  std::map<int, std::size_t> two{{0, 5}, {1, 5}};
  EXPECT_EQ(class_budgets(two, 4), (std::map<int, std::size_t>{{0, 2}, {1, 2}}));
  std::map<int, std::size_t> five;
  for (int c = 0; c < 5; ++c) five[c] = 100;
  for (const auto& [c, b] : class_budgets(five, 200)) EXPECT_EQ(b, 40u);
  std::map<int, std::size_t> three{{0, 10}, {1, 10}, {2, 10}};
  EXPECT_EQ(class_budgets(three, 7), (std::map<int, std::size_t>{{0, 3}, {1, 2}, {2, 2}}));
}

TEST(ClassAwareFps, ClampAndShortfall) {
  std::map<int, std::size_t> avail{{0, 1}, {1, 10}, {2, 10}};
  auto b = class_budgets(avail, 9);
  EXPECT_EQ(b.at(0), 1u);
  EXPECT_EQ(b.at(1) + b.at(2), 8u);
  EXPECT_EQ(b.at(1), 4u);

  std::map<int, std::vector<DiagramPoint>> pts{{0, {{0, 1}}}, {1, {{0, 2}, {0, 3}}}};
  auto r = class_aware_fps(pts, 5);
  EXPECT_TRUE(r.short_of_budget);
  EXPECT_EQ(r.positions.size(), 3u);
  EXPECT_THROW(class_aware_fps(pts, 1), std::invalid_argument);
}

TEST(ClassAwareFps, SeedsAtFirstPointOfEachClass) {
  std::map<int, std::vector<DiagramPoint>> pts{{0, {{0, 1}, {0, 5}, {3, 9}}}, {1, {{1, 2}, {4, 8}}}};
  auto r = class_aware_fps(pts, 4);
  ASSERT_EQ(r.positions.size(), 4u);
  EXPECT_EQ(r.positions[0], (DiagramPoint{0, 1}));
  EXPECT_EQ(r.positions[2], (DiagramPoint{1, 2}));
}

TEST(AssignRadii, ClipsAndFormula) {
  std::vector<DiagramPoint> two{{0, 10}, {1, 10}};
  EXPECT_EQ(assign_radii(two, 0.0, 1.0), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(assign_radii(two, 1e9, 1.0), (std::vector<double>{4.0, 4.0}));
  EXPECT_EQ(assign_radii(two, 0.75, 1.0), (std::vector<double>{0.75, 0.75}));
  EXPECT_EQ(assign_radii(std::vector<DiagramPoint>{{0, 1}}, 1.0, 2.0), (std::vector<double>{1.0}));
}

TEST(UniformGrid, ExcludesDiagonal) {
  auto g = uniform_grid_positions(2.0, 1.0);
  EXPECT_EQ(g.full_count, 9u);
  EXPECT_EQ(g.positions.size(), 3u);
  for (const auto& p : g.positions) EXPECT_GT(p.death, p.birth);
  auto small = uniform_grid_positions(0.5, 1.0);
  EXPECT_TRUE(small.positions.empty());
  EXPECT_THROW(uniform_grid(0.5, 1.0, 1.0), std::invalid_argument);
  auto cfg = uniform_grid(2.0, 1.0, 1.0);
  EXPECT_EQ(cfg.size(), 3u);
  EXPECT_EQ(cfg[0].radius, 1.5);
  EXPECT_NEAR(cfg[0].weight, 1.0 / std::sqrt(3.0), 1e-15);
}

TEST(UniformGrid, OffsetCellCenters) {
  auto g = uniform_grid_positions(1.0, 0.25, GridLayout::Offset);
  EXPECT_EQ(g.full_count, 16u);
  ASSERT_EQ(g.positions.size(), 6u);
  EXPECT_EQ(g.positions[0], (DiagramPoint{0.125, 0.375}));
}

TEST(UniformGrid, MatchedSpacing) {
  // Off-diagonal counts are 1, 3, 6, 10, 15: a budget of 11 gets 10.
  double L = 8.4;
  double R = matched_grid_spacing(L, 11);
  EXPECT_EQ(uniform_grid_positions(L, R).positions.size(), 10u);
  double Ro = matched_grid_spacing(L, 11, GridLayout::Offset);
  EXPECT_EQ(uniform_grid_positions(L, Ro, GridLayout::Offset).positions.size(), 10u);
  EXPECT_EQ(uniform_grid_positions(L, matched_grid_spacing(L, 15)).positions.size(), 15u);
}

TEST(Lebesgue, HandCases) {
  auto cfg = LandmarkConfiguration::equal_weights(std::vector<DiagramPoint>{{0, 4}}, std::vector<double>{1.5}, 1.0);
  EXPECT_EQ(lebesgue_number(cfg, std::vector<DiagramPoint>{{0, 4}}), 1.5);
  EXPECT_EQ(lebesgue_number(cfg, std::vector<DiagramPoint>{{1.5, 4}}), 0.0);
  EXPECT_THROW(lebesgue_number(cfg, std::vector<DiagramPoint>{}), std::invalid_argument);
}

TEST(Lebesgue, GridGivesSpacing) {
  const double L = 4.0, R = 0.5;
  auto cfg = uniform_grid(L, R, 1.0);
  std::vector<DiagramPoint> support;
  for (int i = 0; i < 8; ++i) {
    for (int j = i + 1; j < 8; ++j) support.push_back({(i + 0.5) * R, (j + 0.5) * R});
  }
  EXPECT_NEAR(lebesgue_number(cfg, support), R, 1e-12);
}

TEST(Lebesgue, EqualsLargestUniformShrink) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    std::vector<DiagramPoint> pos, support;
    std::vector<double> radii;
    for (int k = 0; k < 6; ++k) {
      pos.push_back(oracle::random_point(rng));
      radii.push_back(0.3 + rng.uniform());
    }
    for (int i = 0; i < 15; ++i) support.push_back(oracle::random_point(rng));
    auto cfg = LandmarkConfiguration::equal_weights(pos, radii, 1.0);
    double lam = lebesgue_number(cfg, support);
    auto covered = [&](double shrink) {
      for (const auto& x : support) {
        bool any = false;
        for (std::size_t k = 0; k < pos.size(); ++k) any = any || radii[k] - point_bottleneck(pos[k], x) > shrink;
        if (!any) return false;
      }
      return true;
    };
    if (lam > 0.0) {
      EXPECT_TRUE(covered(lam * (1 - 1e-9)));
      EXPECT_FALSE(covered(lam));
    } else {
      EXPECT_FALSE(covered(0.0));
    }
  }
}

TEST(Admissibility, FpsCoverWithHalfTauRadii) {
  Rng rng(6);
  const double tau = 1.0;
  for (int t = 0; t < 50; ++t) {
    std::vector<DiagramPoint> support;
    for (int i = 0; i < 30; ++i) support.push_back(oracle::random_point(rng));
    auto cfg = oracle::admissible_config(support, tau);
    auto rep = check_admissibility(cfg, support);
    double delta = covering_radius(cfg.positions(), support);
    EXPECT_NEAR(rep.lebesgue, tau / 2 - delta, 1e-12);
    EXPECT_TRUE(rep.admissible);
    EXPECT_LE(rep.lebesgue, cfg.max_radius());
    EXPECT_LE(cfg.max_radius(), tau);
  }
}

TEST(Admissibility, SmallRadiiFailShrinkCondition) {
  std::vector<DiagramPoint> pos{{0, 1}, {0, 2}};
  auto cfg = LandmarkConfiguration::equal_weights(pos, std::vector<double>{0.2, 0.2}, 1.0);
  auto rep = check_admissibility(cfg, pos);
  EXPECT_FALSE(rep.cond_shrink);
  EXPECT_FALSE(rep.admissible);
}

TEST(Admissibility, GridWindow) {
  const double tau = 1.0, L = 4.0;
  for (double R : {0.25, 0.3, 0.4, 0.5}) {
    auto cfg = uniform_grid(L, R, tau);
    std::vector<DiagramPoint> support;
    int n = static_cast<int>(std::floor(L / R + 1e-9));
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) support.push_back({(i + 0.5) * R, (j + 0.5) * R});
    }
    auto rep = check_admissibility(cfg, support);
    EXPECT_TRUE(rep.admissible) << "R = " << R;
  }
  auto wide = uniform_grid(L, 0.8, tau);
  std::vector<DiagramPoint> s{{0.4, 1.2}};
  EXPECT_FALSE(check_admissibility(wide, s).cond_radius);
}

TEST(Certificates, RhoNuForms) {
  std::vector<DiagramPoint> pos{{0, 1}, {0, 2}, {0, 3}, {0, 4}};
  auto cfg = LandmarkConfiguration::equal_weights(pos, std::vector<double>(4, 0.5), 1.0);
  auto r = rho_nu(cfg);
  EXPECT_FALSE(r.degenerate);
  EXPECT_DOUBLE_EQ(r.value, 1.0 / (4.0 * 2.0));
  auto tiny = LandmarkConfiguration::equal_weights(pos, std::vector<double>(4, 0.1), 1.0);
  EXPECT_TRUE(rho_nu(tiny).degenerate);
  EXPECT_EQ(rho_nu(tiny).value, 0.0);
}

TEST(Certificates, RhoEffWithUniformRadii) {
  Rng rng(8);
  std::vector<DiagramPoint> support;
  for (int i = 0; i < 25; ++i) support.push_back(oracle::random_point(rng));
  auto fps = fps_place(support, 8, 0);
  const double r = 1.2;
  auto cfg = LandmarkConfiguration::equal_weights(fps.positions, std::vector<double>(8, r), 1.0);
  double delta = covering_radius(fps.positions, support);
  EXPECT_NEAR(rho_eff(cfg, support).value, (r - delta) / std::sqrt(8.0), 1e-12);
}

TEST(Certificates, EqualWeightsMaximizeMinimum) {
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    std::size_t K = 1 + static_cast<std::size_t>(rng.below(20));
    std::vector<double> w(K);
    double sq = 0;
    for (auto& x : w) {
      x = rng.uniform() + 1e-3;
      sq += x * x;
    }
    double mn = std::numeric_limits<double>::infinity();
    for (auto& x : w) mn = std::min(mn, x / std::sqrt(sq));
    EXPECT_LE(mn, 1.0 / std::sqrt(static_cast<double>(K)) + 1e-15);
  }
}

TEST(Budget, Bounds) {
  auto b = budget_bounds(1.0, 8.0, 0.5);
  EXPECT_EQ(b.k_adapt_max, 64u);
  EXPECT_EQ(b.k_unif_min, 1024u);
  EXPECT_DOUBLE_EQ(b.ratio, 1.0 / 16.0);
  EXPECT_TRUE(b.informative);
  auto same = budget_bounds(2.0, 2.0, 0.5);
  EXPECT_DOUBLE_EQ(same.ratio, 4.0);
  EXPECT_FALSE(same.informative);
  EXPECT_THROW(budget_bounds(1.0, 8.0, 1e-300), std::overflow_error);
}

TEST(TauStrategies, Values) {
  std::vector<PersistenceDiagram> d{PersistenceDiagram({{0, 2}, {0, 4}}), PersistenceDiagram({{0, 6}})};
  EXPECT_DOUBLE_EQ(tau_median_half_persistence(d), 2.0);
  EXPECT_DOUBLE_EQ(tau_mean_strongest_half_persistence(d), 2.5);
  std::vector<std::pair<std::size_t, std::size_t>> pairs{{0, 1}};
  EXPECT_DOUBLE_EQ(tau_bottleneck_quantile(d, pairs, 0.25), bottleneck_distance(d[0], d[1]).distance);
}

TEST(NonInterference, Cases) {
  PersistenceDiagram A({{0, 100}, {50, 150}});
  auto same = audit_noninterference(A, A);
  EXPECT_EQ(same.status, AuditStatus::ZeroDistance);
  EXPECT_FALSE(same.passes);

  auto single = audit_noninterference(PersistenceDiagram({{0, 100}}), PersistenceDiagram({{1, 100}}));
  EXPECT_EQ(single.status, AuditStatus::Vacuous);
  EXPECT_TRUE(single.passes);

  PersistenceDiagram B({{1, 100}, {50, 151}});
  auto r = audit_noninterference(A, B);
  EXPECT_EQ(r.status, AuditStatus::Audited);
  EXPECT_EQ(r.distance, 1.0);
  EXPECT_TRUE(r.passes);
  EXPECT_TRUE(r.within_scale_ok);
  // Closest cross pair is (50, 150) against (1, 100), 50 apart.
  EXPECT_DOUBLE_EQ(r.min_cross_ratio, 50.0);

  auto uneven = audit_noninterference(A, PersistenceDiagram({{0, 100}}));
  EXPECT_EQ(uneven.status, AuditStatus::NotAuditable);
}

TEST(NonInterference, CrowdedPairFails) {
  PersistenceDiagram A({{0, 100}, {1, 100}});
  PersistenceDiagram B({{0, 100.5}, {1, 100.5}});
  auto r = audit_noninterference(A, B);
  EXPECT_EQ(r.status, AuditStatus::Audited);
  EXPECT_FALSE(r.passes);
  EXPECT_FALSE(r.within_scale_ok);
}

TEST(CertificateAudit, ExcludesCloseAndBoundsSeparated) {
  const double tau = 1.0;
  PersistenceDiagram A({{0, 20}}), B({{3, 23}}), C({{0.2, 20}});
  std::vector<DiagramPoint> support{A[0], B[0], C[0]};
  auto cfg = oracle::admissible_config(support, tau);
  std::vector<std::pair<PersistenceDiagram, PersistenceDiagram>> pairs{{A, B}, {A, C}};
  auto r = audit_certificate(pairs, cfg);
  EXPECT_EQ(r.n_pairs, 2u);
  EXPECT_EQ(r.n_tau, 1u);
  EXPECT_GE(r.min, 1.0);
  EXPECT_EQ(r.bound_pct, 100.0);

  auto tiny = LandmarkConfiguration::equal_weights(support, std::vector<double>(3, 0.1), tau);
  EXPECT_THROW(audit_certificate(pairs, tiny), std::invalid_argument);
}
