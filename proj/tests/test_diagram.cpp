#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "palace/diagram.hpp"
#include "palace/matching.hpp"

using namespace palace;

TEST(PointBottleneck, HandValues) {
  EXPECT_EQ(point_bottleneck({0, 4}, {0, 4}), 0.0);
  // l_inf = 1 beats the diagonal branch max(2, 1.5).
  EXPECT_EQ(point_bottleneck({0, 4}, {1, 4}), 1.0);
  // Both near the diagonal: max(0.1, 0.1) beats l_inf = 5.
  EXPECT_NEAR(point_bottleneck({0, 0.2}, {5, 5.2}), 0.1, 1e-15);
}

TEST(PointBottleneck, MetricAxioms) {
  Rng rng(1);
  for (int t = 0; t < 2000; ++t) {
    auto x = oracle::random_point(rng), y = oracle::random_point(rng), z = oracle::random_point(rng);
    double dxy = point_bottleneck(x, y);
    EXPECT_GE(dxy, 0.0);
    EXPECT_EQ(dxy, point_bottleneck(y, x));
    EXPECT_EQ(point_bottleneck(x, x), 0.0);
    EXPECT_LE(point_bottleneck(x, z), dxy + point_bottleneck(y, z) + 1e-12);
  }
}

TEST(Diagram, RejectsBadPoints) {
  PersistenceDiagram d;
  EXPECT_THROW(d.push_back({1.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(d.push_back({std::nan(""), 1.0}), std::invalid_argument);
  EXPECT_NO_THROW(d.push_back({1.0, 1.0}));
}

TEST(Matcher, SmallPerfectMatching) {
  BipartiteMatcher m(3, 3);
  m.add_edge(0, 0);
  m.add_edge(0, 1);
  m.add_edge(1, 0);
  m.add_edge(2, 1);
  m.add_edge(2, 2);
  EXPECT_EQ(m.solve(), 3u);
  BipartiteMatcher deficient(2, 2);
  deficient.add_edge(0, 0);
  deficient.add_edge(1, 0);
  EXPECT_EQ(deficient.solve(), 1u);
  EXPECT_THROW(deficient.add_edge(2, 0), std::out_of_range);
}

TEST(Bottleneck, EmptyAgainstSinglePoint) {
  PersistenceDiagram A({{0, 2}});
  PersistenceDiagram B;
  auto r = bottleneck_distance(A, B);
  EXPECT_EQ(r.distance, 1.0);
  ASSERT_EQ(r.a_to_b.size(), 1u);
  EXPECT_EQ(r.a_to_b[0], BottleneckMatching::kDiagonal);
}

TEST(Bottleneck, IdenticalDiagramsMatchByIdentity) {
  PersistenceDiagram A({{0, 2}, {1, 5}, {0.5, 0.7}});
  auto r = bottleneck_distance(A, A);
  EXPECT_EQ(r.distance, 0.0);
  for (std::size_t i = 0; i < A.size(); ++i) EXPECT_EQ(r.a_to_b[i], static_cast<int>(i));
}

TEST(Bottleneck, HandExample) {
  PersistenceDiagram A({{0, 2}, {0, 4}});
  PersistenceDiagram B({{0.5, 2}, {0, 4}});
  EXPECT_EQ(bottleneck_distance(A, B).distance, 0.5);
  EXPECT_EQ(oracle::bottleneck_brute(A, B), 0.5);
}

TEST(Bottleneck, MatchesBruteForce) {
  Rng rng(7);
  for (int t = 0; t < 200; ++t) {
    auto A = oracle::random_diagram(rng, 5);
    auto B = oracle::random_diagram(rng, 5);
    EXPECT_EQ(bottleneck_distance(A, B).distance, oracle::bottleneck_brute(A, B));
  }
}

TEST(Bottleneck, WitnessAchievesDistance) {
  Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    auto A = oracle::random_diagram(rng, 6);
    auto B = oracle::random_diagram(rng, 6);
    auto r = bottleneck_distance(A, B);
    double worst = 0.0;
    std::vector<int> hit(B.size(), 0);
    for (std::size_t i = 0; i < A.size(); ++i) {
      int j = r.a_to_b[i];
      if (j == BottleneckMatching::kDiagonal) {
        worst = std::max(worst, A[i].persistence() / 2.0);
      } else {
        ++hit[static_cast<std::size_t>(j)];
        EXPECT_EQ(r.b_to_a[static_cast<std::size_t>(j)], static_cast<int>(i));
        worst = std::max(worst, linf(A[i], B[static_cast<std::size_t>(j)]));
      }
    }
    for (std::size_t j = 0; j < B.size(); ++j) {
      EXPECT_LE(hit[j], 1);
      if (!hit[j]) worst = std::max(worst, B[j].persistence() / 2.0);
    }
    EXPECT_EQ(worst, r.distance);
  }
}

TEST(Bottleneck, AddingPointCostsAtMostHalfItsPersistence) {
  Rng rng(9);
  for (int t = 0; t < 200; ++t) {
    auto A = oracle::random_diagram(rng, 6);
    auto B = A;
    auto p = oracle::random_point(rng);
    B.push_back(p);
    EXPECT_LE(bottleneck_distance(A, B).distance, p.persistence() / 2.0);
  }
}

TEST(Bottleneck, SingletonsAgreeWithPointMetric) {
  Rng rng(10);
  for (int t = 0; t < 500; ++t) {
    auto x = oracle::random_point(rng), y = oracle::random_point(rng);
    EXPECT_EQ(bottleneck_distance(PersistenceDiagram({x}), PersistenceDiagram({y})).distance,
              point_bottleneck(x, y));
  }
}

TEST(Bottleneck, RejectsInfiniteDeath) {
  PersistenceDiagram A({{0, std::numeric_limits<double>::infinity()}});
  EXPECT_THROW(bottleneck_distance(A, A), std::invalid_argument);
}

TEST(TopFilter, KeepsMostPersistent) {
  PersistenceDiagram A({{0, 1}, {0, 3}, {0, 2}});
  auto F = top_persistence_filter(A, 2);
  EXPECT_EQ(F, PersistenceDiagram({{0, 3}, {0, 2}}));
}

TEST(TopFilter, SmallDiagramUnchanged) {
  PersistenceDiagram A({{0, 1}, {2, 3}}, 4, "x");
  EXPECT_EQ(top_persistence_filter(A, 2), A);
  EXPECT_EQ(top_persistence_filter(A, 5), A);
}

TEST(TopFilter, TieGoesToSmallerBirth) {
  PersistenceDiagram A({{1, 3}, {0, 2}});
  EXPECT_EQ(top_persistence_filter(A, 1), PersistenceDiagram({{0, 2}}));
}

TEST(TopFilter, IdempotentAndSized) {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    auto A = oracle::random_diagram(rng, 12);
    std::size_t n = 1 + static_cast<std::size_t>(rng.below(8));
    auto F = top_persistence_filter(A, n);
    EXPECT_EQ(F.size(), std::min(A.size(), n));
    EXPECT_EQ(top_persistence_filter(F, n), F);
  }
  EXPECT_THROW(top_persistence_filter(PersistenceDiagram(), 0), std::invalid_argument);
}

TEST(DropDegenerate, RemovesDiagonalPoints) {
  PersistenceDiagram A({{0, 0}, {1, 2}, {3, 3}});
  EXPECT_EQ(drop_degenerate(A), PersistenceDiagram({{1, 2}}));
}
