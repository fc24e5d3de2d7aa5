#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "oracles.hpp"
#include "palace/select.hpp"

using namespace palace;

namespace {

std::vector<int> random_labels(Rng& rng, std::size_t m, int k) {
  std::vector<int> y(m);
  for (std::size_t i = 0; i < m; ++i) y[i] = static_cast<int>(i % static_cast<std::size_t>(k));
  rng.shuffle(y);
  return y;
}

/// Pooled-trace Fisher ratio from explicit feature coordinates.
double fisher_via_features(const Eigen::MatrixXd& G, const std::vector<int>& labels) {
  Eigen::MatrixXd F = feature_coordinates(G);
  std::map<int, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  std::vector<Eigen::RowVectorXd> mu;
  double tr = 0.0;
  for (const auto& [c, idx] : groups) {
    Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(F.cols());
    for (auto i : idx) m += F.row(i);
    m /= static_cast<double>(idx.size());
    for (auto i : idx) tr += (F.row(i) - m).squaredNorm() / static_cast<double>(idx.size());
    mu.push_back(m);
  }
  tr /= static_cast<double>(groups.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < mu.size(); ++a) {
    for (std::size_t b = a + 1; b < mu.size(); ++b) best = std::min(best, (mu[a] - mu[b]).squaredNorm());
  }
  return best / (2.0 * tr);
}

std::vector<std::size_t> ranking(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  return idx;
}

}  // namespace

TEST(KernelMargin, OneDiagramPerClass) {
  Rng rng(1);
  Eigen::MatrixXd E = oracle::random_embeddings(rng, 2, 6);
  auto G = gram(E, 0.4).entries;
  std::vector<int> y{0, 1};
  EXPECT_NEAR(kernel_margin_hat(G, y), 0.5 * rkhs_distance(E.row(0), E.row(1), 0.4), 1e-12);
}

TEST(KernelMargin, IdenticalClassesGiveZero) {
  Rng rng(2);
  Eigen::MatrixXd half = oracle::random_embeddings(rng, 3, 4);
  Eigen::MatrixXd E(6, 4);
  E << half, half;
  auto G = gram(E, 0.5).entries;
  EXPECT_NEAR(kernel_margin_hat(G, std::vector<int>{0, 0, 0, 1, 1, 1}), 0.0, 1e-6);
}

TEST(KernelMargin, BlockFormulaMatchesFeatureMeans) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::size_t m = 4 + rng.below(17);
    int k = 2 + static_cast<int>(rng.below(3));
    auto y = random_labels(rng, m, k);
    auto G = oracle::random_psd(rng, static_cast<Eigen::Index>(m), 1 + static_cast<Eigen::Index>(rng.below(m)));
    EXPECT_NEAR(kernel_margin_hat(G, y), oracle::margin_via_features(G, y), 1e-8);
  }
}

TEST(Score, Values) {
  EXPECT_NEAR(score(0.2459, 400), 0.01230, 5e-6);
  EXPECT_EQ(score(0.0, 10), 0.0);
  EXPECT_EQ(score(0.37, 1), 0.37);
  EXPECT_LT(score(0.1, 9), score(0.2, 9));
}

TEST(FisherKer, Cases) {
  // Equal class means with spread.
  Eigen::MatrixXd X(4, 1);
  X << -1, 1, -1, 1;
  EXPECT_NEAR(fisher_ker(linear_gram(X), std::vector<int>{0, 0, 1, 1}), 0.0, 1e-12);
  // Zero spread, distinct means.
  Eigen::MatrixXd Z(4, 1);
  Z << 1, 1, 3, 3;
  EXPECT_TRUE(std::isinf(fisher_ker(linear_gram(Z), std::vector<int>{0, 0, 1, 1})));
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    auto y = random_labels(rng, 12, 2 + static_cast<int>(rng.below(2)));
    auto G = gram(oracle::random_embeddings(rng, 12, 5), 0.5).entries;
    EXPECT_NEAR(fisher_ker(G, y), fisher_via_features(G, y), 1e-8);
  }
}

TEST(Mahalanobis, FullIdentityShrinkageRanksLikeMargin) {
  Rng rng(5);
  auto y = random_labels(rng, 18, 3);
  std::vector<double> gam, mah;
  MahalanobisOptions opt;
  opt.shrinkage = 1.0;
  opt.target = ShrinkageTarget::Identity;
  for (int c = 0; c < 5; ++c) {
    auto G = gram(oracle::random_embeddings(rng, 18, 6, 1.0 + c), 0.3 + 0.2 * rng.uniform()).entries;
    gam.push_back(kernel_margin_hat(G, y));
    mah.push_back(mahalanobis_margin(G, y, opt));
    EXPECT_NEAR(mah.back(), 2.0 * gam.back(), 1e-8);
  }
  EXPECT_EQ(ranking(mah), ranking(gam));
}

TEST(Mahalanobis, IdenticalMeansGiveZero) {
  Eigen::MatrixXd X(6, 2);
  X << 1, 0, -1, 0, 0, 1, 1, 0, -1, 0, 0, 1;
  EXPECT_NEAR(mahalanobis_margin(linear_gram(X), std::vector<int>{0, 0, 0, 1, 1, 1}), 0.0, 1e-9);
}

TEST(Mahalanobis, SphericalGaussians) {
  Rng rng(6);
  const int per = 300, p = 3;
  const double s = 0.5, gap = 2.0;
  Eigen::MatrixXd X(2 * per, p);
  std::vector<int> y;
  for (int i = 0; i < 2 * per; ++i) {
    int c = i < per ? 0 : 1;
    y.push_back(c);
    for (int k = 0; k < p; ++k) X(i, k) = s * rng.normal() + (k == 0 && c == 1 ? gap : 0.0);
  }
  MahalanobisOptions opt;
  opt.shrinkage = 0.0;
  // Population value 2 gamma / s with gamma = gap / 2.
  EXPECT_NEAR(mahalanobis_margin(linear_gram(X), y, opt), gap / s, 0.1 * gap / s);
}

TEST(Mahalanobis, LedoitWolfIsClamped) {
  Rng rng(7);
  auto y = random_labels(rng, 20, 2);
  auto G = gram(oracle::random_embeddings(rng, 20, 8), 0.4).entries;
  auto r = mahalanobis_margin_detail(G, y);
  EXPECT_GE(r.shrinkage, 0.05);
  EXPECT_LE(r.shrinkage, 1.0);
  EXPECT_GT(r.margin, 0.0);
  EXPECT_THROW(mahalanobis_margin(G.topLeftCorner(3, 3), std::vector<int>{0, 1, 1}), std::invalid_argument);
}

TEST(Selectors, InvariantUnderRelabelingAndPermutation) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    auto y = random_labels(rng, 15, 3);
    Eigen::MatrixXd E = oracle::random_embeddings(rng, 15, 5);
    auto G = gram(E, 0.5).entries;
    std::vector<int> relabeled;
    for (int c : y) relabeled.push_back(c == 0 ? 9 : (c == 1 ? -4 : 2));
    EXPECT_NEAR(mahalanobis_margin(G, relabeled), mahalanobis_margin(G, y), 1e-9);

    std::vector<std::size_t> perm(15);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    Eigen::MatrixXd Gp(15, 15);
    std::vector<int> yp;
    for (std::size_t i = 0; i < 15; ++i) {
      yp.push_back(y[perm[i]]);
      for (std::size_t j = 0; j < 15; ++j) {
        Gp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            G(static_cast<Eigen::Index>(perm[i]), static_cast<Eigen::Index>(perm[j]));
      }
    }
    EXPECT_NEAR(kernel_margin_hat(Gp, yp), kernel_margin_hat(G, y), 1e-12);
    EXPECT_NEAR(fisher_ker(Gp, yp), fisher_ker(G, y), 1e-9);
    EXPECT_NEAR(mahalanobis_margin(Gp, yp), mahalanobis_margin(G, y), 1e-7);
  }
}

TEST(TauHat, Cases) {
  std::vector<PersistenceDiagram> d;
  std::vector<int> y;
  for (int i = 0; i < 6; ++i) {
    d.push_back(i % 2 ? PersistenceDiagram({{0, 4}}) : PersistenceDiagram({{0, 2}}));
    y.push_back(i % 2);
  }
  EXPECT_EQ(tau_hat(d, y, 50, 0.1, 3), 2.0);

  Rng rng(9);
  std::vector<PersistenceDiagram> r;
  std::vector<int> ry;
  for (int i = 0; i < 20; ++i) {
    r.push_back(oracle::random_diagram(rng, 4));
    ry.push_back(i % 3);
  }
  EXPECT_EQ(tau_hat(r, ry, 30, 0.2, 11), tau_hat(r, ry, 30, 0.2, 11));
  double all_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < r.size(); ++i) {
    for (std::size_t j = i + 1; j < r.size(); ++j) {
      if (ry[i] != ry[j]) all_min = std::min(all_min, bottleneck_distance(r[i], r[j]).distance);
    }
  }
  EXPECT_EQ(tau_hat(r, ry, 1000, 0.0, 1), all_min);
  EXPECT_GE(tau_hat(r, ry, 30, 0.0, 1), all_min);
  EXPECT_DOUBLE_EQ(rho_nu_hat(2.0, 4), 0.25);
}

TEST(Spearman, HandCases) {
  std::vector<double> a{1, 2, 3}, b{1, 3, 2}, up{10, 20, 30}, down{3, 2, 1};
  EXPECT_EQ(spearman(a, up), 1.0);
  EXPECT_EQ(spearman(a, down), -1.0);
  EXPECT_EQ(spearman(a, b), 0.5);
  std::vector<double> flat{1, 1, 1};
  EXPECT_TRUE(std::isnan(spearman(a, flat)));
  std::vector<double> ties{1, 2, 2, 3};
  EXPECT_EQ(average_ranks(ties), (std::vector<double>{1, 2.5, 2.5, 4}));
}

TEST(SweepCsv, Header) {
  std::ostringstream os;
  std::vector<SweepRow> rows{{"k10", {}, 0.9}};
  write_sweep_csv(os, rows);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')),
            "candidate_id,gamma_hat,score,fisher_ker,rho_mah,tau_hat,rho_nu_hat,cv_accuracy");
}
