// Closed-form selection statistics computed from a gram and class labels.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "palace/diagram.hpp"
#include "palace/numeric.hpp"
#include "palace/random.hpp"

namespace palace {

namespace detail {

inline std::map<int, std::vector<Eigen::Index>> group_by_class(const Eigen::MatrixXd& G, std::span<const int> labels) {
  if (G.rows() != G.cols() || G.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw std::invalid_argument("gram and labels disagree in size");
  }
  std::map<int, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  if (groups.size() < 2) throw std::invalid_argument("selection statistics need at least two classes");
  return groups;
}

inline double block_mean(const Eigen::MatrixXd& G, const std::vector<Eigen::Index>& a,
                         const std::vector<Eigen::Index>& b) {
  double s = 0.0;
  for (auto i : a) {
    for (auto j : b) s += G(i, j);
  }
  return s / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

/// ||mu_c - mu_c'||^2 for every ordered class pair c < c'.
inline std::vector<double> mean_gaps_sq(const Eigen::MatrixXd& G,
                                        const std::map<int, std::vector<Eigen::Index>>& groups) {
  std::vector<const std::vector<Eigen::Index>*> g;
  std::vector<double> self;
  for (const auto& [c, idx] : groups) {
    g.push_back(&idx);
    self.push_back(block_mean(G, idx, idx));
  }
  std::vector<double> out;
  for (std::size_t a = 0; a < g.size(); ++a) {
    for (std::size_t b = a + 1; b < g.size(); ++b) {
      out.push_back(std::max(0.0, self[a] + self[b] - 2.0 * block_mean(G, *g[a], *g[b])));
    }
  }
  return out;
}

}  // namespace detail

/// gamma_hat = 1/2 min_{c != c'} ||mu_c - mu_c'|| from gram block sums.
inline double kernel_margin_hat(const Eigen::MatrixXd& G, std::span<const int> labels) {
  auto gaps = detail::mean_gaps_sq(G, detail::group_by_class(G, labels));
  return 0.5 * std::sqrt(*std::min_element(gaps.begin(), gaps.end()));
}

inline double score(double gamma_hat, std::size_t K) {
  if (K == 0) throw std::invalid_argument("score: K must be >= 1");
  return gamma_hat / std::sqrt(static_cast<double>(K));
}

/// min ||mu_c - mu_c'||^2 / (2 tr(Sigma_bar)), with tr(Sigma_bar) the mean of
/// the biased per-class traces. Zero spread gives +inf (or 0 when the means
/// coincide as well).
inline double fisher_ker(const Eigen::MatrixXd& G, std::span<const int> labels) {
  auto groups = detail::group_by_class(G, labels);
  auto gaps = detail::mean_gaps_sq(G, groups);
  double num = *std::min_element(gaps.begin(), gaps.end());
  double tr = 0.0;
  for (const auto& [c, idx] : groups) {
    double diag = 0.0;
    for (auto i : idx) diag += G(i, i);
    tr += std::max(0.0, diag / static_cast<double>(idx.size()) - detail::block_mean(G, idx, idx));
  }
  tr /= static_cast<double>(groups.size());
  if (tr <= 0.0) return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return num / (2.0 * tr);
}

/// Explicit feature coordinates F with F F^T = G (eigenvectors scaled by
/// sqrt of the positive eigenvalues).
inline Eigen::MatrixXd feature_coordinates(const Eigen::MatrixXd& G) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
  const auto& ev = es.eigenvalues();
  double cut = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] > cut) keep.push_back(i);
  }
  Eigen::MatrixXd F(G.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    F.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(ev[keep[c]]);
  }
  return F;
}

enum class ShrinkageTarget {
  /// (tr S / p) I, the usual Ledoit-Wolf target.
  ScaledIdentity,
  /// I. At full shrinkage the margin becomes the plain mean gap.
  Identity,
};

struct MahalanobisOptions {
  /// Fixed intensity in [0, 1]; Ledoit-Wolf estimate when empty.
  std::optional<double> shrinkage;
  ShrinkageTarget target = ShrinkageTarget::ScaledIdentity;
  double min_shrinkage = 0.05;
  double max_shrinkage = 1.0;
};

struct MahalanobisResult {
  double margin = 0.0;
  double shrinkage = 0.0;
};

/// Ledoit-Wolf intensity toward the scaled identity for centered rows X with
/// covariance S = X^T X / n.
inline double ledoit_wolf_intensity(const Eigen::MatrixXd& X, const Eigen::MatrixXd& S) {
  const double n = static_cast<double>(X.rows());
  const double p = static_cast<double>(S.rows());
  const double mu = S.trace() / p;
  const double s_fro2 = S.squaredNorm();
  const double d2 = s_fro2 - 2.0 * mu * S.trace() + mu * mu * p;  // ||S - mu I||_F^2
  if (d2 <= 0.0) return 1.0;
  double b2 = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    Eigen::VectorXd x = X.row(i).transpose();
    double xx = x.squaredNorm();
    b2 += xx * xx - 2.0 * x.dot(S * x) + s_fro2;  // ||x x^T - S||_F^2
  }
  b2 /= n * n;
  return std::min(b2, d2) / d2;
}

/// Minimum over class pairs of sqrt(d^T S_lambda^{-1} d), where d is the
/// class-mean difference and S the pooled within-class covariance (classes
/// weighted equally), both in the feature coordinates of the gram.
inline MahalanobisResult mahalanobis_margin_detail(const Eigen::MatrixXd& G, std::span<const int> labels,
                                                   const MahalanobisOptions& opt = {}) {
  auto groups = detail::group_by_class(G, labels);
  if (labels.size() < groups.size() + 2) {
    throw std::invalid_argument("mahalanobis_margin: need at least k + 2 samples");
  }
  Eigen::MatrixXd F = feature_coordinates(G);
  const Eigen::Index p = F.cols();
  MahalanobisResult out;
  if (p == 0) return out;

  std::vector<Eigen::RowVectorXd> means;
  Eigen::MatrixXd centered(F.rows(), p);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(p, p);
  Eigen::Index row = 0;
  for (const auto& [c, idx] : groups) {
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(p);
    for (auto i : idx) mu += F.row(i);
    mu /= static_cast<double>(idx.size());
    means.push_back(mu);
    Eigen::MatrixXd Xc(static_cast<Eigen::Index>(idx.size()), p);
    for (std::size_t r = 0; r < idx.size(); ++r) Xc.row(static_cast<Eigen::Index>(r)) = F.row(idx[r]) - mu;
    S += Xc.transpose() * Xc / static_cast<double>(idx.size());
    centered.middleRows(row, Xc.rows()) = Xc;
    row += Xc.rows();
  }
  S /= static_cast<double>(groups.size());

  double lam = opt.shrinkage ? *opt.shrinkage : ledoit_wolf_intensity(centered, S);
  if (!opt.shrinkage) lam = std::clamp(lam, opt.min_shrinkage, opt.max_shrinkage);
  if (!(lam >= 0.0 && lam <= 1.0)) throw std::invalid_argument("mahalanobis_margin: shrinkage must lie in [0, 1]");
  out.shrinkage = lam;
  double scale = opt.target == ShrinkageTarget::Identity ? 1.0 : S.trace() / static_cast<double>(p);
  Eigen::MatrixXd Sl = (1.0 - lam) * S;
  Sl.diagonal().array() += lam * scale;

  Eigen::LLT<Eigen::MatrixXd> llt(Sl);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("mahalanobis_margin: shrunk covariance is not positive definite");
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < means.size(); ++a) {
    for (std::size_t b = a + 1; b < means.size(); ++b) {
      Eigen::VectorXd d = (means[a] - means[b]).transpose();
      Eigen::VectorXd z = llt.matrixL().solve(d);
      best = std::min(best, z.norm());
    }
  }
  out.margin = best;
  return out;
}

inline double mahalanobis_margin(const Eigen::MatrixXd& G, std::span<const int> labels,
                                 const MahalanobisOptions& opt = {}) {
  return mahalanobis_margin_detail(G, labels, opt).margin;
}

/// Quantile of bottleneck distances over `n_pairs` cross-class pairs drawn
/// without replacement (all pairs when fewer exist). Pairs are enumerated as
/// (i, j), i < j, in lexicographic order before sampling.
inline double tau_hat(std::span<const PersistenceDiagram> diagrams, std::span<const int> labels,
                      std::size_t n_pairs = 50, double q = 0.1, std::uint64_t seed = 0) {
  if (diagrams.size() != labels.size()) throw std::invalid_argument("tau_hat: diagrams and labels differ in length");
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < diagrams.size(); ++i) {
    for (std::size_t j = i + 1; j < diagrams.size(); ++j) {
      if (labels[i] != labels[j]) pairs.emplace_back(i, j);
    }
  }
  if (pairs.empty()) throw std::invalid_argument("tau_hat: no cross-class pairs");
  Rng rng(seed);
  const std::size_t n = std::min(n_pairs, pairs.size());
  for (std::size_t t = 0; t < n; ++t) {
    std::size_t j = t + static_cast<std::size_t>(rng.below(pairs.size() - t));
    std::swap(pairs[t], pairs[j]);
  }
  std::vector<double> d;
  for (std::size_t t = 0; t < n; ++t) {
    d.push_back(bottleneck_distance(diagrams[pairs[t].first], diagrams[pairs[t].second]).distance);
  }
  return quantile(std::move(d), q);
}

inline double rho_nu_hat(double tau_hat_value, std::size_t K) {
  if (K == 0) throw std::invalid_argument("rho_nu_hat: K must be >= 1");
  return tau_hat_value / (4.0 * std::sqrt(static_cast<double>(K)));
}

/// 1-based ranks, ties share the average rank.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) rank[order[t]] = r;
    i = j + 1;
  }
  return rank;
}

/// Spearman rank correlation (Pearson correlation of average ranks).
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw std::invalid_argument("spearman: need two equal-length samples of size >= 2");
  auto rx = average_ranks(xs), ry = average_ranks(ys);
  double mx = mean(rx), my = mean(ry);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

struct SelectorReport {
  double gamma_hat = 0.0;
  double score = 0.0;
  double fisher_ker = 0.0;
  double rho_mah = 0.0;
  double tau_hat = 0.0;
  double rho_nu_hat = 0.0;
};

inline SelectorReport selector_report(const Eigen::MatrixXd& G, std::span<const int> labels, std::size_t K,
                                      double tau_hat_value, const MahalanobisOptions& mah = {}) {
  SelectorReport r;
  r.gamma_hat = kernel_margin_hat(G, labels);
  r.score = score(r.gamma_hat, K);
  r.fisher_ker = fisher_ker(G, labels);
  r.rho_mah = mahalanobis_margin(G, labels, mah);
  r.tau_hat = tau_hat_value;
  r.rho_nu_hat = rho_nu_hat(tau_hat_value, K);
  return r;
}

struct SweepRow {
  std::string candidate_id;
  SelectorReport report;
  double cv_accuracy = 0.0;
};

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os.precision(10);
  os << "candidate_id,gamma_hat,score,fisher_ker,rho_mah,tau_hat,rho_nu_hat,cv_accuracy\n";
  for (const auto& r : rows) {
    const auto& s = r.report;
    os << r.candidate_id << ',' << s.gamma_hat << ',' << s.score << ',' << s.fisher_ker << ',' << s.rho_mah << ','
       << s.tau_hat << ',' << s.rho_nu_hat << ',' << r.cv_accuracy << '\n';
  }
}

}  // namespace palace
