// Additive landmark kernel k(A, B) = sum_k exp(-(Phi_k(A) - Phi_k(B))^2 / 2 sigma^2).

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "palace/cover.hpp"
#include "palace/landmarks.hpp"
#include "palace/numeric.hpp"

namespace palace {

struct GramMatrix {
  Eigen::MatrixXd entries;
  double sigma = 0.0;
  std::size_t K = 0;

  Eigen::Index size() const { return entries.rows(); }
};

inline void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("bandwidth sigma must be finite and > 0");
}

inline double lk_value(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double sigma) {
  check_sigma(sigma);
  if (u.size() != v.size()) throw std::invalid_argument("lk_value: embeddings differ in length");
  const double c = 1.0 / (2.0 * sigma * sigma);
  return (-(u - v).array().square() * c).exp().sum();
}

/// sqrt(sum_k 2 (1 - exp(-gap_k^2 / 2 sigma^2))).
inline double rkhs_distance(const Eigen::VectorXd& u, const Eigen::VectorXd& v, double sigma) {
  check_sigma(sigma);
  if (u.size() != v.size()) throw std::invalid_argument("rkhs_distance: embeddings differ in length");
  const double c = 1.0 / (2.0 * sigma * sigma);
  // -expm1 keeps small gaps accurate.
  return std::sqrt((-2.0 * (-(u - v).array().square() * c).unaryExpr([](double t) { return std::expm1(t); })).sum());
}

/// Gram of the landmark kernel over embedding rows. Accumulates one
/// coordinate at a time, so memory stays O(m^2) whatever K is. The diagonal
/// is set to K exactly.
inline GramMatrix gram(const Eigen::MatrixXd& embeddings, double sigma) {
  check_sigma(sigma);
  const Eigen::Index m = embeddings.rows();
  const Eigen::Index K = embeddings.cols();
  if (K == 0) throw std::invalid_argument("gram: embeddings have no coordinates");
  GramMatrix g;
  g.sigma = sigma;
  g.K = static_cast<std::size_t>(K);
  g.entries = Eigen::MatrixXd::Zero(m, m);
  const double c = 1.0 / (2.0 * sigma * sigma);
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index i = 0; i < m; ++i) {
      const double ui = embeddings(i, k);
      for (Eigen::Index j = i + 1; j < m; ++j) {
        const double d = ui - embeddings(j, k);
        g.entries(i, j) += std::exp(-d * d * c);
      }
    }
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    g.entries(i, i) = static_cast<double>(K);
    for (Eigen::Index j = i + 1; j < m; ++j) g.entries(j, i) = g.entries(i, j);
  }
  return g;
}

/// Cross gram between test rows and training rows (rows = test items).
inline Eigen::MatrixXd cross_gram(const Eigen::MatrixXd& test, const Eigen::MatrixXd& train, double sigma) {
  check_sigma(sigma);
  if (test.cols() != train.cols()) throw std::invalid_argument("cross_gram: embeddings differ in length");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(test.rows(), train.rows());
  const double c = 1.0 / (2.0 * sigma * sigma);
  for (Eigen::Index k = 0; k < test.cols(); ++k) {
    for (Eigen::Index i = 0; i < test.rows(); ++i) {
      const double ui = test(i, k);
      for (Eigen::Index j = 0; j < train.rows(); ++j) {
        const double d = ui - train(j, k);
        out(i, j) += std::exp(-d * d * c);
      }
    }
  }
  return out;
}

/// Joint Gaussian RBF exp(-||u - v||^2 / (2 sigma^2)) between test and
/// training rows, for comparison runs only.
inline Eigen::MatrixXd rbf_cross_gram(const Eigen::MatrixXd& test, const Eigen::MatrixXd& train, double sigma) {
  check_sigma(sigma);
  if (test.cols() != train.cols()) throw std::invalid_argument("rbf_cross_gram: embeddings differ in length");
  const double c = 1.0 / (2.0 * sigma * sigma);
  Eigen::MatrixXd out(test.rows(), train.rows());
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    for (Eigen::Index j = 0; j < train.rows(); ++j) out(i, j) = std::exp(-(test.row(i) - train.row(j)).squaredNorm() * c);
  }
  return out;
}

/// Joint RBF gram with the diagonal set to 1 exactly.
inline Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& embeddings, double sigma) {
  Eigen::MatrixXd G = rbf_cross_gram(embeddings, embeddings, sigma);
  G = 0.5 * (G + G.transpose()).eval();
  G.diagonal().setOnes();
  return G;
}

/// Linear gram X X^T, used for the linear baseline.
inline Eigen::MatrixXd linear_gram(const Eigen::MatrixXd& embeddings) {
  return embeddings * embeddings.transpose();
}

class DegenerateEmbedding : public std::runtime_error {
 public:
  DegenerateEmbedding() : std::runtime_error("degenerate embedding: all pairwise distances are zero") {}
};

/// q-quantile of the nonzero pairwise l2 distances between embedding rows.
inline double bandwidth_quantile(const Eigen::MatrixXd& embeddings, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("bandwidth_quantile: q must lie in (0, 1)");
  std::vector<double> d;
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < embeddings.rows(); ++j) {
      double v = (embeddings.row(i) - embeddings.row(j)).norm();
      if (v > 0.0) d.push_back(v);
    }
  }
  if (d.empty()) throw DegenerateEmbedding();
  return quantile(std::move(d), q);
}

struct NondegeneracyFloor {
  double kappa = 0.0;
  /// kappa * rho_nu.
  double floor = 0.0;
  /// sigma >= sqrt(2) * N_max * tau, where the floor is guaranteed.
  bool in_regime = false;
};

inline NondegeneracyFloor nondegeneracy_floor(const LandmarkConfiguration& config, double sigma,
                                              std::size_t n_max) {
  check_sigma(sigma);
  NondegeneracyFloor out;
  out.kappa = 1.0 / (sigma * std::sqrt(2.0));
  out.floor = out.kappa * rho_nu(config).value;
  out.in_regime = sigma >= std::sqrt(2.0) * static_cast<double>(n_max) * config.tau();
  return out;
}

/// Matrix as CSV without a header.
inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& M) {
  os.precision(17);
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) os << (j ? "," : "") << M(i, j);
    os << '\n';
  }
}

}  // namespace palace
