// Summation landmark embedding.
//
// Each landmark contributes a pyramid cap max(r - d_B(p, x), 0) at every
// diagram point x; the k-th coordinate is w_k times the sum over the diagram.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

#include "palace/diagram.hpp"
#include "palace/landmarks.hpp"

namespace palace {

struct EmbeddingVector {
  Eigen::VectorXd values;
  std::uint64_t config_id = 0;
};

inline double coordinate(const DiagramPoint& p, double r, const DiagramPoint& x) {
  return std::max(r - point_bottleneck(p, x), 0.0);
}

/// Landmarks above this count use the bucketed accumulation path.
inline constexpr std::size_t kSparseEmbedThreshold = 1000;

/// Candidate lookup for the sparse path. A landmark can be active at x either
/// through the l-infinity branch (found by bucketing positions on a grid of
/// cell size r_max) or through the diagonal branch, which only needs both
/// persistences below 2 r_k and is independent of position.
class LandmarkIndex {
 public:
  explicit LandmarkIndex(const LandmarkConfiguration& config)
      : config_(config), cell_(config.max_radius()), stamp_(config.size(), 0) {
    for (std::size_t k = 0; k < config.size(); ++k) {
      const auto& l = config[k];
      buckets_[key(cell_of(l.position.birth), cell_of(l.position.death))].push_back(k);
      if (l.position.persistence() / 2.0 < l.radius) diagonal_.push_back(k);
    }
  }

  /// Calls fn(k, cap value) for every landmark with a positive cap at x.
  template <class Fn>
  void for_each_active(const DiagramPoint& x, Fn&& fn) {
    ++epoch_;
    auto visit = [&](std::size_t k) {
      if (stamp_[k] == epoch_) return;
      stamp_[k] = epoch_;
      const auto& l = config_[k];
      double v = coordinate(l.position, l.radius, x);
      if (v > 0.0) fn(k, v);
    };
    const std::int64_t cb = cell_of(x.birth), cd = cell_of(x.death);
    for (std::int64_t db = -1; db <= 1; ++db) {
      for (std::int64_t dd = -1; dd <= 1; ++dd) {
        auto it = buckets_.find(key(cb + db, cd + dd));
        if (it == buckets_.end()) continue;
        for (auto k : it->second) visit(k);
      }
    }
    if (x.persistence() / 2.0 < cell_) {
      for (auto k : diagonal_) visit(k);
    }
  }

 private:
  std::int64_t cell_of(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_)); }
  static std::int64_t key(std::int64_t a, std::int64_t b) { return a * 1000003LL + b; }

  const LandmarkConfiguration& config_;
  double cell_;
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets_;
  std::vector<std::size_t> diagonal_;
  std::vector<std::uint64_t> stamp_;
  std::uint64_t epoch_ = 0;
};

namespace detail {

inline Eigen::VectorXd embed_dense(const PersistenceDiagram& A, const LandmarkConfiguration& config) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.size()));
  for (std::size_t k = 0; k < config.size(); ++k) {
    const auto& l = config[k];
    double s = 0.0;
    for (const auto& a : A.points()) s += coordinate(l.position, l.radius, a);
    out[static_cast<Eigen::Index>(k)] = l.weight * s;
  }
  return out;
}

inline Eigen::VectorXd embed_sparse(const PersistenceDiagram& A, LandmarkIndex& index,
                                    const LandmarkConfiguration& config) {
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(config.size()));
  for (const auto& a : A.points()) {
    index.for_each_active(a, [&](std::size_t k, double v) { sums[static_cast<Eigen::Index>(k)] += v; });
  }
  for (std::size_t k = 0; k < config.size(); ++k) {
    sums[static_cast<Eigen::Index>(k)] *= config[k].weight;
  }
  return sums;
}

}  // namespace detail

/// Phi(A; L). Dense evaluation below kSparseEmbedThreshold landmarks,
/// bucketed accumulation at or above it.
inline EmbeddingVector embed(const PersistenceDiagram& A, const LandmarkConfiguration& config) {
  EmbeddingVector out;
  out.config_id = config.fingerprint();
  if (config.size() >= kSparseEmbedThreshold) {
    LandmarkIndex index(config);
    out.values = detail::embed_sparse(A, index, config);
  } else {
    out.values = detail::embed_dense(A, config);
  }
  return out;
}

/// Row i = embed(diagrams[i]).
inline Eigen::MatrixXd embed_batch(std::span<const PersistenceDiagram> diagrams,
                                   const LandmarkConfiguration& config) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(diagrams.size()),
                      static_cast<Eigen::Index>(config.size()));
  if (config.size() >= kSparseEmbedThreshold) {
    LandmarkIndex index(config);
    for (std::size_t i = 0; i < diagrams.size(); ++i) {
      out.row(static_cast<Eigen::Index>(i)) = detail::embed_sparse(diagrams[i], index, config).transpose();
    }
  } else {
    for (std::size_t i = 0; i < diagrams.size(); ++i) {
      out.row(static_cast<Eigen::Index>(i)) = detail::embed_dense(diagrams[i], config).transpose();
    }
  }
  return out;
}

/// CSV with a header phi_0, ..., phi_{K-1} and one row per diagram.
inline void write_embedding_csv(std::ostream& os, const Eigen::MatrixXd& embeddings) {
  os.precision(17);
  for (Eigen::Index k = 0; k < embeddings.cols(); ++k) os << (k ? "," : "") << "phi_" << k;
  os << '\n';
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) {
    for (Eigen::Index k = 0; k < embeddings.cols(); ++k) {
      os << (k ? "," : "") << embeddings(i, k);
    }
    os << '\n';
  }
}

}  // namespace palace
