// Stratified cross-validation with inner model selection.
//
// Features are produced per outer fold by a caller-supplied featurizer that
// sees the training indices only, so landmark placement never touches the
// test fold.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "palace/kernel.hpp"
#include "palace/numeric.hpp"
#include "palace/random.hpp"
#include "palace/svm.hpp"

namespace palace {

/// Fold index per item. Each class is shuffled with `seed` and dealt
/// round-robin, the starting fold rotating by class so fold sizes stay
/// balanced. Every class needs at least `folds` members.
inline std::vector<int> stratified_folds(std::span<const int> labels, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("stratified_folds: need at least 2 folds");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  Rng rng(seed);
  std::vector<int> fold(labels.size(), -1);
  std::size_t offset = 0;
  for (auto& [c, idx] : by_class) {
    if (idx.size() < static_cast<std::size_t>(folds)) {
      throw std::invalid_argument("stratified_folds: class " + std::to_string(c) + " has " +
                                  std::to_string(idx.size()) + " items, fewer than the " +
                                  std::to_string(folds) + " folds, so some fold would lack it");
    }
    rng.shuffle(idx);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      fold[idx[r]] = static_cast<int>((offset + r) % static_cast<std::size_t>(folds));
    }
    offset += idx.size();
  }
  return fold;
}

inline Eigen::MatrixXd submatrix(const Eigen::MatrixXd& M, std::span<const std::size_t> rows,
                                 std::span<const std::size_t> cols) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          M(static_cast<Eigen::Index>(rows[r]), static_cast<Eigen::Index>(cols[c]));
    }
  }
  return out;
}

template <class T>
std::vector<T> pick(std::span<const T> v, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

/// Fit on a training gram and score on (test x train) kernel rows. A training
/// set with one class predicts that class everywhere.
inline std::vector<int> fit_predict(const Eigen::MatrixXd& train_gram, std::span<const int> train_labels,
                                    const Eigen::MatrixXd& test_rows, double C, const SolverOptions& opt) {
  if (std::all_of(train_labels.begin(), train_labels.end(), [&](int l) { return l == train_labels.front(); })) {
    return std::vector<int>(static_cast<std::size_t>(test_rows.rows()), train_labels.front());
  }
  auto model = train_ovo(train_gram, train_labels, C, opt);
  return predict_ovo_batch(model, test_rows);
}

enum class BandwidthMode { Quantile, Fixed };

/// Landmark kernel, or the joint Gaussian RBF on the same embeddings as a
/// comparison.
enum class KernelKind { Landmark, JointRbf };

struct CVOptions {
  int outer_folds = 10;
  int inner_folds = 3;
  std::vector<std::uint64_t> seeds{42};
  BandwidthMode bandwidth = BandwidthMode::Quantile;
  /// Quantile levels q (Quantile mode) or sigma values (Fixed mode).
  std::vector<double> sigma_grid{0.25};
  std::vector<double> C_grid{1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3};
  /// Used when every pairwise embedding distance is zero.
  double degenerate_sigma = 1.0;
  KernelKind kernel = KernelKind::Landmark;
  SolverOptions solver{};
};

struct FoldRecord {
  std::uint64_t seed = 0;
  int fold = 0;
  double sigma_or_q = 0.0;
  double sigma = 0.0;
  double C = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  bool degenerate_embedding = false;
};

struct CVResult {
  double mean = 0.0;
  double std = 0.0;
  std::vector<FoldRecord> folds;
};

struct FoldFeatures {
  Eigen::MatrixXd train;
  Eigen::MatrixXd test;
};

/// (train indices, test indices) -> embeddings of both, built from the
/// training indices alone.
using Featurizer = std::function<FoldFeatures(std::span<const std::size_t>, std::span<const std::size_t>)>;

namespace detail {

struct Bandwidth {
  double sigma;
  bool degenerate;
};

inline Bandwidth resolve_bandwidth(const Eigen::MatrixXd& train, double value, const CVOptions& opt) {
  if (opt.bandwidth == BandwidthMode::Fixed) return {value, false};
  try {
    return {bandwidth_quantile(train, value), false};
  } catch (const DegenerateEmbedding&) {
    return {opt.degenerate_sigma, true};
  }
}

}  // namespace detail

/// Outer stratified CV. Within each training fold, (sigma or q, C) is picked
/// by inner stratified CV accuracy; ties go to the smaller C, then the
/// smaller sigma or q.
inline CVResult cross_validate(std::span<const int> labels, const Featurizer& featurize, const CVOptions& opt) {
  if (opt.sigma_grid.empty() || opt.C_grid.empty()) throw std::invalid_argument("cross_validate: empty grid");
  std::vector<double> sig = opt.sigma_grid, cs = opt.C_grid;
  std::sort(sig.begin(), sig.end());
  std::sort(cs.begin(), cs.end());

  CVResult res;
  for (auto seed : opt.seeds) {
    auto outer = stratified_folds(labels, opt.outer_folds, seed);
    for (int f = 0; f < opt.outer_folds; ++f) {
      std::vector<std::size_t> tr, te;
      for (std::size_t i = 0; i < labels.size(); ++i) (outer[i] == f ? te : tr).push_back(i);
      auto feats = featurize(tr, te);
      auto ytr = pick(labels, std::span<const std::size_t>(tr));
      auto yte = pick(labels, std::span<const std::size_t>(te));

      auto inner = stratified_folds(ytr, opt.inner_folds, splitmix64(seed) ^ static_cast<std::uint64_t>(f));
      FoldRecord best;
      double best_acc = -1.0;
      Eigen::MatrixXd best_gram;
      for (double s : sig) {
        auto bw = detail::resolve_bandwidth(feats.train, s, opt);
        Eigen::MatrixXd G =
            opt.kernel == KernelKind::Landmark ? gram(feats.train, bw.sigma).entries : rbf_gram(feats.train, bw.sigma);
        for (double C : cs) {
          std::size_t hit = 0;
          for (int g = 0; g < opt.inner_folds; ++g) {
            std::vector<std::size_t> itr, ite;
            for (std::size_t i = 0; i < ytr.size(); ++i) (inner[i] == g ? ite : itr).push_back(i);
            auto y_itr = pick(std::span<const int>(ytr), std::span<const std::size_t>(itr));
            auto y_ite = pick(std::span<const int>(ytr), std::span<const std::size_t>(ite));
            auto pred = fit_predict(submatrix(G, itr, itr), y_itr, submatrix(G, ite, itr), C,
                                    opt.solver);
            for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == y_ite[i];
          }
          double acc = static_cast<double>(hit) / static_cast<double>(ytr.size());
          // Ties: the smaller C wins; at equal C the earlier, smaller sigma stays.
          bool better = acc > best_acc || (acc == best_acc && C < best.C);
          if (better) {
            best_acc = acc;
            best.sigma_or_q = s;
            best.sigma = bw.sigma;
            best.C = C;
            best.degenerate_embedding = bw.degenerate;
            best_gram = G;
          }
        }
      }

      Eigen::MatrixXd test_rows = opt.kernel == KernelKind::Landmark
                                      ? cross_gram(feats.test, feats.train, best.sigma)
                                      : rbf_cross_gram(feats.test, feats.train, best.sigma);
      auto pred_te = fit_predict(best_gram, ytr, test_rows, best.C, opt.solver);
      auto pred_tr = fit_predict(best_gram, ytr, best_gram, best.C, opt.solver);
      best.seed = seed;
      best.fold = f;
      best.test_acc = accuracy(pred_te, yte);
      best.train_acc = accuracy(pred_tr, ytr);
      res.folds.push_back(best);
    }
  }
  std::vector<double> acc;
  for (const auto& r : res.folds) acc.push_back(r.test_acc);
  res.mean = mean(acc);
  res.std = stddev(acc);
  return res;
}

inline void write_cv_csv(std::ostream& os, const CVResult& r) {
  os.precision(10);
  os << "seed,fold,sigma_or_q,C,train_acc,test_acc\n";
  for (const auto& f : r.folds) {
    os << f.seed << ',' << f.fold << ',' << f.sigma_or_q << ',' << f.C << ',' << f.train_acc << ',' << f.test_acc
       << '\n';
  }
}

}  // namespace palace
