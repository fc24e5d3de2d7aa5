// Soft-margin SVM on a precomputed gram.
//
// Binary dual: min 1/2 a^T Q a - e^T a, Q_ij = y_i y_j G_ij, 0 <= a <= C,
// y^T a = 0, solved by two-variable SMO with the maximal violating pair.
// Multiclass is one-vs-one with majority vote.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace palace {

struct SolverOptions {
  double tol = 1e-4;
  /// 0 selects max(10^7, 100 m).
  std::size_t max_iterations = 0;
  /// Record the dual objective after every update.
  bool record_objective = false;
  /// Full eigenvalue check of the gram before solving (O(m^3)).
  bool check_psd = false;
};

class NonPsdGram : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BinarySVMModel {
  /// a_i y_i, one entry per training point.
  Eigen::VectorXd dual_coefficients;
  Eigen::VectorXd alpha;
  Eigen::VectorXd labels;
  double bias = 0.0;
  std::vector<std::size_t> support_indices;
  double C = 0.0;
  /// max violation m - M at exit; <= tol when converged.
  double kkt_gap = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
  /// Dual objective sum(a) - 1/2 a^T Q a, as a maximization.
  std::vector<double> objective_history;

  /// f(x) = sum_i a_i y_i G(x, x_i) + b for a row of kernel values against
  /// the training points.
  template <class Row>
  double decision(const Row& kernel_row) const {
    double s = bias;
    for (auto i : support_indices) s += dual_coefficients[static_cast<Eigen::Index>(i)] * kernel_row[static_cast<Eigen::Index>(i)];
    return s;
  }
};

namespace detail {

inline double dual_objective(const Eigen::VectorXd& alpha, const Eigen::VectorXd& grad) {
  // With grad = Q a - e: 1/2 a^T Q a - e^T a = 1/2 a^T (grad - e).
  return 0.5 * alpha.dot(grad - Eigen::VectorXd::Ones(alpha.size()));
}

inline void check_gram_psd(const Eigen::MatrixXd& G, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G, Eigen::EigenvaluesOnly);
  double scale = std::max(1.0, G.diagonal().cwiseAbs().maxCoeff());
  if (es.eigenvalues().minCoeff() < -tol * scale) {
    throw NonPsdGram("gram is not positive semidefinite: min eigenvalue " +
                     std::to_string(es.eigenvalues().minCoeff()));
  }
}

}  // namespace detail

/// `y` entries must be +1 or -1 and both signs must occur.
inline BinarySVMModel solve_binary(const Eigen::MatrixXd& G, const Eigen::VectorXd& y, double C,
                                   const SolverOptions& opt = {}) {
  const Eigen::Index m = G.rows();
  if (G.cols() != m || y.size() != m) throw std::invalid_argument("solve_binary: gram and labels disagree in size");
  if (!(C > 0.0)) throw std::invalid_argument("solve_binary: C must be > 0");
  bool pos = false, neg = false;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (y[i] == 1.0) pos = true;
    else if (y[i] == -1.0) neg = true;
    else throw std::invalid_argument("solve_binary: labels must be +1 or -1");
  }
  if (!pos || !neg) throw std::invalid_argument("solve_binary: training set contains a single class");
  if (opt.check_psd) detail::check_gram_psd(G, 1e-8);

  constexpr double kTau = 1e-12;
  const std::size_t max_iter =
      opt.max_iterations ? opt.max_iterations : std::max<std::size_t>(10'000'000, 100 * static_cast<std::size_t>(m));

  BinarySVMModel model;
  model.C = C;
  model.labels = y;
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd grad = -Eigen::VectorXd::Ones(m);

  auto in_up = [&](Eigen::Index t) { return y[t] > 0 ? alpha[t] < C : alpha[t] > 0; };
  auto in_low = [&](Eigen::Index t) { return y[t] > 0 ? alpha[t] > 0 : alpha[t] < C; };

  std::size_t iter = 0;
  double gap = 0.0;
  for (;;) {
    Eigen::Index i = -1, j = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < m; ++t) {
      double v = -y[t] * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    gap = gmax - gmin;
    if (i < 0 || j < 0 || gap <= opt.tol) {
      model.converged = true;
      break;
    }
    if (iter >= max_iter) break;
    ++iter;

    const double Qii = G(i, i), Qjj = G(j, j), Qij = y[i] * y[j] * G(i, j);
    const double old_ai = alpha[i], old_aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = Qii + Qjj + 2.0 * Qij;
      if (quad < -opt.tol) throw NonPsdGram("gram is not positive semidefinite (negative curvature in SMO step)");
      if (quad <= 0.0) quad = kTau;
      double delta = (-grad[i] - grad[j]) / quad;
      double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) {
          alpha[j] = 0.0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = -diff;
      }
      if (diff > 0.0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = Qii + Qjj - 2.0 * Qij;
      if (quad < -opt.tol) throw NonPsdGram("gram is not positive semidefinite (negative curvature in SMO step)");
      if (quad <= 0.0) quad = kTau;
      double delta = (grad[i] - grad[j]) / quad;
      double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0.0) {
        alpha[j] = 0.0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0.0) {
        alpha[i] = 0.0;
        alpha[j] = sum;
      }
    }

    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    for (Eigen::Index t = 0; t < m; ++t) {
      grad[t] += y[t] * (y[i] * G(t, i) * dai + y[j] * G(t, j) * daj);
    }
    if (opt.record_objective) model.objective_history.push_back(-detail::dual_objective(alpha, grad));
  }

  model.iterations = iter;
  model.kkt_gap = std::max(gap, 0.0);
  model.alpha = alpha;
  model.dual_coefficients = alpha.cwiseProduct(y);

  // Bias: average over free vectors, else the middle of the feasible interval.
  double sum = 0.0;
  std::size_t n_free = 0;
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < m; ++t) {
    double v = -y[t] * grad[t];
    if (alpha[t] > 0.0 && alpha[t] < C) {
      sum += v;
      ++n_free;
    } else {
      bool at_upper = alpha[t] >= C;
      // Points at a bound only constrain b from one side.
      if ((y[t] > 0) == at_upper) ub = std::min(ub, v);
      else lb = std::max(lb, v);
    }
  }
  if (n_free > 0) model.bias = sum / static_cast<double>(n_free);
  else if (std::isfinite(ub) && std::isfinite(lb)) model.bias = 0.5 * (ub + lb);
  else model.bias = std::isfinite(ub) ? ub : (std::isfinite(lb) ? lb : 0.0);

  for (Eigen::Index t = 0; t < m; ++t) {
    if (alpha[t] > 0.0) model.support_indices.push_back(static_cast<std::size_t>(t));
  }
  return model;
}

/// Largest violation of the KKT conditions over the training points,
/// measured as max(0, m - M) over the maximal violating pair.
inline double kkt_residual(const BinarySVMModel& model, const Eigen::MatrixXd& G) {
  const Eigen::Index m = G.rows();
  const auto& y = model.labels;
  const auto& a = model.alpha;
  Eigen::VectorXd grad = y.asDiagonal() * (G * model.dual_coefficients) - Eigen::VectorXd::Ones(m);
  double gmax = -std::numeric_limits<double>::infinity();
  double gmin = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < m; ++t) {
    double v = -y[t] * grad[t];
    bool up = y[t] > 0 ? a[t] < model.C : a[t] > 0;
    bool low = y[t] > 0 ? a[t] > 0 : a[t] < model.C;
    if (up) gmax = std::max(gmax, v);
    if (low) gmin = std::min(gmin, v);
  }
  if (!std::isfinite(gmax) || !std::isfinite(gmin)) return 0.0;
  return std::max(0.0, gmax - gmin);
}

// ---------------------------------------------------------------------------
// One-vs-one

struct OvOModel {
  struct Pair {
    int first = 0, second = 0;
    /// Positions of this pair's training points in the full training set.
    std::vector<std::size_t> indices;
    BinarySVMModel model;
  };
  std::vector<int> classes;
  std::vector<Pair> pairs;

  std::size_t class_count() const { return classes.size(); }
};

/// One binary model per class pair c < c'; the first class is labeled +1.
inline OvOModel train_ovo(const Eigen::MatrixXd& G, std::span<const int> labels, double C,
                          const SolverOptions& opt = {}) {
  if (static_cast<Eigen::Index>(labels.size()) != G.rows()) {
    throw std::invalid_argument("train_ovo: gram and labels disagree in size");
  }
  std::set<int> cls(labels.begin(), labels.end());
  if (cls.size() < 2) throw std::invalid_argument("train_ovo: need at least two classes");
  OvOModel ovo;
  ovo.classes.assign(cls.begin(), cls.end());
  for (std::size_t a = 0; a < ovo.classes.size(); ++a) {
    for (std::size_t b = a + 1; b < ovo.classes.size(); ++b) {
      OvOModel::Pair p;
      p.first = ovo.classes[a];
      p.second = ovo.classes[b];
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == p.first || labels[i] == p.second) p.indices.push_back(i);
      }
      const auto n = static_cast<Eigen::Index>(p.indices.size());
      Eigen::MatrixXd sub(n, n);
      Eigen::VectorXd y(n);
      for (Eigen::Index r = 0; r < n; ++r) {
        y[r] = labels[p.indices[static_cast<std::size_t>(r)]] == p.first ? 1.0 : -1.0;
        for (Eigen::Index c = 0; c < n; ++c) {
          sub(r, c) = G(static_cast<Eigen::Index>(p.indices[static_cast<std::size_t>(r)]),
                        static_cast<Eigen::Index>(p.indices[static_cast<std::size_t>(c)]));
        }
      }
      p.model = solve_binary(sub, y, C, opt);
      ovo.pairs.push_back(std::move(p));
    }
  }
  return ovo;
}

/// Decision value of one pair model for a kernel row against the full
/// training set.
template <class Row>
double pair_decision(const OvOModel::Pair& p, const Row& kernel_row) {
  double s = p.model.bias;
  for (auto i : p.model.support_indices) {
    s += p.model.dual_coefficients[static_cast<Eigen::Index>(i)] *
         kernel_row[static_cast<Eigen::Index>(p.indices[i])];
  }
  return s;
}

/// Majority vote; ties go to the largest summed |margin| over won votes, then
/// to the lowest class index.
template <class Row>
int predict_ovo(const OvOModel& ovo, const Row& kernel_row) {
  std::map<int, std::pair<int, double>> tally;
  for (int c : ovo.classes) tally[c] = {0, 0.0};
  for (const auto& p : ovo.pairs) {
    double f = pair_decision(p, kernel_row);
    int winner = f >= 0.0 ? p.first : p.second;
    tally[winner].first += 1;
    tally[winner].second += std::abs(f);
  }
  int best = ovo.classes.front();
  for (const auto& [c, t] : tally) {
    const auto& bt = tally[best];
    if (t.first > bt.first || (t.first == bt.first && t.second > bt.second)) best = c;
  }
  return best;
}

/// Predictions for every row of a (test x train) kernel matrix.
inline std::vector<int> predict_ovo_batch(const OvOModel& ovo, const Eigen::MatrixXd& kernel_rows) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(kernel_rows.rows()));
  for (Eigen::Index i = 0; i < kernel_rows.rows(); ++i) {
    Eigen::RowVectorXd row = kernel_rows.row(i);
    out.push_back(predict_ovo(ovo, row));
  }
  return out;
}

inline double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw std::invalid_argument("accuracy: size mismatch");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

}  // namespace palace
