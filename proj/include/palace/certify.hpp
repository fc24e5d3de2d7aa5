// Certified nearest-centroid prediction on raw embeddings.
//
// A nearest-centroid label is emitted only when the concentration radius of
// the empirical class means is below half the gap to the nearest other
// class mean; otherwise the prediction abstains.

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
#include <vector>

#include "palace/random.hpp"

namespace palace {

// ---------------------------------------------------------------------------
// Chi-square quantiles

namespace detail {

/// Regularized lower incomplete gamma P(a, x): series below a + 1,
/// Lentz continued fraction for Q above.
inline double gamma_p(double a, double x) {
  if (x <= 0.0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    double sum = 1.0 / a, term = sum, ap = a;
    for (int n = 0; n < 100000; ++n) {
      ap += 1.0;
      term *= x / ap;
      sum += term;
      if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 100000; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-17) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

}  // namespace detail

/// CDF of the chi-square distribution with `dof` degrees of freedom.
inline double chi2_cdf(double dof, double x) {
  if (!(dof > 0.0)) throw std::invalid_argument("chi2_cdf: dof must be > 0");
  return detail::gamma_p(dof / 2.0, x / 2.0);
}

/// p-quantile of chi-square(dof): bracketed Newton on the CDF.
inline double chi2_quantile(double dof, double p) {
  if (!(dof > 0.0)) throw std::invalid_argument("chi2_quantile: dof must be > 0");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("chi2_quantile: p must lie in [0, 1]");
  if (p == 0.0) return 0.0;
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  double lo = 0.0, hi = std::max(1.0, dof);
  while (chi2_cdf(dof, hi) < p) {
    lo = hi;
    hi *= 2.0;
  }
  const double a = dof / 2.0;
  const double lg = std::lgamma(a);
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 500; ++it) {
    double f = chi2_cdf(dof, x) - p;
    if (f < 0.0) lo = x;
    else hi = x;
    // Density of chi-square(dof) at x.
    double pdf = std::exp((a - 1.0) * std::log(x / 2.0) - x / 2.0 - lg) / 2.0;
    double next = x - f / pdf;
    if (!(next > lo && next < hi) || !std::isfinite(next)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-14 * std::max(1.0, x) || hi - lo <= 1e-15 * std::max(1.0, hi)) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

// ---------------------------------------------------------------------------
// Class statistics

struct ClassStats {
  std::vector<int> classes;
  /// Row c = empirical mean of class classes[c].
  Eigen::MatrixXd means;
  std::vector<double> cov_opnorm;
  std::vector<std::size_t> counts;
  /// Distance to the nearest other class mean.
  std::vector<double> gap;
  double min_gap = 0.0;
  /// Largest training embedding norm.
  double r_bar = 0.0;
  /// N_max * tau when both were supplied to the fit.
  std::optional<double> r_bar_structural;
  std::size_t K = 0;

  std::size_t k() const { return classes.size(); }
  std::size_t min_count() const { return *std::min_element(counts.begin(), counts.end()); }
};

/// Top eigenvalue of X^T X / n for centered rows X, by power iteration on
/// whichever of X^T X or X X^T is smaller.
inline double covariance_opnorm(const Eigen::MatrixXd& centered, double tol = 1e-9, int max_iter = 10000) {
  const double n = static_cast<double>(centered.rows());
  if (centered.rows() == 0) return 0.0;
  Eigen::MatrixXd M = centered.rows() <= centered.cols() ? Eigen::MatrixXd(centered * centered.transpose())
                                                         : Eigen::MatrixXd(centered.transpose() * centered);
  M /= n;
  if (M.norm() == 0.0) return 0.0;
  // Fixed pseudo-random start; the all-ones vector is annihilated by X X^T
  // for centered X.
  Rng rng(0x5eed);
  Eigen::VectorXd v(M.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = rng.uniform() + 0.5;
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = M * v;
    double nw = w.norm();
    if (nw == 0.0) return 0.0;
    double next = v.dot(w);
    v = w / nw;
    if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  return std::max(lambda, 0.0);
}

inline ClassStats fit_class_stats(const Eigen::MatrixXd& embeddings, std::span<const int> labels,
                                  std::optional<std::size_t> n_max = std::nullopt,
                                  std::optional<double> tau = std::nullopt) {
  if (embeddings.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw std::invalid_argument("fit_class_stats: embeddings and labels differ in length");
  }
  std::map<int, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  if (groups.size() < 2) throw std::invalid_argument("fit_class_stats: need at least two classes");

  ClassStats s;
  s.K = static_cast<std::size_t>(embeddings.cols());
  s.means.resize(static_cast<Eigen::Index>(groups.size()), embeddings.cols());
  Eigen::Index c = 0;
  for (const auto& [label, idx] : groups) {
    s.classes.push_back(label);
    s.counts.push_back(idx.size());
    Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(embeddings.cols());
    for (auto i : idx) mu += embeddings.row(i);
    mu /= static_cast<double>(idx.size());
    s.means.row(c) = mu;
    Eigen::MatrixXd X(static_cast<Eigen::Index>(idx.size()), embeddings.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) X.row(static_cast<Eigen::Index>(r)) = embeddings.row(idx[r]) - mu;
    s.cov_opnorm.push_back(covariance_opnorm(X));
    ++c;
  }
  for (Eigen::Index a = 0; a < s.means.rows(); ++a) {
    double g = std::numeric_limits<double>::infinity();
    for (Eigen::Index b = 0; b < s.means.rows(); ++b) {
      if (a != b) g = std::min(g, (s.means.row(a) - s.means.row(b)).norm());
    }
    s.gap.push_back(g);
  }
  s.min_gap = *std::min_element(s.gap.begin(), s.gap.end());
  for (Eigen::Index i = 0; i < embeddings.rows(); ++i) s.r_bar = std::max(s.r_bar, embeddings.row(i).norm());
  if (n_max && tau) s.r_bar_structural = static_cast<double>(*n_max) * *tau;
  return s;
}

// ---------------------------------------------------------------------------
// Radii

/// 2 R sqrt(2 ln(2k / delta) / m), clamped at 0 once the log turns negative.
inline double pinelis_radius(double r_bar, std::size_t k, double delta, std::size_t m) {
  if (m == 0) throw std::invalid_argument("pinelis_radius: m must be >= 1");
  if (!(delta > 0.0)) throw std::invalid_argument("pinelis_radius: delta must be > 0");
  double lg = std::log(2.0 * static_cast<double>(k) / delta);
  if (lg <= 0.0) return 0.0;
  return 2.0 * r_bar * std::sqrt(2.0 * lg / static_cast<double>(m));
}

enum class QuantileVariant {
  /// chi-square with K degrees of freedom at 1 - delta/k.
  Multivariate,
  /// chi-square with 1 degree of freedom (a squared normal quantile).
  Univariate,
};

inline double gaussian_quantile(const ClassStats& s, double delta, QuantileVariant v) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  double dof = v == QuantileVariant::Multivariate ? static_cast<double>(s.K) : 1.0;
  return chi2_quantile(dof, 1.0 - delta / static_cast<double>(s.k()));
}

struct GaussianRadii {
  std::vector<double> per_class;
  double max = 0.0;
};

/// sqrt(||Sigma_c||_op * chi2 / m_c) per class, and their maximum.
inline GaussianRadii gaussian_radius(const ClassStats& s, double delta,
                                     QuantileVariant v = QuantileVariant::Multivariate) {
  double q = gaussian_quantile(s, delta, v);
  GaussianRadii r;
  for (std::size_t c = 0; c < s.k(); ++c) {
    r.per_class.push_back(std::sqrt(s.cov_opnorm[c] * q / static_cast<double>(s.counts[c])));
  }
  r.max = *std::max_element(r.per_class.begin(), r.per_class.end());
  return r;
}

enum class RadiusMode { Pinelis, Gaussian };

struct CertifyOptions {
  RadiusMode mode = RadiusMode::Gaussian;
  QuantileVariant variant = QuantileVariant::Multivariate;
  /// Compare against the global gap and the worst-case radius instead of
  /// the predicted class's own.
  bool global = false;
};

struct CertifiedPrediction {
  int label = 0;
  bool certified = false;
  double radius = 0.0;
  double half_gap = 0.0;
};

/// Radius used for class index c under the options.
inline double certificate_radius(const ClassStats& s, std::size_t c, double delta, const CertifyOptions& opt) {
  if (opt.mode == RadiusMode::Pinelis) {
    std::size_t m = opt.global ? s.min_count() : s.counts[c];
    return pinelis_radius(s.r_bar, s.k(), delta, m);
  }
  auto g = gaussian_radius(s, delta, opt.variant);
  return opt.global ? g.max : g.per_class[c];
}

inline CertifiedPrediction certified_predict(const ClassStats& s, const Eigen::VectorXd& embedding, double delta,
                                             const CertifyOptions& opt = {}) {
  if (embedding.size() != s.means.cols()) throw std::invalid_argument("certified_predict: embedding length differs from K");
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < s.k(); ++c) {
    double d = (s.means.row(static_cast<Eigen::Index>(c)).transpose() - embedding).norm();
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  CertifiedPrediction out;
  out.label = s.classes[best];
  out.radius = certificate_radius(s, best, delta, opt);
  out.half_gap = 0.5 * (opt.global ? s.min_gap : s.gap[best]);
  out.certified = out.radius < out.half_gap;
  return out;
}

struct SampleThresholds {
  std::optional<std::uint64_t> pinelis;
  std::optional<std::uint64_t> gaussian;
};

namespace detail {

inline std::optional<std::uint64_t> ceil_at_least_one(double v) {
  if (!std::isfinite(v)) return std::nullopt;
  return static_cast<std::uint64_t>(std::max(1.0, std::ceil(v)));
}

}  // namespace detail

/// Per-class m*: ceil(32 R^2 ln(2k/delta) / gap_c^2) and
/// ceil(4 ||Sigma_c|| chi2 / gap_c^2), floored at 1. Empty when gap_c = 0.
inline std::vector<SampleThresholds> sample_thresholds(const ClassStats& s, double delta,
                                                       QuantileVariant v = QuantileVariant::Multivariate) {
  double lg = std::max(0.0, std::log(2.0 * static_cast<double>(s.k()) / delta));
  double q = gaussian_quantile(s, delta, v);
  std::vector<SampleThresholds> out;
  for (std::size_t c = 0; c < s.k(); ++c) {
    double g2 = s.gap[c] * s.gap[c];
    SampleThresholds t;
    if (g2 > 0.0) {
      t.pinelis = detail::ceil_at_least_one(32.0 * s.r_bar * s.r_bar * lg / g2);
      t.gaussian = detail::ceil_at_least_one(4.0 * s.cov_opnorm[c] * q / g2);
    }
    out.push_back(t);
  }
  return out;
}

struct CertificateReportRow {
  std::string dataset;
  std::string mode;
  double fired_pct = 0.0;
  /// NaN when nothing fired.
  double nc_accuracy_on_fired = std::numeric_limits<double>::quiet_NaN();
  double r_m = 0.0;
  double half_delta = 0.0;
};

inline std::string mode_name(const CertifyOptions& opt) {
  if (opt.mode == RadiusMode::Pinelis) return opt.global ? "pinelis-global" : "pinelis";
  std::string s = opt.variant == QuantileVariant::Multivariate ? "gaussian" : "gaussian-univariate";
  return opt.global ? s + "-global" : s;
}

/// Firing rate and accuracy on fired items over a labeled test set. r_m is
/// the worst-case radius over classes, half_delta = min gap / 2.
inline CertificateReportRow certificate_report(const std::string& dataset, const ClassStats& s,
                                               const Eigen::MatrixXd& test, std::span<const int> labels,
                                               double delta, const CertifyOptions& opt = {}) {
  CertificateReportRow row;
  row.dataset = dataset;
  row.mode = mode_name(opt);
  std::size_t fired = 0, correct = 0;
  for (Eigen::Index i = 0; i < test.rows(); ++i) {
    auto p = certified_predict(s, test.row(i).transpose(), delta, opt);
    if (p.certified) {
      ++fired;
      correct += p.label == labels[static_cast<std::size_t>(i)];
    }
  }
  if (test.rows() > 0) row.fired_pct = 100.0 * static_cast<double>(fired) / static_cast<double>(test.rows());
  if (fired > 0) row.nc_accuracy_on_fired = 100.0 * static_cast<double>(correct) / static_cast<double>(fired);
  CertifyOptions worst = opt;
  worst.global = true;
  row.r_m = certificate_radius(s, 0, delta, worst);
  row.half_delta = 0.5 * s.min_gap;
  return row;
}

inline void write_certificate_csv(std::ostream& os, std::span<const CertificateReportRow> rows) {
  os.precision(10);
  os << "dataset,mode,fired_pct,nc_accuracy_on_fired,r_m,half_delta\n";
  for (const auto& r : rows) {
    os << r.dataset << ',' << r.mode << ',' << r.fired_pct << ',';
    if (!std::isnan(r.nc_accuracy_on_fired)) os << r.nc_accuracy_on_fired;
    os << ',' << r.r_m << ',' << r.half_delta << '\n';
  }
}

}  // namespace palace
