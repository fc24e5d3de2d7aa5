// Landmark placement, admissibility, distortion certificates and the two
// structural audits.
//
// The data support is always a finite multiset of training diagram points.
// Every distance here is the single-point bottleneck distance.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "palace/diagram.hpp"
#include "palace/embed.hpp"
#include "palace/landmarks.hpp"
#include "palace/numeric.hpp"

namespace palace {

// ---------------------------------------------------------------------------
// Farthest-point sampling

struct FpsResult {
  std::vector<std::size_t> indices;
  std::vector<DiagramPoint> positions;
  /// Distance of each pick to the previously chosen set at selection time;
  /// +inf for the seed. Non-increasing.
  std::vector<double> insertion_distances;
  /// max over the input of the distance to the nearest pick.
  double covering_radius = 0.0;
};

/// Greedy k-center: each pick maximizes the distance to the picks so far,
/// ties to the lowest input index.
inline FpsResult fps_place(std::span<const DiagramPoint> points, std::size_t K,
                           std::size_t seed_index = 0) {
  if (points.empty()) throw std::invalid_argument("fps_place: empty point set");
  if (K == 0) throw std::invalid_argument("fps_place: K must be >= 1");
  if (K > points.size()) {
    throw std::invalid_argument("fps_place: K = " + std::to_string(K) + " exceeds the " +
                                std::to_string(points.size()) + " available points");
  }
  if (seed_index >= points.size()) throw std::invalid_argument("fps_place: seed index out of range");

  FpsResult out;
  std::vector<double> nearest(points.size(), std::numeric_limits<double>::infinity());
  std::size_t pick = seed_index;
  double pick_dist = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < K; ++t) {
    out.indices.push_back(pick);
    out.positions.push_back(points[pick]);
    out.insertion_distances.push_back(pick_dist);
    const DiagramPoint& p = points[pick];
    std::size_t next = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      nearest[i] = std::min(nearest[i], point_bottleneck(points[i], p));
      if (nearest[i] > best) {
        best = nearest[i];
        next = i;
      }
    }
    pick = next;
    pick_dist = best;
  }
  out.covering_radius = pick_dist;
  return out;
}

struct ClassAwareFps {
  std::vector<DiagramPoint> positions;
  /// class -> landmarks actually placed for that class.
  std::map<int, std::size_t> budgets;
  /// Set when some classes had too few points to reach K overall.
  bool short_of_budget = false;
};

/// Per-class budgets floor(K / k), remainder to classes in ascending order.
/// A class that cannot fill its budget is clamped to its point count and the
/// shortfall is handed round-robin to classes that still have spare points.
inline std::map<int, std::size_t> class_budgets(const std::map<int, std::size_t>& available,
                                                std::size_t K) {
  std::map<int, std::size_t> budget;
  for (const auto& [c, n] : available) {
    if (n > 0) budget[c] = 0;
  }
  const std::size_t k = budget.size();
  if (k == 0) throw std::invalid_argument("class_aware_fps: no class has any points");
  if (K < k) {
    throw std::invalid_argument("class_aware_fps: K = " + std::to_string(K) + " is below the " +
                                std::to_string(k) + " non-empty classes");
  }
  std::size_t rank = 0, leftover = 0;
  for (auto& [c, b] : budget) {
    std::size_t want = K / k + (rank++ < K % k ? 1 : 0);
    b = std::min(want, available.at(c));
    leftover += want - b;
  }
  while (leftover > 0) {
    bool placed = false;
    for (auto& [c, b] : budget) {
      if (leftover == 0) break;
      if (b < available.at(c)) {
        ++b;
        --leftover;
        placed = true;
      }
    }
    if (!placed) break;
  }
  return budget;
}

/// Independent FPS per class (seeded at the class's `seed_rank`-th point),
/// concatenated in class order.
inline ClassAwareFps class_aware_fps(const std::map<int, std::vector<DiagramPoint>>& points_by_class,
                                     std::size_t K, std::size_t seed_rank = 0) {
  std::map<int, std::size_t> available;
  for (const auto& [c, pts] : points_by_class) available[c] = pts.size();
  ClassAwareFps out;
  out.budgets = class_budgets(available, K);
  std::size_t total = 0;
  for (const auto& [c, b] : out.budgets) {
    const auto& pts = points_by_class.at(c);
    auto res = fps_place(pts, b, seed_rank % pts.size());
    out.positions.insert(out.positions.end(), res.positions.begin(), res.positions.end());
    total += b;
  }
  out.short_of_budget = total < K;
  return out;
}

/// max over the support of the distance to the nearest position.
inline double covering_radius(std::span<const DiagramPoint> positions,
                              std::span<const DiagramPoint> support) {
  if (positions.empty()) throw std::invalid_argument("covering_radius: no positions");
  double worst = 0.0;
  for (const auto& x : support) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : positions) best = std::min(best, point_bottleneck(x, p));
    worst = std::max(worst, best);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Radii and grids

/// Scaled nearest-neighbor radii clamp(alpha * d_NN(p_k), tau/2, 4 tau). A
/// lone landmark gets tau/2.
inline std::vector<double> assign_radii(std::span<const DiagramPoint> positions, double alpha,
                                        double tau) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("assign_radii: alpha must be >= 0");
  if (!(tau > 0.0)) throw std::invalid_argument("assign_radii: tau must be > 0");
  std::vector<double> radii(positions.size(), tau / 2.0);
  if (positions.size() < 2) return radii;
  for (std::size_t k = 0; k < positions.size(); ++k) {
    double nn = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < positions.size(); ++j) {
      if (j != k) nn = std::min(nn, point_bottleneck(positions[k], positions[j]));
    }
    radii[k] = std::clamp(alpha * nn, tau / 2.0, 4.0 * tau);
  }
  return radii;
}

enum class GridLayout {
  /// R Z^2: nodes at multiples of R, the axis b = 0 included.
  Lattice,
  /// R (Z + 1/2)^2: centers of the R-cells tiling [0, L]^2.
  Offset,
};

struct UniformGrid {
  std::vector<DiagramPoint> positions;
  double spacing = 0.0;
  /// Grid nodes in [0, L]^2, diagonal and below included.
  std::size_t full_count = 0;
};

/// Grid nodes in [0, L]^2 strictly above the diagonal.
inline UniformGrid uniform_grid_positions(double L, double R, GridLayout layout = GridLayout::Lattice) {
  if (!(L > 0.0) || !(R > 0.0)) throw std::invalid_argument("uniform_grid: L and R must be > 0");
  double steps = std::floor(L / R + 1e-9);
  if (steps > 1e4) throw std::invalid_argument("uniform_grid: more than 1e4 grid steps per axis");
  const bool offset = layout == GridLayout::Offset;
  // Lattice: nodes 0..steps. Offset: cell centers of the `steps` whole cells.
  const auto nodes = static_cast<std::size_t>(steps) + (offset ? 0 : 1);
  const double shift = offset ? 0.5 : 0.0;
  UniformGrid g;
  g.spacing = R;
  g.full_count = nodes * nodes;
  for (std::size_t i = 0; i < nodes; ++i) {
    for (std::size_t j = i + 1; j < nodes; ++j) {
      g.positions.push_back({(static_cast<double>(i) + shift) * R, (static_cast<double>(j) + shift) * R});
    }
  }
  return g;
}

/// Uniform-grid configuration with ball radius 3R/2 and equal weights.
inline LandmarkConfiguration uniform_grid(double L, double R, double tau, GridLayout layout = GridLayout::Lattice) {
  auto g = uniform_grid_positions(L, R, layout);
  if (g.positions.empty()) {
    throw std::invalid_argument("uniform_grid: no grid node lies strictly above the diagonal");
  }
  std::vector<double> radii(g.positions.size(), 1.5 * R);
  return LandmarkConfiguration::equal_weights(g.positions, radii, tau);
}

/// Off-diagonal node count with n nodes per axis.
inline std::size_t grid_count(std::size_t nodes) { return nodes * (nodes - 1) / 2; }

/// Spacing for the largest grid over [0, L]^2 with at most `budget`
/// off-diagonal nodes. Off-diagonal counts are triangular numbers, so most
/// budgets are not met exactly.
inline double matched_grid_spacing(double L, std::size_t budget, GridLayout layout = GridLayout::Lattice) {
  if (budget == 0) throw std::invalid_argument("matched_grid_spacing: budget must be >= 1");
  std::size_t nodes = 2;
  while (grid_count(nodes + 1) <= budget) ++nodes;
  // Lattice: nodes - 1 steps of R span L. Offset: one cell per node.
  return L / static_cast<double>(layout == GridLayout::Offset ? nodes : nodes - 1);
}

// ---------------------------------------------------------------------------
// Admissibility and certificates

/// lambda_0 = min over the support of the tallest cap.
inline double lebesgue_number(const LandmarkConfiguration& config,
                              std::span<const DiagramPoint> support) {
  if (support.empty()) throw std::invalid_argument("lebesgue_number: empty support");
  double lam = std::numeric_limits<double>::infinity();
  for (const auto& x : support) {
    double top = 0.0;
    for (const auto& l : config.landmarks()) top = std::max(top, coordinate(l.position, l.radius, x));
    lam = std::min(lam, top);
  }
  return lam;
}

struct AdmissibilityReport {
  double lebesgue = 0.0;
  bool cond_shrink = false;
  bool cond_radius = false;
  bool admissible = false;
};

inline AdmissibilityReport admissibility_from(double lebesgue, double max_radius, double tau) {
  AdmissibilityReport r;
  r.lebesgue = lebesgue;
  r.cond_shrink = lebesgue >= tau / 4.0;
  r.cond_radius = max_radius <= (tau + lebesgue) / 2.0;
  r.admissible = r.cond_shrink && r.cond_radius;
  return r;
}

inline AdmissibilityReport check_admissibility(const LandmarkConfiguration& config,
                                               std::span<const DiagramPoint> support) {
  return admissibility_from(lebesgue_number(config, support), config.max_radius(), config.tau());
}

struct Certificate {
  double value = 0.0;
  /// No landmark has r_k >= tau/4.
  bool degenerate = false;
};

/// Smallest weight among landmarks with r_k >= tau/4; 0 if there are none.
inline double min_qualifying_weight(const LandmarkConfiguration& config) {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& l : config.landmarks()) {
    if (l.radius >= config.tau() / 4.0) w = std::min(w, l.weight);
  }
  return std::isfinite(w) ? w : 0.0;
}

/// rho_nu = (tau / 4) * w_min over landmarks with r_k >= tau / 4.
inline Certificate rho_nu(const LandmarkConfiguration& config) {
  double w = min_qualifying_weight(config);
  return {config.tau() / 4.0 * w, w == 0.0};
}

/// rho_eff = lambda_0 * w_min over the same qualifying set.
inline Certificate rho_eff(const LandmarkConfiguration& config, std::span<const DiagramPoint> support) {
  double w = min_qualifying_weight(config);
  return {lebesgue_number(config, support) * w, w == 0.0};
}

struct BudgetBounds {
  std::uint64_t k_adapt_max = 0;
  std::uint64_t k_unif_min = 0;
  double ratio = 0.0;
  /// The adaptive bound beats the uniform one (ratio < 1).
  bool informative = false;
};

/// K_adapt <= ceil((4D/tau)^2), K_unif >= ceil(4 (L/tau)^2), ratio 4 D^2 / L^2.
inline BudgetBounds budget_bounds(double D, double L, double tau) {
  if (!(D >= 0.0) || !(L > 0.0) || !(tau > 0.0)) {
    throw std::invalid_argument("budget_bounds: need D >= 0, L > 0, tau > 0");
  }
  constexpr double kLimit = 9.0e15;  // exactly representable integer range
  double adapt = std::ceil(std::pow(4.0 * D / tau, 2));
  double unif = std::ceil(4.0 * std::pow(L / tau, 2));
  if (!std::isfinite(adapt) || !std::isfinite(unif) || adapt > kLimit || unif > kLimit) {
    throw std::overflow_error("budget_bounds: landmark budget overflows at this tau");
  }
  BudgetBounds b;
  b.k_adapt_max = static_cast<std::uint64_t>(adapt);
  b.k_unif_min = static_cast<std::uint64_t>(unif);
  b.ratio = 4.0 * D * D / (L * L);
  b.informative = b.ratio < 1.0;
  return b;
}

// ---------------------------------------------------------------------------
// Separation-scale rules

enum class TauStrategy { MedianHalfPersistence, BottleneckQuantile, MeanStrongestHalfPersistence };

/// Median of p.persistence()/2 over every point of every diagram.
inline double tau_median_half_persistence(std::span<const PersistenceDiagram> diagrams) {
  std::vector<double> v;
  for (const auto& d : diagrams) {
    for (const auto& p : d.points()) v.push_back(p.persistence() / 2.0);
  }
  if (v.empty()) throw std::invalid_argument("tau: diagrams contain no points");
  return median(std::move(v));
}

/// Mean over diagrams of half the largest persistence.
inline double tau_mean_strongest_half_persistence(std::span<const PersistenceDiagram> diagrams) {
  std::vector<double> v;
  for (const auto& d : diagrams) {
    if (!d.empty()) v.push_back(d.max_persistence() / 2.0);
  }
  if (v.empty()) throw std::invalid_argument("tau: diagrams contain no points");
  return mean(v);
}

/// q-quantile of bottleneck distances over the given pairs.
inline double tau_bottleneck_quantile(std::span<const PersistenceDiagram> diagrams,
                                      std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                      double q) {
  std::vector<double> v;
  v.reserve(pairs.size());
  for (auto [i, j] : pairs) v.push_back(bottleneck_distance(diagrams[i], diagrams[j]).distance);
  if (v.empty()) throw std::invalid_argument("tau: no pairs");
  return quantile(std::move(v), q);
}

// ---------------------------------------------------------------------------
// Audits

enum class AuditStatus { Audited, Vacuous, ZeroDistance, NotAuditable };

struct NonInterferenceAudit {
  AuditStatus status = AuditStatus::NotAuditable;
  double distance = 0.0;
  /// min_{i != j} d_B(a_i, b_sigma(j)) / d_B(A, B) under the witnessing matching.
  double min_cross_ratio = std::numeric_limits<double>::quiet_NaN();
  bool passes = false;
  /// Sufficient condition: within-A or within-B separation exceeds 4 d_B(A, B).
  bool within_scale_ok = false;
};

inline NonInterferenceAudit audit_noninterference(const PersistenceDiagram& A,
                                                  const PersistenceDiagram& B) {
  NonInterferenceAudit out;
  auto m = bottleneck_distance(A, B);
  out.distance = m.distance;
  if (A.size() != B.size() || !m.is_total()) return out;
  if (m.distance == 0.0) {
    out.status = AuditStatus::ZeroDistance;
    return out;
  }
  const std::size_t n = A.size();
  if (n == 1) {
    out.status = AuditStatus::Vacuous;
    out.min_cross_ratio = std::numeric_limits<double>::infinity();
    out.passes = true;
    out.within_scale_ok = true;
    return out;
  }
  double cross = std::numeric_limits<double>::infinity();
  double within_a = cross, within_b = cross;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      cross = std::min(cross, point_bottleneck(A[i], B[static_cast<std::size_t>(m.a_to_b[j])]));
      within_a = std::min(within_a, point_bottleneck(A[i], A[j]));
      within_b = std::min(within_b, point_bottleneck(B[i], B[j]));
    }
  }
  out.status = AuditStatus::Audited;
  out.min_cross_ratio = cross / m.distance;
  out.passes = out.min_cross_ratio > 3.0;
  out.within_scale_ok = std::max(within_a, within_b) > 4.0 * m.distance;
  return out;
}

struct CertificateAudit {
  std::size_t n_pairs = 0;
  /// Pairs with d_B(A, B) >= tau.
  std::size_t n_tau = 0;
  double bound_pct = 0.0;
  double p25 = 0.0, p50 = 0.0, p75 = 0.0;
  double min = 0.0;
  std::vector<double> ratios;
};

/// For each tau-separated pair, ||Phi(A) - Phi(B)|| / rho_nu.
inline CertificateAudit audit_certificate(
    std::span<const std::pair<PersistenceDiagram, PersistenceDiagram>> pairs,
    const LandmarkConfiguration& config) {
  auto cert = rho_nu(config);
  if (cert.degenerate) throw std::invalid_argument("audit_certificate: degenerate configuration (rho_nu = 0)");
  CertificateAudit out;
  out.n_pairs = pairs.size();
  std::size_t bound = 0;
  for (const auto& [A, B] : pairs) {
    if (bottleneck_distance(A, B).distance < config.tau()) continue;
    double gap = (embed(A, config).values - embed(B, config).values).norm();
    double ratio = gap / cert.value;
    out.ratios.push_back(ratio);
    if (ratio >= 1.0) ++bound;
  }
  out.n_tau = out.ratios.size();
  if (out.n_tau > 0) {
    out.bound_pct = 100.0 * static_cast<double>(bound) / static_cast<double>(out.n_tau);
    out.p25 = quantile(out.ratios, 0.25);
    out.p50 = quantile(out.ratios, 0.50);
    out.p75 = quantile(out.ratios, 0.75);
    out.min = *std::min_element(out.ratios.begin(), out.ratios.end());
  }
  return out;
}

}  // namespace palace
