// Persistence diagrams and bottleneck geometry.
//
// A diagram is a finite multiset of (birth, death) points above the diagonal.
// Distances follow the usual diagonal-augmented bottleneck convention: a point
// may be matched to the diagonal at cost persistence / 2.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "palace/matching.hpp"

namespace palace {

struct DiagramPoint {
  double birth = 0.0;
  double death = 0.0;

  double persistence() const { return death - birth; }
  bool is_finite() const { return std::isfinite(birth) && std::isfinite(death); }

  friend bool operator==(const DiagramPoint&, const DiagramPoint&) = default;
};

inline double linf(const DiagramPoint& x, const DiagramPoint& y) {
  return std::max(std::abs(x.birth - y.birth), std::abs(x.death - y.death));
}

/// Bottleneck distance between the one-point diagrams {x} and {y}: either
/// match x to y, or send both to the diagonal.
inline double point_bottleneck(const DiagramPoint& x, const DiagramPoint& y) {
  return std::min(linf(x, y), std::max(x.persistence(), y.persistence()) / 2.0);
}

class PersistenceDiagram {
 public:
  PersistenceDiagram() = default;

  explicit PersistenceDiagram(std::vector<DiagramPoint> points,
                              std::optional<int> label = std::nullopt, std::string tag = {})
      : points_(std::move(points)), label_(label), tag_(std::move(tag)) {
    for (const auto& p : points_) validate(p);
  }

  const std::vector<DiagramPoint>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const DiagramPoint& operator[](std::size_t i) const { return points_[i]; }

  const std::optional<int>& label() const { return label_; }
  void set_label(std::optional<int> label) { label_ = label; }
  const std::string& tag() const { return tag_; }
  void set_tag(std::string tag) { tag_ = std::move(tag); }

  void push_back(const DiagramPoint& p) {
    validate(p);
    points_.push_back(p);
  }

  double max_persistence() const {
    double m = 0.0;
    for (const auto& p : points_) m = std::max(m, p.persistence());
    return m;
  }

  friend bool operator==(const PersistenceDiagram&, const PersistenceDiagram&) = default;

 private:
  static void validate(const DiagramPoint& p) {
    if (std::isnan(p.birth) || std::isnan(p.death)) {
      throw std::invalid_argument("diagram point has NaN coordinate");
    }
    if (p.death < p.birth) {
      throw std::invalid_argument("diagram point has death < birth");
    }
  }

  std::vector<DiagramPoint> points_;
  std::optional<int> label_;
  std::string tag_;
};

/// Matching that realizes a bottleneck distance. `a_to_b[i]` is the index in B
/// matched to A's i-th point, or kDiagonal; `b_to_a` is the inverse view.
struct BottleneckMatching {
  static constexpr int kDiagonal = -1;

  double distance = 0.0;
  std::vector<int> a_to_b;
  std::vector<int> b_to_a;

  bool is_total() const {
    return std::none_of(a_to_b.begin(), a_to_b.end(), [](int j) { return j == kDiagonal; }) &&
           std::none_of(b_to_a.begin(), b_to_a.end(), [](int i) { return i == kDiagonal; });
  }
};

namespace detail {

// Threshold graph over the augmented diagrams. Left = A's points followed by
// one diagonal slot per B point; right = B's points followed by one diagonal
// slot per A point. Diagonal-diagonal edges are free.
inline BipartiteMatcher threshold_graph(std::span<const DiagramPoint> a,
                                        std::span<const DiagramPoint> b, double t) {
  const std::size_t n = a.size(), m = b.size();
  BipartiteMatcher g(n + m, m + n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (linf(a[i], b[j]) <= t) g.add_edge(i, j);
    }
    if (a[i].persistence() / 2.0 <= t) g.add_edge(i, m + i);
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (b[j].persistence() / 2.0 <= t) g.add_edge(n + j, j);
    for (std::size_t i = 0; i < n; ++i) g.add_edge(n + j, m + i);
  }
  return g;
}

}  // namespace detail

/// Exact bottleneck distance with a witnessing matching. The distance is the
/// smallest candidate threshold (pairwise l-infinity distances and
/// half-persistences) whose threshold graph admits a perfect matching.
inline BottleneckMatching bottleneck_distance(const PersistenceDiagram& A,
                                              const PersistenceDiagram& B) {
  const auto& a = A.points();
  const auto& b = B.points();
  const std::size_t n = a.size(), m = b.size();
  auto finite = [](const DiagramPoint& p) { return p.is_finite(); };
  if (!std::all_of(a.begin(), a.end(), finite) || !std::all_of(b.begin(), b.end(), finite)) {
    throw std::invalid_argument("bottleneck_distance: diagrams must have finite coordinates");
  }

  std::vector<double> candidates{0.0};
  candidates.reserve(n * m + n + m + 1);
  for (const auto& x : a) {
    candidates.push_back(x.persistence() / 2.0);
    for (const auto& y : b) candidates.push_back(linf(x, y));
  }
  for (const auto& y : b) candidates.push_back(y.persistence() / 2.0);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  auto perfect = [&](double t) {
    auto g = detail::threshold_graph(a, b, t);
    return g.solve() == n + m;
  };

  // The largest candidate always admits a perfect matching (every point may
  // go to the diagonal), so the search is over a monotone predicate.
  std::size_t lo = 0, hi = candidates.size() - 1;
  while (lo < hi) {
    std::size_t mid = lo + (hi - lo) / 2;
    if (perfect(candidates[mid])) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }

  BottleneckMatching out;
  out.distance = candidates[lo];
  auto g = detail::threshold_graph(a, b, out.distance);
  g.solve();
  out.a_to_b.assign(n, BottleneckMatching::kDiagonal);
  out.b_to_a.assign(m, BottleneckMatching::kDiagonal);
  const auto& mates = g.left_mates();
  for (std::size_t i = 0; i < n; ++i) {
    if (mates[i] >= 0 && static_cast<std::size_t>(mates[i]) < m) {
      out.a_to_b[i] = mates[i];
      out.b_to_a[static_cast<std::size_t>(mates[i])] = static_cast<int>(i);
    }
  }
  return out;
}

/// Keeps the `n_max` most persistent points. Ties go to smaller birth, then
/// smaller death, then earlier position. Retained points keep their input
/// order, so diagrams already within budget come back unchanged.
inline PersistenceDiagram top_persistence_filter(const PersistenceDiagram& A, std::size_t n_max) {
  if (n_max == 0) throw std::invalid_argument("top_persistence_filter: n_max must be >= 1");
  if (A.size() <= n_max) return A;

  const auto& pts = A.points();
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    const auto& p = pts[i];
    const auto& q = pts[j];
    if (p.persistence() != q.persistence()) return p.persistence() > q.persistence();
    if (p.birth != q.birth) return p.birth < q.birth;
    return p.death < q.death;
  });
  order.resize(n_max);
  std::sort(order.begin(), order.end());

  std::vector<DiagramPoint> kept;
  kept.reserve(n_max);
  for (auto i : order) kept.push_back(pts[i]);
  return PersistenceDiagram(std::move(kept), A.label(), A.tag());
}

/// Removes zero-persistence and non-finite points.
inline PersistenceDiagram drop_degenerate(const PersistenceDiagram& A) {
  std::vector<DiagramPoint> kept;
  kept.reserve(A.size());
  for (const auto& p : A.points()) {
    if (p.is_finite() && p.persistence() > 0.0) kept.push_back(p);
  }
  return PersistenceDiagram(std::move(kept), A.label(), A.tag());
}

}  // namespace palace
