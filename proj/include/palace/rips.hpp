// Vietoris-Rips persistence in dimensions 0 and 1 for planar point clouds.
//
// Filtration value of a simplex = its diameter (largest pairwise Euclidean
// distance). Simplices are ordered by (value, dimension, lexicographic vertex
// tuple). H0 comes from union-find over the sorted edges; H1 from the GF(2)
// column reduction of the triangle boundary matrix. Zero-persistence bars and
// the essential H0 class are dropped.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "palace/diagram.hpp"

namespace palace {

struct PointCloud {
  std::vector<std::array<double, 2>> points;
  std::optional<int> label;
};

struct RipsDiagrams {
  PersistenceDiagram h0;
  PersistenceDiagram h1;
};

inline constexpr std::size_t kDefaultRipsCap = 128;

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<int> rank_;
};

// Symmetric difference of two sorted index columns.
inline void add_column(std::vector<int>& target, const std::vector<int>& source,
                       std::vector<int>& scratch) {
  scratch.clear();
  std::set_symmetric_difference(target.begin(), target.end(), source.begin(), source.end(),
                                std::back_inserter(scratch));
  target.swap(scratch);
}

}  // namespace detail

inline RipsDiagrams rips_persistence(const PointCloud& cloud,
                                     double max_radius = std::numeric_limits<double>::infinity(),
                                     std::size_t cap = kDefaultRipsCap) {
  if (!(max_radius > 0.0)) throw std::invalid_argument("rips_persistence: max_radius must be > 0");
  const std::size_t n = cloud.points.size();
  if (n > cap) {
    throw std::invalid_argument("rips_persistence: cloud has " + std::to_string(n) +
                                " points, above the cap of " + std::to_string(cap));
  }
  for (const auto& p : cloud.points) {
    if (!std::isfinite(p[0]) || !std::isfinite(p[1])) {
      throw std::invalid_argument("rips_persistence: non-finite coordinate");
    }
  }

  RipsDiagrams out;
  out.h0.set_label(cloud.label);
  out.h1.set_label(cloud.label);
  out.h0.set_tag("rips-h0");
  out.h1.set_tag("rips-h1");
  if (n < 2) return out;

  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dx = cloud.points[i][0] - cloud.points[j][0];
      double dy = cloud.points[i][1] - cloud.points[j][1];
      dist[i * n + j] = dist[j * n + i] = std::sqrt(dx * dx + dy * dy);
    }
  }

  struct Edge {
    double value;
    std::uint32_t u, v;
  };
  std::vector<Edge> edges;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      double d = dist[i * n + j];
      if (d <= max_radius) edges.push_back({d, i, j});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.value != b.value) return a.value < b.value;
    if (a.u != b.u) return a.u < b.u;
    return a.v < b.v;
  });

  // Position of edge (i, j) in filtration order, -1 when above max_radius.
  std::vector<int> edge_index(n * n, -1);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    edge_index[edges[e].u * n + edges[e].v] = static_cast<int>(e);
    edge_index[edges[e].v * n + edges[e].u] = static_cast<int>(e);
  }

  detail::UnionFind uf(n);
  for (const auto& e : edges) {
    if (uf.unite(e.u, e.v) && e.value > 0.0) out.h0.push_back({0.0, e.value});
  }

  struct Triangle {
    double value;
    std::array<std::uint32_t, 3> v;
  };
  std::vector<Triangle> triangles;
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      if (edge_index[i * n + j] < 0) continue;
      for (std::uint32_t k = j + 1; k < n; ++k) {
        if (edge_index[i * n + k] < 0 || edge_index[j * n + k] < 0) continue;
        double d = std::max({dist[i * n + j], dist[i * n + k], dist[j * n + k]});
        triangles.push_back({d, {i, j, k}});
      }
    }
  }
  std::sort(triangles.begin(), triangles.end(), [](const Triangle& a, const Triangle& b) {
    if (a.value != b.value) return a.value < b.value;
    return a.v < b.v;
  });

  // Column reduction; pivot = youngest edge of the column.
  std::vector<int> pivot_owner(edges.size(), -1);
  std::vector<std::vector<int>> reduced(triangles.size());
  std::vector<int> scratch;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    std::vector<int> col{edge_index[tri.v[0] * n + tri.v[1]], edge_index[tri.v[0] * n + tri.v[2]],
                         edge_index[tri.v[1] * n + tri.v[2]]};
    std::sort(col.begin(), col.end());
    while (!col.empty()) {
      int owner = pivot_owner[static_cast<std::size_t>(col.back())];
      if (owner < 0) break;
      detail::add_column(col, reduced[static_cast<std::size_t>(owner)], scratch);
    }
    if (!col.empty()) {
      int pivot = col.back();
      pivot_owner[static_cast<std::size_t>(pivot)] = static_cast<int>(t);
      double birth = edges[static_cast<std::size_t>(pivot)].value;
      if (tri.value > birth) out.h1.push_back({birth, tri.value});
      reduced[t] = std::move(col);
    }
  }
  return out;
}

}  // namespace palace
