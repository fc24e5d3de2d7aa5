// Hopcroft-Karp maximum cardinality matching on a bipartite graph.
//
// Left vertices 0..n_left-1, right vertices 0..n_right-1. Phases alternate a
// BFS that layers the free left vertices with a DFS that augments along
// vertex-disjoint shortest paths; O(E sqrt(V)).

#pragma once

#include <cstddef>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

namespace palace {

class BipartiteMatcher {
 public:
  static constexpr int kFree = -1;

  BipartiteMatcher(std::size_t n_left, std::size_t n_right)
      : adj_(n_left), match_left_(n_left, kFree), match_right_(n_right, kFree),
        dist_(n_left, 0) {}

  void add_edge(std::size_t u, std::size_t v) {
    if (u >= adj_.size() || v >= match_right_.size()) {
      throw std::out_of_range("BipartiteMatcher::add_edge: vertex out of range");
    }
    adj_[u].push_back(static_cast<int>(v));
  }

  /// Runs to completion and returns the matching size.
  std::size_t solve() {
    std::size_t size = 0;
    while (bfs()) {
      for (std::size_t u = 0; u < adj_.size(); ++u) {
        if (match_left_[u] == kFree && dfs(static_cast<int>(u))) ++size;
      }
    }
    return size;
  }

  const std::vector<int>& left_mates() const { return match_left_; }
  const std::vector<int>& right_mates() const { return match_right_; }

 private:
  static constexpr int kInf = std::numeric_limits<int>::max();

  bool bfs() {
    std::queue<int> q;
    bool reachable_free = false;
    for (std::size_t u = 0; u < adj_.size(); ++u) {
      if (match_left_[u] == kFree) {
        dist_[u] = 0;
        q.push(static_cast<int>(u));
      } else {
        dist_[u] = kInf;
      }
    }
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj_[u]) {
        int w = match_right_[v];
        if (w == kFree) {
          reachable_free = true;
        } else if (dist_[w] == kInf) {
          dist_[w] = dist_[u] + 1;
          q.push(w);
        }
      }
    }
    return reachable_free;
  }

  bool dfs(int u) {
    for (int v : adj_[u]) {
      int w = match_right_[v];
      if (w == kFree || (dist_[w] == dist_[u] + 1 && dfs(w))) {
        match_left_[u] = v;
        match_right_[v] = u;
        return true;
      }
    }
    dist_[u] = kInf;
    return false;
  }

  std::vector<std::vector<int>> adj_;
  std::vector<int> match_left_;
  std::vector<int> match_right_;
  std::vector<int> dist_;
};

}  // namespace palace
