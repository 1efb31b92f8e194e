#pragma once

#include <functional>
#include <limits>
#include <queue>
#include <stdexcept>
#include <vector>

#include "designforge/graph.hpp"
#include "designforge/rng.hpp"
#include "designforge/validate.hpp"

namespace designforge {

// Bipartite matching instance in local indices: left 0..nl-1, right 0..nr-1.
struct BipartiteInstance {
  int nl = 0, nr = 0;
  std::vector<std::vector<int>> adj;  // per left vertex

  BipartiteInstance() = default;
  BipartiteInstance(int l, int r) : nl(l), nr(r), adj(l) {}
};

struct MatchingResult {
  bool perfect = false;
  std::vector<int> match_l;        // left -> right or -1
  std::vector<int> match_r;        // right -> left or -1
  std::vector<int> hall_violator;  // left-side set X with |N(X)| < |X| (if not perfect)
};

// Hopcroft-Karp maximum matching; when the matching is not left-perfect the
// result carries a Hall violator built from alternating-path reachability.
inline MatchingResult hopcroft_karp(const BipartiteInstance& g, Rng* rng = nullptr) {
  const int INF = std::numeric_limits<int>::max();
  std::vector<int> ml(g.nl, -1), mr(g.nr, -1), dist(g.nl);
  std::vector<std::vector<int>> adj = g.adj;
  if (rng)
    for (auto& a : adj) rng->shuffle(a);

  auto bfs = [&]() {
    std::queue<int> q;
    bool found = false;
    for (int u = 0; u < g.nl; ++u) {
      if (ml[u] == -1) {
        dist[u] = 0;
        q.push(u);
      } else {
        dist[u] = INF;
      }
    }
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[u]) {
        int w = mr[v];
        if (w == -1) {
          found = true;
        } else if (dist[w] == INF) {
          dist[w] = dist[u] + 1;
          q.push(w);
        }
      }
    }
    return found;
  };

  std::vector<int> it_(g.nl);
  std::function<bool(int)> dfs = [&](int u) {
    for (int& i = it_[u]; i < static_cast<int>(adj[u].size()); ++i) {
      int v = adj[u][i];
      int w = mr[v];
      if (w == -1 || (dist[w] == dist[u] + 1 && dfs(w))) {
        ml[u] = v;
        mr[v] = u;
        return true;
      }
    }
    dist[u] = std::numeric_limits<int>::max();
    return false;
  };

  while (bfs()) {
    std::fill(it_.begin(), it_.end(), 0);
    for (int u = 0; u < g.nl; ++u)
      if (ml[u] == -1) dfs(u);
  }

  MatchingResult res;
  res.match_l = ml;
  res.match_r = mr;
  res.perfect = true;
  for (int u = 0; u < g.nl; ++u)
    if (ml[u] == -1) res.perfect = false;
  if (!res.perfect) {
    // X = free left vertices plus left vertices reachable by alternating
    // paths; then N(X) = matched right vertices reached, |N(X)| = |X| - free.
    std::vector<char> lvis(g.nl, 0), rvis(g.nr, 0);
    std::queue<int> q;
    for (int u = 0; u < g.nl; ++u)
      if (ml[u] == -1) {
        lvis[u] = 1;
        q.push(u);
      }
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[u]) {
        if (rvis[v]) continue;
        rvis[v] = 1;
        int w = mr[v];
        if (w != -1 && !lvis[w]) {
          lvis[w] = 1;
          q.push(w);
        }
      }
    }
    for (int u = 0; u < g.nl; ++u)
      if (lvis[u]) res.hall_violator.push_back(u);
  }
  return res;
}

// Convenience wrapper on a bipartite Graph with two equal parts. Returns
// matching edges in global vertex ids; on failure the Hall violator is
// reported in global ids of part 0.
struct PerfectMatchingOutcome {
  bool ok = false;
  Matching matching;               // global (u,v) pairs
  std::vector<int> hall_violator;  // global ids in part 0
};

inline PerfectMatchingOutcome perfect_matching(const Graph& g, Rng* rng = nullptr) {
  if (g.part_count() != 2) throw std::invalid_argument("perfect_matching: not bipartite");
  const auto& a = g.part(0);
  const auto& b = g.part(1);
  if (a.size() != b.size())
    throw std::invalid_argument("perfect_matching: unequal parts");
  std::vector<int> rindex(g.vertex_count(), -1);
  for (std::size_t i = 0; i < b.size(); ++i) rindex[b[i]] = static_cast<int>(i);
  BipartiteInstance inst(static_cast<int>(a.size()), static_cast<int>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    g.for_each_neighbor(a[i], [&](int v) {
      if (rindex[v] >= 0) inst.adj[i].push_back(rindex[v]);
    });
  auto res = hopcroft_karp(inst, rng);
  PerfectMatchingOutcome out;
  out.ok = res.perfect;
  if (res.perfect) {
    for (std::size_t i = 0; i < a.size(); ++i)
      out.matching.emplace_back(a[i], b[res.match_l[i]]);
  } else {
    for (int u : res.hall_violator) out.hall_violator.push_back(a[u]);
  }
  return out;
}

}  // namespace designforge
