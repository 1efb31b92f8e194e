#pragma once

#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <vector>

#include "designforge/graph.hpp"

namespace designforge {

// Dinic max-flow on small unit-capacity-dominated networks.
class MaxFlow {
 public:
  explicit MaxFlow(int n) : n_(n), head_(n, -1) {}

  int add_edge(int u, int v, int cap) {
    int id = static_cast<int>(to_.size());
    to_.push_back(v); cap_.push_back(cap); next_.push_back(head_[u]); head_[u] = id;
    to_.push_back(u); cap_.push_back(0);   next_.push_back(head_[v]); head_[v] = id + 1;
    return id;
  }

  int flow_on(int id) const { return cap_[id ^ 1]; }

  long long run(int s, int t) {
    long long total = 0;
    while (bfs(s, t)) {
      it_ = head_;
      long long f;
      while ((f = dfs(s, t, std::numeric_limits<int>::max())) > 0) total += f;
    }
    s_ = s;
    return total;
  }

  // After run(): vertices reachable from s in the residual graph (min cut side).
  std::vector<char> source_side() const {
    std::vector<char> vis(n_, 0);
    std::queue<int> q;
    vis[s_] = 1;
    q.push(s_);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int e = head_[u]; e != -1; e = next_[e])
        if (cap_[e] > 0 && !vis[to_[e]]) {
          vis[to_[e]] = 1;
          q.push(to_[e]);
        }
    }
    return vis;
  }

 private:
  bool bfs(int s, int t) {
    level_.assign(n_, -1);
    std::queue<int> q;
    level_[s] = 0;
    q.push(s);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int e = head_[u]; e != -1; e = next_[e])
        if (cap_[e] > 0 && level_[to_[e]] == -1) {
          level_[to_[e]] = level_[u] + 1;
          q.push(to_[e]);
        }
    }
    return level_[t] != -1;
  }

  long long dfs(int u, int t, int lim) {
    if (u == t || lim == 0) return lim;
    for (int& e = it_[u]; e != -1; e = next_[e]) {
      int v = to_[e];
      if (cap_[e] > 0 && level_[v] == level_[u] + 1) {
        long long f = dfs(v, t, std::min(lim, cap_[e]));
        if (f > 0) {
          cap_[e] -= static_cast<int>(f);
          cap_[e ^ 1] += static_cast<int>(f);
          return f;
        }
      }
    }
    level_[u] = -1;
    return 0;
  }

  int n_, s_ = 0;
  std::vector<int> head_, to_, cap_, next_, level_, it_;
};

// Degree spec: required degree per vertex (global vertex id).
using DegreeSpec = std::vector<int>;

struct FFactorResult {
  bool feasible = false;
  std::vector<std::pair<int, int>> edges;  // the exact-degree subgraph
  // Infeasibility witness: sets violating e(A',B') >= sum_{A'} f - sum_{B\B'} f.
  std::vector<int> a_prime, b_prime;
};

// Exact-degree spanning subgraph of a bipartite graph via max-flow:
// source -> a with capacity f(a), unit capacities on edges, b -> sink with
// capacity f(b). On infeasibility the min cut yields the witness
// A' = A n S, B' = B \ S, for which e(A',B') < sum_{A'} f - sum_{B\B'} f.
inline FFactorResult f_factor(const Graph& g, const DegreeSpec& f) {
  if (g.part_count() != 2) throw std::invalid_argument("f_factor: not bipartite");
  const auto& a = g.part(0);
  const auto& b = g.part(1);
  long long suma = 0, sumb = 0;
  for (int v : a) suma += f[v];
  for (int v : b) sumb += f[v];
  if (suma != sumb) throw std::invalid_argument("f_factor: unbalanced degree sums");
  for (int v = 0; v < g.vertex_count(); ++v)
    if (f[v] < 0) throw std::invalid_argument("f_factor: negative demand");

  int n = g.vertex_count();
  int s = n, t = n + 1;
  MaxFlow mf(n + 2);
  for (int v : a) mf.add_edge(s, v, f[v]);
  for (int v : b) mf.add_edge(v, t, f[v]);
  std::vector<std::pair<int, std::pair<int, int>>> edge_ids;
  std::vector<char> in_b(n, 0);
  for (int v : b) in_b[v] = 1;
  g.for_each_edge([&](int u, int v) {
    int x = in_b[u] ? v : u;  // x in A
    int y = in_b[u] ? u : v;  // y in B
    edge_ids.push_back({mf.add_edge(x, y, 1), {x, y}});
  });

  FFactorResult res;
  long long got = mf.run(s, t);
  if (got == suma) {
    res.feasible = true;
    for (auto& [id, e] : edge_ids)
      if (mf.flow_on(id) > 0) res.edges.push_back(e);
  } else {
    auto vis = mf.source_side();
    for (int v : a)
      if (vis[v]) res.a_prime.push_back(v);
    for (int v : b)
      if (!vis[v]) res.b_prime.push_back(v);
  }
  return res;
}

// Independent brute-force feasibility oracle over all edge subsets.
inline bool f_factor_oracle(const Graph& g, const DegreeSpec& f) {
  auto edges = g.edges();
  if (edges.size() > 22) throw std::invalid_argument("f_factor_oracle: too many edges");
  int m = static_cast<int>(edges.size());
  std::vector<int> deg(g.vertex_count());
  for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
    std::fill(deg.begin(), deg.end(), 0);
    for (int i = 0; i < m; ++i)
      if (mask >> i & 1) {
        ++deg[edges[i].first];
        ++deg[edges[i].second];
      }
    bool ok = true;
    for (int v = 0; v < g.vertex_count() && ok; ++v) ok = deg[v] == f[v];
    if (ok) return true;
  }
  return false;
}

}  // namespace designforge
