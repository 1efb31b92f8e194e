#pragma once

#include <vector>

#include "designforge/rng.hpp"

namespace designforge {

// Maximum matching in a general graph (blossom contraction, O(V^3)).
// Local vertex indices 0..n-1; adj is symmetric. An optional rng shuffles
// scan orders so repeated calls sample different maximum matchings.
struct GeneralMatching {
  std::vector<int> match;  // partner or -1
  int size = 0;
};

inline GeneralMatching general_max_matching(int n, std::vector<std::vector<int>> adj,
                                            Rng* rng = nullptr) {
  if (rng)
    for (auto& a : adj) rng->shuffle(a);
  std::vector<int> match(n, -1), p(n), base(n);
  std::vector<char> used(n), blossom(n);

  auto lca = [&](int a, int b) {
    std::vector<char> mark(n, 0);
    while (true) {
      a = base[a];
      mark[a] = 1;
      if (match[a] == -1) break;
      a = p[match[a]];
    }
    while (true) {
      b = base[b];
      if (mark[b]) return b;
      b = p[match[b]];
    }
  };

  auto mark_path = [&](int v, int b, int child) {
    while (base[v] != b) {
      blossom[base[v]] = 1;
      blossom[base[match[v]]] = 1;
      p[v] = child;
      child = match[v];
      v = p[match[v]];
    }
  };

  auto find_path = [&](int root) {
    std::fill(used.begin(), used.end(), 0);
    std::fill(p.begin(), p.end(), -1);
    for (int i = 0; i < n; ++i) base[i] = i;
    used[root] = 1;
    std::vector<int> q = {root};
    for (std::size_t qi = 0; qi < q.size(); ++qi) {
      int v = q[qi];
      for (int to : adj[v]) {
        if (base[v] == base[to] || match[v] == to) continue;
        if (to == root || (match[to] != -1 && p[match[to]] != -1)) {
          int curbase = lca(v, to);
          std::fill(blossom.begin(), blossom.end(), 0);
          mark_path(v, curbase, to);
          mark_path(to, curbase, v);
          for (int i = 0; i < n; ++i)
            if (blossom[base[i]]) {
              base[i] = curbase;
              if (!used[i]) {
                used[i] = 1;
                q.push_back(i);
              }
            }
        } else if (p[to] == -1) {
          p[to] = v;
          if (match[to] == -1) {
            // Augment along the alternating path ending at `to`.
            int u = to;
            while (u != -1) {
              int pv = p[u], ppv = match[pv];
              match[u] = pv;
              match[pv] = u;
              u = ppv;
            }
            return true;
          }
          used[match[to]] = 1;
          q.push_back(match[to]);
        }
      }
    }
    return false;
  };

  GeneralMatching out;
  out.match = std::move(match);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  if (rng) rng->shuffle(order);
  // Cheap greedy seed, then augment.
  for (int v : order) {
    if (out.match[v] != -1) continue;
    for (int to : adj[v])
      if (out.match[to] == -1) {
        out.match[v] = to;
        out.match[to] = v;
        break;
      }
  }
  match = std::move(out.match);
  for (int v : order)
    if (match[v] == -1) find_path(v);
  out.match = std::move(match);
  for (int v = 0; v < n; ++v)
    if (out.match[v] > v) ++out.size;
  return out;
}

}  // namespace designforge
