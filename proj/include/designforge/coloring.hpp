#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "designforge/graph.hpp"
#include "designforge/lists.hpp"
#include "designforge/validate.hpp"

namespace designforge {

// A proper k-edge-colouring given as matchings; equitable when class sizes
// differ by at most one.
struct ColourClasses {
  int k = 0;
  std::vector<Matching> classes;

  std::unordered_map<std::uint64_t, int> colour_map() const {
    std::unordered_map<std::uint64_t, int> out;
    for (int c = 0; c < k; ++c)
      for (auto [u, v] : classes[c]) out.emplace(edge_key(u, v), c);
    return out;
  }

  int max_size() const {
    int m = 0;
    for (const auto& cl : classes) m = std::max(m, static_cast<int>(cl.size()));
    return m;
  }
  int min_size() const {
    int m = classes.empty() ? 0 : static_cast<int>(classes[0].size());
    for (const auto& cl : classes) m = std::min(m, static_cast<int>(cl.size()));
    return m;
  }
};

namespace detail {

// Fan/rotation proper (Delta+1)-edge-colouring state. at[v][c] is the
// neighbour joined to v by a c-coloured edge, or -1.
struct EdgeColourer {
  int n, k;
  std::vector<std::vector<int>> at;

  EdgeColourer(int n_, int k_) : n(n_), k(k_), at(n_, std::vector<int>(k_, -1)) {}

  int colour_of(int u, int v) const {
    for (int c = 0; c < k; ++c)
      if (at[u][c] == v) return c;
    return -1;
  }
  int free_colour(int v) const {
    for (int c = 0; c < k; ++c)
      if (at[v][c] < 0) return c;
    throw std::logic_error("no free colour");
  }
  void set(int u, int v, int c) {
    at[u][c] = v;
    at[v][c] = u;
  }
  void unset(int u, int v, int c) {
    at[u][c] = -1;
    at[v][c] = -1;
  }

  // Swap colours c <-> d along the maximal cd-alternating path from x,
  // where c is free at x (so the path, if any, leaves x on a d-edge).
  void flip_cd_path(int x, int c, int d) {
    std::vector<int> verts = {x};
    int cur = x, col = d;
    while (at[cur][col] >= 0) {
      cur = at[cur][col];
      verts.push_back(cur);
      col = (col == c) ? d : c;
    }
    col = d;
    for (std::size_t i = 0; i + 1 < verts.size(); ++i) {
      unset(verts[i], verts[i + 1], col);
      col = (col == c) ? d : c;
    }
    col = c;  // the former d-edge at x becomes c, and so on alternating
    for (std::size_t i = 0; i + 1 < verts.size(); ++i) {
      set(verts[i], verts[i + 1], col);
      col = (col == c) ? d : c;
    }
  }

  void colour_edge(int x, int f) {
    // Maximal fan of x starting at f: each next spoke carries the colour
    // missing at the previous fan vertex.
    std::vector<int> fan = {f};
    std::vector<char> in_fan(n, 0);
    in_fan[f] = 1;
    while (true) {
      int c = free_colour(fan.back());
      int w = at[x][c];
      if (w < 0 || in_fan[w]) break;
      fan.push_back(w);
      in_fan[w] = 1;
    }
    int c = free_colour(x);
    int d = free_colour(fan.back());
    if (c != d) flip_cd_path(x, c, d);
    // d is now free at x. Take the first fan prefix that is still a fan
    // under the flipped colouring and whose last vertex misses d, rotate
    // it, and finish with d.
    int take = -1;
    for (std::size_t i = 0; i < fan.size(); ++i) {
      if (i > 0) {
        int ci = colour_of(x, fan[i]);
        if (ci < 0 || at[fan[i - 1]][ci] >= 0) break;  // prefix no longer a fan
      }
      if (at[fan[i]][d] < 0) {
        take = static_cast<int>(i);
        break;
      }
    }
    if (take < 0) throw std::logic_error("fan rotation failed");
    for (int t = 1; t <= take; ++t) {
      int ct = colour_of(x, fan[t]);
      unset(x, fan[t], ct);
      set(x, fan[t - 1], ct);
    }
    set(x, fan[take], d);
  }
};

}  // namespace detail

// Proper k-edge-colouring (k >= Delta+1) by fan rotation, then balanced to
// equitable class sizes by two-class alternating-path exchanges: in the
// union of two classes every component is a path or even cycle, and a path
// with a one-edge surplus of the larger class can be flipped wholesale.
inline ColourClasses equitable_edge_colouring(const Graph& g, int k) {
  int n = g.vertex_count();
  detail::EdgeColourer ec(n, k);
  if (k >= g.max_degree() + 1) {
    g.for_each_edge([&](int u, int v) { ec.colour_edge(u, v); });
  } else {
    // Below the fan-rotation regime only exact search is honest; capped to
    // small instances (the chromatic index question is hard in general).
    if (k < g.max_degree() || g.edge_count() > 64)
      throw std::invalid_argument(
          "equitable_edge_colouring: k < max degree + 1 and no small exact fallback");
    auto edges = g.edges();
    std::vector<int> chosen(edges.size(), -1);
    std::function<bool(std::size_t)> place = [&](std::size_t i) {
      if (i == edges.size()) return true;
      auto [u, v] = edges[i];
      for (int c = 0; c < k; ++c) {
        if (ec.at[u][c] >= 0 || ec.at[v][c] >= 0) continue;
        ec.set(u, v, c);
        chosen[i] = c;
        if (place(i + 1)) return true;
        ec.unset(u, v, c);
        chosen[i] = -1;
      }
      return false;
    };
    if (!place(0))
      throw std::invalid_argument("equitable_edge_colouring: no proper k-edge-colouring");
  }

  // Balance: while some pair of classes differs by >= 2, flip one
  // surplus path in their union.
  std::vector<int> size(k, 0);
  for (int v = 0; v < n; ++v)
    for (int c = 0; c < k; ++c)
      if (ec.at[v][c] > v) ++size[c];
  while (true) {
    int big = 0, small = 0;
    for (int c = 0; c < k; ++c) {
      if (size[c] > size[big]) big = c;
      if (size[c] < size[small]) small = c;
    }
    if (size[big] - size[small] <= 1) break;
    // Find a path endpoint whose component has a big-class surplus: an
    // endpoint incident to big but missing small starts a path whose edge
    // count is odd with big majority, or balanced; try all endpoints.
    bool flipped = false;
    for (int v = 0; v < n && !flipped; ++v) {
      if (ec.at[v][big] < 0 || ec.at[v][small] >= 0) continue;
      // Walk the alternating path starting with the big edge.
      int cur = v, col = big, nb = 0, ns = 0;
      while (ec.at[cur][col] >= 0) {
        cur = ec.at[cur][col];
        (col == big ? nb : ns)++;
        col = (col == big) ? small : big;
      }
      if (nb <= ns) continue;
      ec.flip_cd_path(v, small, big);
      size[big] -= nb - ns;
      size[small] += nb - ns;
      flipped = true;
    }
    if (!flipped) throw std::logic_error("equitable balancing stalled");
  }

  ColourClasses out;
  out.k = k;
  out.classes.assign(k, {});
  for (int v = 0; v < n; ++v)
    for (int c = 0; c < k; ++c)
      if (ec.at[v][c] > v) out.classes[c].emplace_back(v, ec.at[v][c]);
  return out;
}

}  // namespace designforge
