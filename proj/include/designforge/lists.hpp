#pragma once

#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "designforge/graph.hpp"
#include "designforge/rng.hpp"
#include "designforge/triangles.hpp"

namespace designforge {

inline std::uint64_t edge_key(int u, int v) {
  if (u > v) std::swap(u, v);
  return (static_cast<std::uint64_t>(u) << 32) | static_cast<std::uint64_t>(v);
}

enum class ListMode { binomial, uniform_k };

// Per-edge allowed-colour subsets of [n_colours].
struct ListAssignment {
  int n_colours = 0;
  ListMode mode = ListMode::binomial;
  std::unordered_map<std::uint64_t, std::vector<int>> lists;

  const std::vector<int>& list(int u, int v) const {
    static const std::vector<int> kEmpty;
    auto it = lists.find(edge_key(u, v));
    return it == lists.end() ? kEmpty : it->second;
  }
  bool allows(int u, int v, int colour) const {
    const auto& l = list(u, v);
    for (int c : l)
      if (c == colour) return true;
    return false;
  }
};

// Independent random lists over the edges of H: binomial(p) includes each
// colour independently; uniform-k picks exactly k distinct colours.
inline ListAssignment sample_lists(const Graph& h, ListMode mode, double p, int k,
                                   int n_colours, Rng& rng) {
  if (n_colours < 1) throw std::invalid_argument("n_colours < 1");
  if (mode == ListMode::uniform_k && k > n_colours)
    throw std::invalid_argument("k > n_colours");
  ListAssignment out;
  out.n_colours = n_colours;
  out.mode = mode;
  std::vector<int> all(n_colours);
  for (int c = 0; c < n_colours; ++c) all[c] = c;
  h.for_each_edge([&](int u, int v) {
    std::vector<int> l;
    if (mode == ListMode::binomial) {
      for (int c = 0; c < n_colours; ++c)
        if (rng.bernoulli(p)) l.push_back(c);
    } else {
      std::vector<int> pool = all;
      rng.shuffle(pool);
      l.assign(pool.begin(), pool.begin() + k);
      std::sort(l.begin(), l.end());
    }
    out.lists.emplace(edge_key(u, v), std::move(l));
  });
  return out;
}

// Bijection between exposed triangles of an ls_base graph and colour lists
// on its bipartite host: L(xy) = { s : triangle x-y-s exposed-present }.
// Colour s is the index of the s-th vertex of V3.
inline ListAssignment triangle_list_correspondence(const Graph& g,
                                                   ExposureLedger& ledger,
                                                   int class_id = -1) {
  if (g.kind != "ls_base") throw std::invalid_argument("not an ls_base graph");
  const auto& v1 = g.part(0);
  const auto& v3 = g.part(2);
  int d = static_cast<int>(v3.size());
  ListAssignment out;
  out.n_colours = d;
  out.mode = ListMode::binomial;
  int m = static_cast<int>(v1.size());
  g.for_each_edge([&](int u, int v) {
    // Host edges are exactly the V1-V2 edges.
    if (g.part_of(u) + g.part_of(v) != 1) return;
    (void)m;
    std::vector<int> l;
    for (int s = 0; s < d; ++s)
      if (ledger.expose(Triangle(u, v, v3[s]), class_id)) l.push_back(s);
    out.lists.emplace(edge_key(u, v), std::move(l));
  });
  return out;
}

// Inverse direction: the triangles a list assignment encodes.
inline std::vector<Triangle> lists_to_triangles(const Graph& g,
                                                const ListAssignment& la) {
  if (g.kind != "ls_base") throw std::invalid_argument("not an ls_base graph");
  const auto& v3 = g.part(2);
  std::vector<Triangle> out;
  for (const auto& [key, l] : la.lists) {
    int u = static_cast<int>(key >> 32);
    int v = static_cast<int>(key & 0xffffffffULL);
    for (int s : l) out.emplace_back(u, v, v3[s]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace designforge
