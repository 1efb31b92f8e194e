#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "designforge/graph.hpp"
#include "designforge/lists.hpp"
#include "designforge/triangles.hpp"

namespace designforge {

// 3-uniform linear hypergraph: any two hyperedges share at most one vertex.
// Immutable edge ids; linearity is asserted on every insertion via the set
// of covered vertex pairs.
class LinearTripleHypergraph {
 public:
  explicit LinearTripleHypergraph(int n) : n_(n), inc_(n) {
    if (n < 0) throw std::invalid_argument("negative vertex count");
  }

  int vertex_count() const { return n_; }
  int edge_count() const { return static_cast<int>(edges_.size()); }
  const std::array<int, 3>& edge(int id) const { return edges_[id]; }
  int degree(int v) const { return static_cast<int>(inc_[v].size()); }
  const std::vector<int>& incident(int v) const { return inc_[v]; }

  int add_edge(int a, int b, int c) {
    Triangle t(a, b, c);  // sorts + rejects repeats
    if (t.c >= n_ || t.a < 0) throw std::invalid_argument("vertex out of range");
    for (auto [u, v] : t.edges())
      if (!pairs_.insert(edge_key(u, v)).second)
        throw std::invalid_argument("linearity breach: pair covered twice");
    int id = static_cast<int>(edges_.size());
    edges_.push_back({t.a, t.b, t.c});
    inc_[t.a].push_back(id);
    inc_[t.b].push_back(id);
    inc_[t.c].push_back(id);
    return id;
  }

  double mean_degree() const {
    return n_ ? 3.0 * edge_count() / n_ : 0.0;
  }

 private:
  int n_;
  std::vector<std::array<int, 3>> edges_;
  std::vector<std::vector<int>> inc_;
  std::unordered_set<std::uint64_t> pairs_;
};

// The triangle hypergraph of a graph: one hypergraph vertex per graph edge
// (in canonical edge order), one hyperedge per triangle. Two triangles of a
// simple graph share at most one edge, so this is always linear.
struct TriangleHypergraph {
  LinearTripleHypergraph h{0};
  std::vector<std::pair<int, int>> edge_of_vertex;      // aux vertex -> graph edge
  std::unordered_map<std::uint64_t, int> vertex_of_edge;  // edge key -> aux vertex
  std::vector<Triangle> triangle_of_edge;               // hyperedge id -> triangle

  int aux_vertex(int u, int v) const { return vertex_of_edge.at(edge_key(u, v)); }
};

// keep = nullptr takes every triangle; otherwise only those the predicate
// accepts (e.g. exposure draws).
template <typename Pred>
inline TriangleHypergraph triangle_hypergraph(const Graph& g, Pred&& keep) {
  TriangleHypergraph out;
  out.edge_of_vertex = g.edges();
  out.h = LinearTripleHypergraph(static_cast<int>(out.edge_of_vertex.size()));
  for (std::size_t i = 0; i < out.edge_of_vertex.size(); ++i)
    out.vertex_of_edge.emplace(
        edge_key(out.edge_of_vertex[i].first, out.edge_of_vertex[i].second),
        static_cast<int>(i));
  for (const Triangle& t : enumerate_triangles(g)) {
    if (!keep(t)) continue;
    out.h.add_edge(out.aux_vertex(t.a, t.b), out.aux_vertex(t.a, t.c),
                   out.aux_vertex(t.b, t.c));
    out.triangle_of_edge.push_back(t);
  }
  return out;
}

inline TriangleHypergraph triangle_hypergraph(const Graph& g) {
  return triangle_hypergraph(g, [](const Triangle&) { return true; });
}

}  // namespace designforge
