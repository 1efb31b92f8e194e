#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "designforge/matching.hpp"
#include "designforge/validate.hpp"

namespace designforge {

// 1-factorization of a d-regular bipartite graph: d rounds of perfect
// matching with removal.
inline OneFactorization one_factorize(const Graph& g, Rng* rng = nullptr) {
  if (g.part_count() != 2) throw std::invalid_argument("one_factorize: not bipartite");
  int d = g.vertex_count() ? g.degree(0) : 0;
  for (int v = 0; v < g.vertex_count(); ++v)
    if (g.degree(v) != d) throw std::invalid_argument("one_factorize: not regular");
  Graph work = g;
  OneFactorization out;
  for (int i = 0; i < d; ++i) {
    auto pm = perfect_matching(work, rng);
    if (!pm.ok)
      throw std::runtime_error("one_factorize: no perfect matching at round " +
                               std::to_string(i));
    for (auto [u, v] : pm.matching) work.remove_edge(u, v);
    out.matchings.push_back(std::move(pm.matching));
  }
  return out;
}

using EdgePredicate = std::function<bool(int, int)>;

struct ManyMatchingsResult {
  bool ok = false;
  std::vector<Matching> matchings;
  int failed_iteration = -1;
  std::vector<int> hall_violator;
  bool precondition_ok = true;  // min-degree threshold (diagnostic)
};

// Greedy edge-disjoint perfect matchings inside the exposed edge set of a
// dense bipartite graph. The count is an explicit parameter.
inline ManyMatchingsResult many_disjoint_matchings(const Graph& h, EdgePredicate exposed,
                                                   int count, Rng* rng = nullptr,
                                                   double min_degree_fraction = 0.0) {
  if (h.part_count() != 2)
    throw std::invalid_argument("many_disjoint_matchings: not bipartite");
  const auto& a = h.part(0);
  const auto& b = h.part(1);
  if (a.size() != b.size())
    throw std::invalid_argument("many_disjoint_matchings: unequal parts");
  ManyMatchingsResult res;
  if (min_degree_fraction > 0.0 &&
      h.min_degree() < min_degree_fraction * static_cast<double>(a.size()))
    res.precondition_ok = false;

  std::vector<int> rindex(h.vertex_count(), -1);
  for (std::size_t i = 0; i < b.size(); ++i) rindex[b[i]] = static_cast<int>(i);
  BipartiteInstance inst(static_cast<int>(a.size()), static_cast<int>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    h.for_each_neighbor(a[i], [&](int v) {
      if (rindex[v] >= 0 && exposed(a[i], v)) inst.adj[i].push_back(rindex[v]);
    });

  for (int it = 0; it < count; ++it) {
    auto m = hopcroft_karp(inst, rng);
    if (!m.perfect) {
      res.failed_iteration = it;
      for (int u : m.hall_violator) res.hall_violator.push_back(a[u]);
      return res;
    }
    Matching edges;
    for (std::size_t i = 0; i < a.size(); ++i) {
      int r = m.match_l[i];
      edges.emplace_back(a[i], b[r]);
      auto& lst = inst.adj[i];
      lst.erase(std::find(lst.begin(), lst.end(), r));
    }
    res.matchings.push_back(std::move(edges));
  }
  res.ok = true;
  return res;
}

// Shared used-edge state for sequential reservoir matching.
struct UsedEdgeSet {
  std::unordered_set<std::uint64_t> used;
  bool contains(int u, int v) const { return used.count(edge_key(u, v)) > 0; }
  void insert(int u, int v) { used.insert(edge_key(u, v)); }
};

struct ReservoirInstance {
  std::vector<int> left, right;  // global vertex ids, equal sizes
  EdgePredicate edge_ok;         // host membership + exposure, before used-edge filter
};

struct ReservoirResult {
  bool ok = false;
  std::vector<Matching> matchings;  // one per instance
  int failed_instance = -1;
  std::string reason;
  int ell_used = 0;       // requested matchings per instance
  int ell_shortfalls = 0; // instances where fewer than ell disjoint matchings existed
};

// Sequentially, per instance: find up to ell edge-disjoint perfect matchings
// of the instance graph minus already-used edges, pick one uniformly, and
// commit its edges to the shared used set. ell = 0 selects the default
// max(3, ceil(rho^{3/2} * availability-degree / 20)).
inline ReservoirResult reservoir_matchings(const std::vector<ReservoirInstance>& instances,
                                           double rho, int ell, Rng& rng,
                                           UsedEdgeSet& used) {
  ReservoirResult res;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto& inst = instances[i];
    if (inst.left.size() != inst.right.size()) {
      res.failed_instance = static_cast<int>(i);
      res.reason = "unequal sides";
      return res;
    }
    if (inst.left.empty()) {
      res.matchings.emplace_back();
      continue;
    }
    int nl = static_cast<int>(inst.left.size());
    BipartiteInstance bp(nl, nl);
    int min_avail = nl;
    for (int li = 0; li < nl; ++li) {
      for (int ri = 0; ri < nl; ++ri) {
        int u = inst.left[li], v = inst.right[ri];
        if (inst.edge_ok(u, v) && !used.contains(u, v)) bp.adj[li].push_back(ri);
      }
      min_avail = std::min(min_avail, static_cast<int>(bp.adj[li].size()));
    }
    int want = ell;
    if (want <= 0)
      want = std::max(3, static_cast<int>(std::ceil(std::pow(rho, 1.5) * min_avail / 20.0)));
    res.ell_used = want;

    std::vector<Matching> pool;
    for (int k = 0; k < want; ++k) {
      auto m = hopcroft_karp(bp, &rng);
      if (!m.perfect) break;
      Matching edges;
      for (int li = 0; li < nl; ++li) {
        int ri = m.match_l[li];
        edges.emplace_back(inst.left[li], inst.right[ri]);
        auto& lst = bp.adj[li];
        lst.erase(std::find(lst.begin(), lst.end(), ri));
      }
      pool.push_back(std::move(edges));
    }
    if (pool.empty()) {
      res.failed_instance = static_cast<int>(i);
      res.reason = "no perfect matching available (min availability degree " +
                   std::to_string(min_avail) + ")";
      return res;
    }
    if (static_cast<int>(pool.size()) < want) ++res.ell_shortfalls;
    auto& pick = pool[rng.below(pool.size())];
    for (auto [u, v] : pick) used.insert(u, v);
    res.matchings.push_back(std::move(pick));
  }
  res.ok = true;
  return res;
}

}  // namespace designforge
