#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "designforge/coloring.hpp"
#include "designforge/factorize.hpp"
#include "designforge/general_matching.hpp"
#include "designforge/graph.hpp"
#include "designforge/matching.hpp"
#include "designforge/nibble.hpp"
#include "designforge/rng.hpp"
#include "designforge/triangles.hpp"

namespace designforge {

namespace detail {

inline Bitset bitset_of(int n, const std::vector<int>& verts) {
  Bitset b(n);
  for (int v : verts) b.set(v);
  return b;
}

inline std::vector<int> random_subset(std::vector<int> pool, int k, Rng& rng) {
  rng.shuffle(pool);
  pool.resize(k);
  return pool;
}

inline double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// cover_down_part: inside one part, cover every edge not induced by U with
// edge-disjoint exposed triangles. Stages: a Bernoulli(eps2) reservoir of
// crossing edges per outside vertex, an almost-decomposition of the rest, a
// greedy edge-to-reservoir map for the outside leftover, and per-vertex
// perfect matchings pairing the surviving crossing edges through U.
// ---------------------------------------------------------------------------

struct CoverDownPartConfig {
  double eps2 = 0.4;                   // reservoir rate
  double gamma = 0.06;                 // decomposition leftover target
  double degree_tolerance = 0.8;       // decomposition regularity diagnostic band
  double max_irregular_fraction = 0.1; // regularity diagnostic, loose at desk scale
  int outer_retries = 12;              // full replans (reservoir + decomposition)
  int split_retries = 40;              // pairing splits per outside vertex
  int ell = 0;                         // reservoir matching pool (0 = default rule)
};

struct CoverDownPartResult {
  bool ok = false;
  std::vector<Triangle> triangles;
  long long reservoir_size = 0;
  long long psi_edges = 0;
  long long psi_fallbacks = 0;  // map choices outside the sampled reservoir
  long long pair_edges = 0;     // U-internal edges consumed by the pairings
  long long leftover_in_u = 0;
  int min_u_degree = 0;
  std::string error;
};

// Mutates g (removes covered edges, all inside the part).
inline CoverDownPartResult cover_down_part(Graph& g, const std::vector<int>& part_verts,
                                           const std::vector<int>& u_set,
                                           ExposureLedger& ledger, Rng& rng,
                                           const CoverDownPartConfig& cfg = {},
                                           int class_id = -1) {
  CoverDownPartResult out;
  int n = g.vertex_count();
  Bitset P = detail::bitset_of(n, part_verts);
  Bitset UB = detail::bitset_of(n, u_set);
  for (int u : u_set)
    if (!P.test(u)) throw std::invalid_argument("cover_down_part: U not inside part");

  std::vector<int> outside;
  for (int v : part_verts)
    if (!UB.test(v)) outside.push_back(v);
  for (int v : outside)
    if (g.row(v).intersect_count(P) % 2 != 0)
      throw std::invalid_argument("cover_down_part: odd degree at vertex " +
                                  std::to_string(v));

  long long inside_edges = 0;
  for (std::size_t a = 0; a < part_verts.size(); ++a)
    for (std::size_t b = a + 1; b < part_verts.size(); ++b)
      if (g.has_edge(part_verts[a], part_verts[b])) ++inside_edges;
  if (inside_edges == 0) {
    out.ok = true;
    return out;
  }

  // All four sub-stages compete for the same crossing and U-internal supply,
  // and at this scale bad draws do get stuck. Each attempt resamples the
  // reservoir, redoes the decomposition, and plans the apex map and the
  // per-vertex pairings on a scratch graph; only a complete plan commits.
  std::vector<Triangle> plan;
  std::string plan_fail;
  for (int attempt = 0; attempt < cfg.outer_retries; ++attempt) {
    plan.clear();
    plan_fail.clear();
    long long fallbacks = 0, pair_edges = 0;

    // Reservoir: for each outside vertex, a Bernoulli(eps2) subset of its
    // U-neighbourhood; those crossing edges are withheld from the decomposition.
    std::vector<std::vector<int>> res_of(n);
    std::unordered_set<std::uint64_t> in_reservoir;
    long long reservoir_size = 0;
    for (int w : outside)
      for (int u : u_set)
        if (g.has_edge(w, u) && rng.bernoulli(cfg.eps2)) {
          res_of[w].push_back(u);
          in_reservoir.insert(edge_key(w, u));
          ++reservoir_size;
        }

    // Decomposition subgraph: part edges minus reservoir minus U-internal.
    Graph gp(n);
    for (std::size_t a = 0; a < part_verts.size(); ++a)
      for (std::size_t b = a + 1; b < part_verts.size(); ++b) {
        int u = part_verts[a], v = part_verts[b];
        if (!g.has_edge(u, v)) continue;
        if (UB.test(u) && UB.test(v)) continue;
        if (in_reservoir.count(edge_key(u, v))) continue;
        gp.add_edge(u, v);
      }
    AlmostDecompositionConfig ad;
    ad.degree_tolerance = cfg.degree_tolerance;
    ad.max_irregular_fraction = cfg.max_irregular_fraction;
    auto dec = almost_triangle_decomposition(gp, ledger, cfg.gamma, rng, ad, class_id);
    if (!dec.ok) {
      plan_fail = "decomposition failed: " + dec.error;
      continue;
    }
    Graph gs = g;  // scratch state after the decomposition
    for (const Triangle& t : dec.triangles) {
      for (auto [u, v] : t.edges()) gs.remove_edge(u, v);
      plan.push_back(t);
    }

    // Apex map: each leftover edge with both ends outside U picks an apex in U
    // whose two crossing edges survive, preferring sampled reservoir pairs.
    std::vector<std::pair<int, int>> psi;
    dec.leftover.for_each_edge([&](int v, int w) {
      if (!UB.test(v) && !UB.test(w)) psi.emplace_back(v, w);
    });
    out.reservoir_size = reservoir_size;
    out.psi_edges = static_cast<long long>(psi.size());
    std::unordered_set<std::uint64_t> psi_keys;
    for (auto [v, w] : psi) psi_keys.insert(edge_key(v, w));
    std::unordered_set<std::uint64_t> taken;  // crossing edges consumed by psi

    // Backtracking assignment, fewest-candidates-first: apex choices compete
    // for crossing edges and first-fit orders rarely survive at this scale.
    {
      int m = static_cast<int>(psi.size());
      std::vector<std::vector<int>> domain(m);  // exposed apex candidates
      std::vector<char> in_res_pair(m, 0);
      for (int pi = 0; pi < m; ++pi) {
        auto [v, w] = psi[pi];
        for (int u : u_set)
          if (gs.has_edge(u, v) && gs.has_edge(u, w) &&
              ledger.expose(Triangle(u, v, w), class_id))
            domain[pi].push_back(u);
        rng.shuffle(domain[pi]);
        // reservoir-pair candidates first
        std::stable_partition(domain[pi].begin(), domain[pi].end(), [&](int u) {
          return in_reservoir.count(edge_key(u, v)) && in_reservoir.count(edge_key(u, w));
        });
      }
      std::vector<int> assigned(m, -1);
      long long nodes = 0;
      const long long budget = 200000;
      std::function<bool()> dfs = [&]() -> bool {
        if (++nodes > budget) return false;
        int best = -1, best_live = 1 << 30;
        for (int pi = 0; pi < m; ++pi) {
          if (assigned[pi] >= 0) continue;
          auto [v, w] = psi[pi];
          int live = 0;
          for (int u : domain[pi])
            if (!taken.count(edge_key(u, v)) && !taken.count(edge_key(u, w))) ++live;
          if (live == 0) return false;
          if (live < best_live) {
            best_live = live;
            best = pi;
          }
        }
        if (best < 0) return true;
        auto [v, w] = psi[best];
        for (int u : domain[best]) {
          if (taken.count(edge_key(u, v)) || taken.count(edge_key(u, w))) continue;
          assigned[best] = u;
          taken.insert(edge_key(u, v));
          taken.insert(edge_key(u, w));
          if (dfs()) return true;
          assigned[best] = -1;
          taken.erase(edge_key(u, v));
          taken.erase(edge_key(u, w));
        }
        return false;
      };
      if (!dfs()) {
        plan_fail = "apex assignment infeasible (" + std::to_string(m) + " edges, " +
                    std::to_string(nodes) + " nodes)";
        continue;
      }
      for (int pi = 0; pi < m; ++pi) {
        auto [v, w] = psi[pi];
        int u = assigned[pi];
        plan.push_back(Triangle(u, v, w));
        if (!in_reservoir.count(edge_key(u, v)) || !in_reservoir.count(edge_key(u, w)))
          ++fallbacks;
      }
    }

    // Pair the surviving crossing edges at each outside vertex through
    // U-internal edges, one perfect matching per vertex, shared supply.
    UsedEdgeSet used;
    std::vector<int> order = outside;
    rng.shuffle(order);
    for (int w : order) {
      std::vector<int> vw;
      gs.for_each_neighbor(w, [&](int v) {
        if (!P.test(v)) return;
        if (UB.test(v)) {
          if (!taken.count(edge_key(v, w))) vw.push_back(v);
        } else if (!psi_keys.count(edge_key(v, w))) {
          throw std::logic_error("cover_down_part: uncovered outside edge");
        }
      });
      if (vw.empty()) continue;
      if (vw.size() % 2 != 0) throw std::logic_error("cover_down_part: odd pairing set");
      bool done = false;
      for (int split = 0; split < cfg.split_retries && !done; ++split) {
        rng.shuffle(vw);
        std::size_t half = vw.size() / 2;
        ReservoirInstance inst;
        inst.left.assign(vw.begin(), vw.begin() + half);
        inst.right.assign(vw.begin() + half, vw.end());
        inst.edge_ok = [&gs, &ledger, w, class_id](int u, int v) {
          return gs.has_edge(u, v) && ledger.expose(Triangle(u, v, w), class_id);
        };
        auto rr = reservoir_matchings({inst}, cfg.eps2, cfg.ell, rng, used);
        if (!rr.ok) continue;
        for (auto [u, v] : rr.matchings[0]) {
          plan.push_back(Triangle(u, v, w));
          ++pair_edges;
        }
        done = true;
      }
      if (!done) {
        plan_fail = "pairing matchings failed at vertex " + std::to_string(w) + " (" +
                    std::to_string(vw.size()) + " crossing edges)";
        break;
      }
    }
    if (plan_fail.empty()) {
      out.psi_fallbacks = fallbacks;
      out.pair_edges = pair_edges;
      break;
    }
  }
  if (!plan_fail.empty()) {
    out.error = plan_fail;
    return out;
  }
  for (const Triangle& t : plan) {
    for (auto [a, b] : t.edges()) g.remove_edge(a, b);
    out.triangles.push_back(t);
  }

  for (int v : outside)
    if (g.row(v).intersect_count(P) != 0)
      throw std::logic_error("cover_down_part: outside degree not zero");
  out.min_u_degree = n;
  for (int u : u_set) {
    int d = g.row(u).intersect_count(UB);
    out.leftover_in_u += d;
    out.min_u_degree = std::min(out.min_u_degree, d);
  }
  out.leftover_in_u /= 2;
  out.ok = true;
  return out;
}

// ---------------------------------------------------------------------------
// balance_divisibility: cover all edges inside U_1, U_2, U_3 with exposed
// triangles whose apex lies in another U-part, choosing apexes so that every
// vertex ends with equal degrees into the two other parts.
// ---------------------------------------------------------------------------

struct DeficiencyTracker {
  std::vector<int> vertices;       // the U-part, fixed order
  std::vector<long long> w;        // current compensation targets
  std::vector<int> case_history;   // per round: 0 = empty class, 1..3 = rule used

  long long norm() const {
    long long s = 0;
    for (long long x : w) s += std::llabs(x);
    return s;
  }
  long long sum() const { return std::accumulate(w.begin(), w.end(), 0LL); }
};

struct BalanceDivisibilityConfig {
  int min_q = 0;             // extra floor on the colour count
  long long def_cap = 0;     // imbalance cap per vertex (0 = n^{2/3})
  int split_budget = 20;     // resamples of the random halving
  int matching_retries = 30; // apex-set resamples per round
};

struct BalanceDivisibilityResult {
  bool ok = false;
  std::vector<Triangle> triangles;
  std::array<DeficiencyTracker, 3> trackers;
  int q = 0;
  std::string error;
};

// Mutates g. The three U-parts must carry equal, even internal edge counts
// and even internal degrees.
inline BalanceDivisibilityResult balance_divisibility(
    Graph& g, const std::array<std::vector<int>, 3>& us, ExposureLedger& ledger,
    Rng& rng, const BalanceDivisibilityConfig& cfg = {}, int class_id = -1) {
  BalanceDivisibilityResult out;
  int n = g.vertex_count();
  std::array<Bitset, 3> ub = {detail::bitset_of(n, us[0]), detail::bitset_of(n, us[1]),
                              detail::bitset_of(n, us[2])};
  std::array<std::vector<std::pair<int, int>>, 3> inside;
  for (int i = 0; i < 3; ++i)
    for (std::size_t a = 0; a < us[i].size(); ++a)
      for (std::size_t b = a + 1; b < us[i].size(); ++b)
        if (g.has_edge(us[i][a], us[i][b])) inside[i].emplace_back(us[i][a], us[i][b]);
  long long e = static_cast<long long>(inside[0].size());
  if (static_cast<long long>(inside[1].size()) != e ||
      static_cast<long long>(inside[2].size()) != e)
    throw std::invalid_argument("balance_divisibility: unequal internal edge counts");
  if (e % 2 != 0)
    throw std::invalid_argument("balance_divisibility: odd internal edge count");
  for (int i = 0; i < 3; ++i)
    for (int u : us[i])
      if (g.row(u).intersect_count(ub[i]) % 2 != 0)
        throw std::invalid_argument("balance_divisibility: odd internal degree at " +
                                    std::to_string(u));

  auto check_divisibility = [&]() -> int {
    for (int i = 0; i < 3; ++i) {
      int j = (i == 0) ? 1 : 0, k = (i == 2) ? 1 : 2;
      for (int u : us[i])
        if (g.row(u).intersect_count(ub[j]) != g.row(u).intersect_count(ub[k])) return u;
    }
    return -1;
  };

  for (int i = 0; i < 3; ++i) {
    out.trackers[i].vertices = us[i];
    out.trackers[i].w.assign(us[i].size(), 0);
  }
  if (e == 0) {
    int bad = check_divisibility();
    if (bad >= 0) {
      out.error = "divisibility violated at vertex " + std::to_string(bad);
      return out;
    }
    out.ok = true;
    return out;
  }

  long long cap = cfg.def_cap > 0 ? cfg.def_cap
                                  : std::llround(std::pow(static_cast<double>(n), 2.0 / 3.0));
  std::array<std::vector<int>, 3> pos_of;  // vertex -> index within its part
  for (int i = 0; i < 3; ++i) {
    pos_of[i].assign(n, -1);
    for (std::size_t a = 0; a < us[i].size(); ++a) pos_of[i][us[i][a]] = static_cast<int>(a);
  }

  // Whole attempts resample the halving (which reshapes the imbalances, the
  // colour classes and hence the apex pools); each attempt runs on a scratch
  // graph and only a complete success commits.
  for (int big_attempt = 0; big_attempt < cfg.split_budget; ++big_attempt) {
    // split[i][0] = internal edges of part i whose apex will sit in the lower
    // other index, split[i][1] the higher; def is their per-vertex imbalance.
    std::array<std::array<std::vector<std::pair<int, int>>, 2>, 3> split;
    std::array<std::vector<long long>, 3> def;
    int q = 0;
    bool accepted = false;
    for (int attempt = 0; attempt < cfg.split_budget && !accepted; ++attempt) {
      for (int i = 0; i < 3; ++i) {
        auto edges = inside[i];
        rng.shuffle(edges);
        split[i][0].assign(edges.begin(), edges.begin() + e / 2);
        split[i][1].assign(edges.begin() + e / 2, edges.end());
        def[i].assign(us[i].size(), 0);
        for (auto [u, v] : split[i][1]) {
          ++def[i][pos_of[i][u]];
          ++def[i][pos_of[i][v]];
        }
        for (auto [u, v] : split[i][0]) {
          --def[i][pos_of[i][u]];
          --def[i][pos_of[i][v]];
        }
      }
      long long maxdef = 0;
      for (int i = 0; i < 3; ++i)
        for (long long d : def[i]) maxdef = std::max(maxdef, std::llabs(d));
      if (maxdef > cap) continue;
      // Colour count: proper-colouring feasibility on each half, class sizes
      // small enough for apex sets, and the caller's floor.
      int need = cfg.min_q;
      for (int i = 0; i < 3; ++i) {
        std::vector<int> degs(n, 0);
        for (int half = 0; half < 2; ++half) {
          std::fill(degs.begin(), degs.end(), 0);
          int dmax = 0;
          for (auto [u, v] : split[i][half]) dmax = std::max({dmax, ++degs[u], ++degs[v]});
          need = std::max(need, dmax + 1);
        }
        int room = std::max<int>(1, static_cast<int>(us[i].size()) / 2);
        need = std::max(need, static_cast<int>((e / 2 + room - 1) / room));
      }
      q = need;
      // Drain capacity: each nonempty paired round reduces the tracker norm by
      // at least 2, so the initial norm must fit in the nonempty round count.
      accepted = true;
      for (int i = 0; i < 3 && accepted; ++i) {
        long long norm0 = 0;
        for (long long d : def[i]) norm0 += std::llabs(d) / 2;
        long long rounds = std::min<long long>(q, e / 2);
        if (norm0 > 2 * rounds) accepted = false;
      }
    }
    if (!accepted) {
      out.error = "no acceptable halving within budget (cap " + std::to_string(cap) + ")";
      continue;
    }
    out.q = q;

    // Equitable colourings of all six halves; pair classes by size.
    std::array<std::array<std::vector<Matching>, 2>, 3> classes;
    for (int i = 0; i < 3; ++i)
      for (int half = 0; half < 2; ++half) {
        Graph sg(n);
        for (auto [u, v] : split[i][half]) sg.add_edge(u, v);
        auto cc = equitable_edge_colouring(sg, q);
        classes[i][half] = cc.classes;
        std::sort(classes[i][half].begin(), classes[i][half].end(),
                  [](const Matching& a, const Matching& b) { return a.size() > b.size(); });
      }

    Graph gs = g;
    std::vector<Triangle> plan;
    std::array<DeficiencyTracker, 3> trackers;
    for (int i = 0; i < 3; ++i) {
      trackers[i].vertices = us[i];
      trackers[i].w.assign(us[i].size(), 0);
    }
    bool attempt_failed = false;

    for (int i = 0; i < 3 && !attempt_failed; ++i) {
      int j = (i == 0) ? 1 : 0, k = (i == 2) ? 1 : 2;
      // Part i serves the halves of the other two parts assigned to it: in
      // part x's split, half 0 targets the lower of the two non-x indices.
      auto half_for = [&](int part) {
        int a = -1, b = -1;  // the two non-part indices, ascending
        for (int x = 0; x < 3; ++x)
          if (x != part) (a < 0 ? a : b) = x;
        return i == a ? 0 : 1;
      };
      const auto& mj = classes[j][half_for(j)];
      const auto& nk = classes[k][half_for(k)];
      DeficiencyTracker& tr = trackers[i];
      for (std::size_t a = 0; a < us[i].size(); ++a) {
        if (def[i][a] % 2 != 0) throw std::logic_error("odd imbalance");
        tr.w[a] = def[i][a] / 2;
      }

      for (int r = 0; r < q && !attempt_failed; ++r) {
        int h = static_cast<int>(mj[r].size());
        if (static_cast<int>(nk[r].size()) != h)
          throw std::logic_error("class size pairing broken");
        if (h == 0) {
          tr.case_history.push_back(0);
          continue;
        }
        std::vector<int> up, um, uz;
        for (std::size_t a = 0; a < us[i].size(); ++a) {
          if (tr.w[a] > 0) up.push_back(us[i][a]);
          else if (tr.w[a] < 0) um.push_back(us[i][a]);
          else uz.push_back(us[i][a]);
        }
        int rule;
        if (static_cast<int>(up.size()) >= h && static_cast<int>(um.size()) >= h) rule = 1;
        else if (up.empty() && um.empty()) rule = 3;
        else rule = 2;

        bool done = false;
        for (int attempt = 0; attempt < cfg.matching_retries && !done; ++attempt) {
          std::vector<int> cs, cps;
          if (rule == 1) {
            cs = detail::random_subset(up, h, rng);
            cps = detail::random_subset(um, h, rng);
          } else if (rule == 3) {
            if (static_cast<int>(uz.size()) < h) {
              out.error = "apex pool too small (part " + std::to_string(i) + ", round " +
                          std::to_string(r) + ")";
              attempt_failed = true;
              break;
            }
            cs = detail::random_subset(uz, h, rng);
            cps = cs;
          } else {
            const bool plus_small = up.size() <= um.size();
            const auto& small = plus_small ? up : um;
            auto big = plus_small ? um : up;
            int a = static_cast<int>(small.size());
            if (a >= h) throw std::logic_error("imbalance rule inconsistency");
            rng.shuffle(big);
            std::vector<int> solo(big.begin(), big.begin() + a);
            std::vector<int> pool(big.begin() + a, big.end());
            pool.insert(pool.end(), uz.begin(), uz.end());
            if (static_cast<int>(pool.size()) < h - a) {
              out.error = "apex pool too small (part " + std::to_string(i) + ", round " +
                          std::to_string(r) + ")";
              attempt_failed = true;
              break;
            }
            auto inter = detail::random_subset(pool, h - a, rng);
            cs = small;
            cs.insert(cs.end(), inter.begin(), inter.end());
            cps = solo;
            cps.insert(cps.end(), inter.begin(), inter.end());
            if (!plus_small) std::swap(cs, cps);
          }

          // Two perfect matchings: apexes in cs against the part-j class, apexes
          // in cps against the part-k class; every candidate query is an exposure.
          auto solve = [&](const std::vector<int>& apex, const Matching& cls,
                           std::vector<std::pair<int, std::pair<int, int>>>& picked) {
            BipartiteInstance bp(h, h);
            for (int li = 0; li < h; ++li)
              for (int ri = 0; ri < h; ++ri) {
                auto [u, v] = cls[ri];
                int wv = apex[li];
                if (gs.has_edge(u, wv) && gs.has_edge(v, wv) &&
                    ledger.expose(Triangle(u, v, wv), class_id))
                  bp.adj[li].push_back(ri);
              }
            auto m = hopcroft_karp(bp, &rng);
            if (!m.perfect) return false;
            for (int li = 0; li < h; ++li)
              picked.push_back({apex[li], cls[m.match_l[li]]});
            return true;
          };
          std::vector<std::pair<int, std::pair<int, int>>> t1, t2;
          if (!solve(cs, mj[r], t1) || !solve(cps, nk[r], t2)) continue;
          for (auto& [wv, uv] : t1) {
            Triangle t(uv.first, uv.second, wv);
            for (auto [a, b] : t.edges()) gs.remove_edge(a, b);
            plan.push_back(t);
            tr.w[pos_of[i][wv]] -= 1;
          }
          for (auto& [wv, uv] : t2) {
            Triangle t(uv.first, uv.second, wv);
            for (auto [a, b] : t.edges()) gs.remove_edge(a, b);
            plan.push_back(t);
            tr.w[pos_of[i][wv]] += 1;
          }
          tr.case_history.push_back(rule);
          done = true;
        }
        if (attempt_failed) break;
        if (!done) {
          out.error = "apex matchings failed (part " + std::to_string(i) + ", round " +
                      std::to_string(r) + ")";
          attempt_failed = true;
          break;
        }
        if (tr.sum() != 0) throw std::logic_error("tracker sum drifted");
      }
      if (!attempt_failed && tr.norm() != 0) {
        out.error = "tracker stalled at norm " + std::to_string(tr.norm()) + " (part " +
                    std::to_string(i) + ")";
        attempt_failed = true;
      }
    }
    if (attempt_failed) continue;

    for (int i = 0; i < 3; ++i)
      for (int u : us[i])
        if (gs.row(u).intersect_count(ub[i]) != 0)
          throw std::logic_error("internal edge survived balancing");
    g = gs;
    out.triangles = std::move(plan);
    out.trackers = std::move(trackers);
    int bad = check_divisibility();
    if (bad >= 0) {
      out.error = "divisibility violated at vertex " + std::to_string(bad);
      return out;
    }
    out.error.clear();
    out.ok = true;
    return out;
  }
  return out;  // error carries the last attempt's failure
}

// ---------------------------------------------------------------------------
// Reduction pipelines.
// ---------------------------------------------------------------------------

struct StageStat {
  std::string stage;
  long long triangles = 0;
  double time_ms = 0;
  std::string detail;
};

struct ReductionOutput {
  bool ok = false;
  Graph base;
  Graph residual;
  std::vector<Triangle> triangles;
  std::vector<StageStat> stages;
  std::string failed_stage;
  std::string error;
  std::uint64_t seed = 0;
  long long class_violations = 0;
  // Balance-stage deficiency trackers (triple reduction only; empty otherwise).
  std::array<DeficiencyTracker, 3> trackers;
  // Post-balance scan: every U-vertex sees the two other slices equally.
  bool balance_scan = false;
};

inline std::string reduction_output_json(const ReductionOutput& r) {
  std::string s = "{\"ok\":" + std::string(r.ok ? "true" : "false") + ",\"triangles\":[";
  for (std::size_t i = 0; i < r.triangles.size(); ++i) {
    const Triangle& t = r.triangles[i];
    s += (i ? "," : "") + std::string("[") + std::to_string(t.a) + "," +
         std::to_string(t.b) + "," + std::to_string(t.c) + "]";
  }
  s += "],\"residual_edges\":[";
  bool first = true;
  r.residual.for_each_edge([&](int u, int v) {
    s += (first ? "" : ",") + std::string("[") + std::to_string(u) + "," +
         std::to_string(v) + "]";
    first = false;
  });
  s += "],\"parts\":[";
  for (int i = 0; i < r.base.part_count(); ++i) {
    s += (i ? "," : "") + std::string("{\"name\":\"") + r.base.part_name(i) +
         "\",\"vertices\":[";
    const auto& p = r.base.part(i);
    for (std::size_t a = 0; a < p.size(); ++a)
      s += (a ? "," : "") + std::to_string(p[a]);
    s += "]}";
  }
  s += "],\"stats\":[";
  for (std::size_t i = 0; i < r.stages.size(); ++i) {
    const auto& st = r.stages[i];
    s += (i ? "," : "") + std::string("{\"stage\":\"") + st.stage +
         "\",\"triangles\":" + std::to_string(st.triangles) +
         ",\"detail\":\"" + st.detail +
         "\"}";
  }
  s += "]}";
  return s;
}

inline std::string reduction_stage_trace(const ReductionOutput& r) {
  std::string s;
  for (const auto& st : r.stages)
    s += "{\"stage\":\"" + st.stage + "\",\"triangles\":" + std::to_string(st.triangles) +
         ",\"detail\":\"" + st.detail +
         "\"}\n";
  return s;
}

struct StsReduceConfig {
  double eps = 0.18;
  CoverDownPartConfig cover;
  double gamma_u = 0.3;               // leftover target for the U-internal pass
  double u_irregular_fraction = 1.0;  // regularity diagnostic off at desk scale
  BalanceDivisibilityConfig balance;
  int matching_retries = 30;
};

// Triple-system reduction base: the complete graph on [n] with the equitable
// part layout of sts_base (reserved slice of V3 marked special).
inline Graph build_sts_reduction_host(int n, double eps) {
  if (n % 6 != 1 && n % 6 != 3)
    throw std::invalid_argument("sts_reduce: n mod 6 must be 1 or 3");
  if (eps <= 0.0 || eps >= 1.0) throw std::invalid_argument("sts_reduce: eps out of (0,1)");
  int n3 = (n + 2) / 3;
  int n1 = (n - n3) / 2;
  int n2 = n - n3 - n1;
  int w3 = static_cast<int>(eps * n);
  if (w3 < 2 || w3 > n3) throw std::invalid_argument("sts_reduce: reserved slice out of range");
  Graph g = build_complete(n);
  std::vector<int> v1(n1), v2(n2), v3(n3);
  for (int i = 0; i < n1; ++i) v1[i] = i;
  for (int i = 0; i < n2; ++i) v2[i] = n1 + i;
  for (int i = 0; i < n3; ++i) v3[i] = n1 + n2 + i;
  g.add_part("V1", v1);
  g.add_part("V2", v2);
  g.add_part("V3", v3);
  for (int i = n3 - w3; i < n3; ++i) g.mark_special(v3[i]);
  g.kind = "complete";
  g.kind_params = {n, w3};
  return g;
}

inline ReductionOutput sts_reduce_with(const Graph& base, ExposureLedger& ledger, Rng& rng,
                                       const StsReduceConfig& cfg = {}) {
  ReductionOutput out;
  out.base = base;
  int n = base.vertex_count();
  Graph g = base;
  const auto& v1 = base.part(0);
  const auto& v2 = base.part(1);
  const auto& v3 = base.part(2);
  std::vector<int> w3 = base.special_of_part(2);
  bool mod1 = (n % 6 == 1);
  int u_size = static_cast<int>(w3.size()) - (mod1 ? 1 : 0);

  std::array<std::vector<int>, 3> us;
  us[0].assign(v1.begin(), v1.begin() + u_size);
  us[1].assign(v2.begin(), v2.begin() + u_size);
  int vstar = -1;
  if (mod1) {
    vstar = w3.back();
    us[2].assign(w3.begin(), w3.end() - 1);
  } else {
    us[2] = w3;
  }

  auto t0 = std::chrono::steady_clock::now();
  auto fail = [&](const std::string& stage, const std::string& why) -> ReductionOutput& {
    out.failed_stage = stage;
    out.error = why;
    out.residual = g;
    out.class_violations = ledger.class_violations();
    return out;
  };

  // Step 1: equalise the class sizes (matchings through the pivot vertex).
  if (mod1) {
    for (int side = 0; side < 2; ++side) {
      const auto& part = side == 0 ? v1 : v2;
      int m = static_cast<int>(part.size());
      std::vector<std::vector<int>> adj(m);
      for (int a = 0; a < m; ++a)
        for (int b = a + 1; b < m; ++b)
          if (ledger.expose(Triangle(part[a], part[b], vstar), 1)) {
            adj[a].push_back(b);
            adj[b].push_back(a);
          }
      auto gm = general_max_matching(m, adj, &rng);
      if (2 * gm.size != m) return fail("equalise", "no pivot matching on side " +
                                                         std::to_string(side + 1));
      for (int a = 0; a < m; ++a) {
        int b = gm.match[a];
        if (b <= a) continue;
        Triangle t(part[a], part[b], vstar);
        for (auto [x, y] : t.edges()) g.remove_edge(x, y);
        out.triangles.push_back(t);
      }
    }
  }
  out.stages.push_back({"equalise", static_cast<long long>(out.triangles.size()),
                        detail::ms_since(t0), mod1 ? "pivot matchings" : "no-op"});

  // Step 2: cover down each part onto its U-slice, decompose the slice, then
  // repair the three internal counts to a common even value.
  t0 = std::chrono::steady_clock::now();
  std::size_t step2_begin = out.triangles.size();
  std::array<std::vector<std::size_t>, 3> u_internal;  // indices of slice triangles
  for (int i = 0; i < 3; ++i) {
    const auto& part = base.part(i);
    auto cd = cover_down_part(g, part, us[i], ledger, rng, cfg.cover, 10 + i);
    if (!cd.ok) return fail("cover_down_part_" + std::to_string(i + 1), cd.error);
    for (const Triangle& t : cd.triangles) out.triangles.push_back(t);

    Graph sub(n);
    for (std::size_t a = 0; a < us[i].size(); ++a)
      for (std::size_t b = a + 1; b < us[i].size(); ++b)
        if (g.has_edge(us[i][a], us[i][b])) sub.add_edge(us[i][a], us[i][b]);
    AlmostDecompositionConfig ad;
    ad.max_irregular_fraction = cfg.u_irregular_fraction;
    auto dec = almost_triangle_decomposition(sub, ledger, cfg.gamma_u, rng, ad, 10 + i);
    if (!dec.ok) return fail("slice_decomposition_" + std::to_string(i + 1), dec.error);
    for (const Triangle& t : dec.triangles) {
      for (auto [x, y] : t.edges()) g.remove_edge(x, y);
      u_internal[i].push_back(out.triangles.size());
      out.triangles.push_back(t);
    }
  }
  std::array<long long, 3> ecount;
  Bitset ub0 = detail::bitset_of(n, us[0]), ub1 = detail::bitset_of(n, us[1]),
         ub2 = detail::bitset_of(n, us[2]);
  std::array<Bitset, 3> ubs = {ub0, ub1, ub2};
  auto recount = [&]() {
    for (int i = 0; i < 3; ++i) {
      long long c = 0;
      for (int u : us[i]) c += g.row(u).intersect_count(ubs[i]);
      ecount[i] = c / 2;
    }
  };
  recount();
  if ((ecount[0] - ecount[1]) % 3 != 0 || (ecount[0] - ecount[2]) % 3 != 0)
    return fail("repair", "slice counts incongruent mod 3");
  long long target = std::max({ecount[0], ecount[1], ecount[2]});
  while (target % 2 != 0 || (target - ecount[0]) % 3 != 0) ++target;
  std::vector<std::size_t> dropped;
  for (int i = 0; i < 3; ++i) {
    long long k = (target - ecount[i]) / 3;
    if (k > static_cast<long long>(u_internal[i].size()))
      return fail("repair", "not enough slice triangles to give back (part " +
                                std::to_string(i + 1) + ")");
    rng.shuffle(u_internal[i]);
    for (long long j = 0; j < k; ++j) {
      std::size_t idx = u_internal[i][j];
      const Triangle& t = out.triangles[idx];
      for (auto [x, y] : t.edges()) g.add_edge(x, y);
      dropped.push_back(idx);
    }
  }
  std::sort(dropped.begin(), dropped.end(), std::greater<>());
  for (std::size_t idx : dropped) out.triangles.erase(out.triangles.begin() + idx);
  recount();
  if (ecount[0] != target || ecount[1] != target || ecount[2] != target)
    throw std::logic_error("repair arithmetic broken");
  out.stages.push_back({"cover_down",
                        static_cast<long long>(out.triangles.size() - step2_begin),
                        detail::ms_since(t0),
                        "slice edges " + std::to_string(target) + " each"});

  // Step 3: balanced covering of the slice interiors.
  t0 = std::chrono::steady_clock::now();
  auto bal = balance_divisibility(g, us, ledger, rng, cfg.balance, 3);
  if (!bal.ok) return fail("balance_divisibility", bal.error);
  out.trackers = bal.trackers;
  for (const Triangle& t : bal.triangles) out.triangles.push_back(t);
  out.balance_scan = true;
  for (int i = 0; i < 3 && out.balance_scan; ++i) {
    Bitset o1 = detail::bitset_of(g.vertex_count(), us[(i + 1) % 3]);
    Bitset o2 = detail::bitset_of(g.vertex_count(), us[(i + 2) % 3]);
    for (int u : us[i])
      if (g.row(u).intersect_count(o1) != g.row(u).intersect_count(o2)) {
        out.balance_scan = false;
        break;
      }
  }
  if (!out.balance_scan) return fail("balance_divisibility", "cross-slice degree scan failed");
  out.stages.push_back({"balance", static_cast<long long>(bal.triangles.size()),
                        detail::ms_since(t0), "q " + std::to_string(bal.q)});

  // Step 4: clear the reserved slice's cross edges with per-vertex matchings.
  t0 = std::chrono::steady_clock::now();
  std::size_t step4_begin = out.triangles.size();
  std::vector<int> order = us[2];
  rng.shuffle(order);
  for (int w : order) {
    std::vector<int> a, b;
    g.for_each_neighbor(w, [&](int v) {
      if (base.part_of(v) == 0) a.push_back(v);
      else if (base.part_of(v) == 1) b.push_back(v);
    });
    if (a.size() != b.size())
      return fail("clear_slice", "unequal sides at vertex " + std::to_string(w));
    if (a.empty()) continue;
    int m = static_cast<int>(a.size());
    bool done = false;
    for (int attempt = 0; attempt < cfg.matching_retries && !done; ++attempt) {
      BipartiteInstance bp(m, m);
      for (int li = 0; li < m; ++li)
        for (int ri = 0; ri < m; ++ri)
          if (g.has_edge(a[li], b[ri]) && ledger.expose(Triangle(a[li], b[ri], w), 4))
            bp.adj[li].push_back(ri);
      auto pm = hopcroft_karp(bp, &rng);
      if (!pm.perfect) continue;
      for (int li = 0; li < m; ++li) {
        Triangle t(a[li], b[pm.match_l[li]], w);
        for (auto [x, y] : t.edges()) g.remove_edge(x, y);
        out.triangles.push_back(t);
      }
      done = true;
    }
    if (!done) return fail("clear_slice", "no matching at vertex " + std::to_string(w));
  }
  out.stages.push_back({"clear_slice",
                        static_cast<long long>(out.triangles.size() - step4_begin),
                        detail::ms_since(t0), ""});

  // Conclusions, checked exactly.
  out.residual = g;
  out.class_violations = ledger.class_violations();
  int expected = static_cast<int>(v3.size() - w3.size());
  for (int w : w3)
    if (g.degree(w) != 0) return fail("validate", "reserved vertex " + std::to_string(w) +
                                                      " keeps degree");
  Bitset pv1 = detail::bitset_of(n, v1), pv2 = detail::bitset_of(n, v2);
  for (int v : v1) {
    if (g.row(v).intersect_count(pv1) != 0)
      return fail("validate", "internal edge survives in part 1");
    if (g.row(v).intersect_count(pv2) != expected)
      return fail("validate", "cross degree off at vertex " + std::to_string(v));
  }
  for (int v : v2)
    if (g.row(v).intersect_count(pv2) != 0)
      return fail("validate", "internal edge survives in part 2");
  if (base.edge_count() != g.edge_count() + 3 * static_cast<long long>(out.triangles.size()))
    return fail("validate", "edge conservation broken");
  std::unordered_set<std::uint64_t> covered;
  for (const Triangle& t : out.triangles) {
    if (!ledger.would_be_present(t)) return fail("validate", "unexposed triangle in output");
    for (auto [x, y] : t.edges())
      if (!covered.insert(edge_key(x, y)).second)
        return fail("validate", "triangles overlap");
  }
  if (out.class_violations != 0) return fail("validate", "exposure class discipline broken");
  out.ok = true;
  return out;
}

inline ReductionOutput sts_reduce(int n, double eps, double p, std::uint64_t seed,
                                  StsReduceConfig cfg = {}) {
  cfg.eps = eps;
  Graph base = build_sts_reduction_host(n, eps);
  ExposureLedger ledger(base, p, seed);
  Rng rng(splitmix64(seed ^ 0x73747352ULL));
  auto out = sts_reduce_with(base, ledger, rng, cfg);
  out.seed = seed;
  return out;
}

// ---------------------------------------------------------------------------
// one_f_reduce: the join-base reduction behind 1-factorizations of K_{2n}.
// ---------------------------------------------------------------------------

struct OneFReduceConfig {
  double eps = 0.33;
  double gamma = 0.08;
  int max_batches = 1;           // batch count cap (full rate is 1/gamma^4)
  double reservoir_rho = 0.0;    // 0 = 2*gamma
  int max_tracked_overlaps = 64; // subsampled cross-colour leftover sets
  PseudoMatchingConfig nibble = [] {
    PseudoMatchingConfig c;
    c.epsilon = 0.02;
    return c;
  }();
  int matching_retries = 30;
  double window_lo = 0.8, window_hi = 2.0;  // leftover windows, in gamma*n units
};

inline ReductionOutput one_f_reduce_with(const Graph& base, ExposureLedger& ledger,
                                         Rng& rng, const OneFReduceConfig& cfg = {}) {
  ReductionOutput out;
  out.base = base;
  int nv = base.vertex_count();
  Graph g = base;
  const auto& v1 = base.part(0);
  const auto& v2 = base.part(1);
  const auto& c1 = base.part(2);
  const auto& c2 = base.part(3);
  std::vector<int> c2p = base.special_of_part(3);
  int n = static_cast<int>(v1.size());
  double gamma = cfg.gamma;
  long long k_full = gamma > 0 ? static_cast<long long>(1.0 / std::pow(gamma, 4.0)) : 0;
  if (k_full < 1) throw std::invalid_argument("one_f_reduce: gamma too large (no batches)");
  int K = static_cast<int>(std::min<long long>(k_full, cfg.max_batches));

  auto fail = [&](const std::string& stage, const std::string& why) -> ReductionOutput& {
    out.failed_stage = stage;
    out.error = why;
    out.residual = g;
    out.class_violations = ledger.class_violations();
    return out;
  };

  // Step 1: batched near-cover of the two cliques and their join to the main
  // colour set, with leftover sets tracked per colour.
  auto t0 = std::chrono::steady_clock::now();
  std::vector<std::pair<int, int>> clique_edges;
  for (int s = 0; s < 2; ++s) {
    const auto& part = s == 0 ? v1 : v2;
    for (std::size_t a = 0; a < part.size(); ++a)
      for (std::size_t b = a + 1; b < part.size(); ++b)
        clique_edges.emplace_back(part[a], part[b]);
  }
  std::vector<int> batch_of(clique_edges.size());
  for (auto& x : batch_of) x = static_cast<int>(rng.below(K));
  std::vector<int> c1_shuffled = c1;
  rng.shuffle(c1_shuffled);
  std::vector<std::vector<int>> c1_batch(K);
  for (std::size_t i = 0; i < c1_shuffled.size(); ++i)
    c1_batch[i % K].push_back(c1_shuffled[i]);

  std::vector<std::vector<int>> w_of(nv);  // per colour in C1: leftover vertex list
  int windows_ok = 0, windows_total = 0;
  std::size_t step1_begin = out.triangles.size();
  std::vector<std::array<std::vector<int>, 2>> prev_w;  // for overlap tracking
  std::vector<int> side_of(nv, -1);
  for (int v : v1) side_of[v] = 0;
  for (int v : v2) side_of[v] = 1;

  for (int bi = 0; bi < K; ++bi) {
    std::vector<std::pair<int, int>> be;
    for (std::size_t ei = 0; ei < clique_edges.size(); ++ei)
      if (batch_of[ei] == bi) be.push_back(clique_edges[ei]);
    const auto& bc = c1_batch[bi];
    int ec = static_cast<int>(be.size()), cc = static_cast<int>(bc.size());
    std::vector<int> vidx(nv, -1);
    for (int x = 0; x < 2 * n; ++x) vidx[x < n ? v1[x] : v2[x - n]] = x;
    auto pid = [&](int v, int ci) { return ec + vidx[v] * cc + ci; };
    LinearTripleHypergraph h(ec + 2 * n * cc);
    std::vector<std::array<int, 3>> edge_meta;  // (u, v, colour)
    for (int ei = 0; ei < ec; ++ei) {
      auto [u, v] = be[ei];
      for (int ci = 0; ci < cc; ++ci)
        if (ledger.expose(Triangle(u, v, bc[ci]), 20 + bi)) {
          h.add_edge(ei, pid(u, ci), pid(v, ci));
          edge_meta.push_back({u, v, bc[ci]});
        }
    }
    std::vector<std::vector<int>> tracked;
    for (int ci = 0; ci < cc; ++ci)
      for (int s = 0; s < 2; ++s) {
        std::vector<int> set;
        for (int v : (s == 0 ? v1 : v2)) set.push_back(pid(v, ci));
        tracked.push_back(std::move(set));
      }
    std::vector<std::vector<int>> star(nv);
    for (int ei = 0; ei < ec; ++ei) {
      star[be[ei].first].push_back(ei);
      star[be[ei].second].push_back(ei);
    }
    for (int x = 0; x < 2 * n; ++x) {
      int v = x < n ? v1[x] : v2[x - n];
      tracked.push_back(star[v]);
      std::vector<int> cset;
      for (int ci = 0; ci < cc; ++ci) cset.push_back(pid(v, ci));
      tracked.push_back(std::move(cset));
    }
    // Cross-colour leftover overlap sets, subsampled.
    if (!prev_w.empty()) {
      for (int probe = 0; probe < cfg.max_tracked_overlaps; ++probe) {
        int ci = static_cast<int>(rng.below(cc));
        const auto& pw = prev_w[rng.below(prev_w.size())];
        int s = static_cast<int>(rng.below(2));
        if (pw[s].empty()) continue;
        std::vector<int> set;
        for (int v : pw[s]) set.push_back(pid(v, ci));
        tracked.push_back(std::move(set));
      }
    }
    PseudoMatchingConfig pm = cfg.nibble;
    pm.gamma = gamma;
    auto res = pseudo_matching(h, h.mean_degree(), tracked, rng, pm);
    if (!res.ok)
      return fail("batch_" + std::to_string(bi + 1), "near-cover failed: " + res.error);

    // Regroup by colour, rebalance the two sides, commit.
    std::vector<std::vector<int>> by_colour(nv);
    // edge ids in h correspond 1:1 to edge_meta by insertion order
    std::vector<int> cidx(nv, -1);
    for (int ci = 0; ci < cc; ++ci) cidx[bc[ci]] = ci;
    std::vector<std::vector<std::array<int, 3>>> tri_of(cc);
    for (int e : res.matching) {
      const auto& m = edge_meta[e];
      tri_of[cidx[m[2]]].push_back(m);
    }
    for (int ci = 0; ci < cc; ++ci) {
      auto& tris = tri_of[ci];
      int cov1 = 0, cov2 = 0;
      for (const auto& m : tris) (side_of[m[0]] == 0 ? cov1 : cov2)++;
      int w1 = n - 2 * cov1, w2 = n - 2 * cov2;
      int excess = (w2 - w1) / 2;  // >0: side 1 over-covered, give some back
      rng.shuffle(tris);
      std::vector<std::array<int, 3>> keep;
      for (const auto& m : tris) {
        int s = side_of[m[0]];
        if (excess > 0 && s == 0) { --excess; continue; }
        if (excess < 0 && s == 1) { ++excess; continue; }
        keep.push_back(m);
      }
      if (excess != 0) return fail("batch_" + std::to_string(bi + 1), "rebalance failed");
      int c = bc[ci];
      std::vector<char> covered(nv, 0);
      for (const auto& m : keep) {
        Triangle t(m[0], m[1], c);
        for (auto [x, y] : t.edges()) g.remove_edge(x, y);
        out.triangles.push_back(t);
        covered[m[0]] = covered[m[1]] = 1;
      }
      for (int x = 0; x < 2 * n; ++x) {
        int v = x < n ? v1[x] : v2[x - n];
        if (!covered[v]) w_of[c].push_back(v);
      }
      long long ws = static_cast<long long>(w_of[c].size()) / 2;
      ++windows_total;
      if (ws >= cfg.window_lo * gamma * n && ws <= cfg.window_hi * gamma * n) ++windows_ok;
    }
    std::array<std::vector<int>, 2> batch_w;
    for (int ci = 0; ci < cc; ++ci)
      for (int v : w_of[bc[ci]]) batch_w[side_of[v]].push_back(v);
    prev_w.push_back(std::move(batch_w));
  }
  out.stages.push_back({"batches", static_cast<long long>(out.triangles.size() - step1_begin),
                        detail::ms_since(t0),
                        "windows " + std::to_string(windows_ok) + "/" +
                            std::to_string(windows_total)});

  // Step 2: per main colour, a perfect matching across its leftover sets.
  t0 = std::chrono::steady_clock::now();
  std::size_t step2_begin = out.triangles.size();
  double rho = cfg.reservoir_rho > 0 ? cfg.reservoir_rho : 2 * gamma;
  UsedEdgeSet used;
  for (int c : c1) {
    std::vector<int> left, right;
    for (int v : w_of[c]) (side_of[v] == 0 ? left : right).push_back(v);
    if (left.size() != right.size())
      return fail("leftover_matchings", "unequal leftovers at colour " + std::to_string(c));
    if (left.empty()) continue;
    ReservoirInstance inst;
    inst.left = left;
    inst.right = right;
    inst.edge_ok = [&g, &ledger, c](int u, int v) {
      return g.has_edge(u, v) && ledger.expose(Triangle(u, v, c), 30);
    };
    auto rr = reservoir_matchings({inst}, rho, 0, rng, used);
    if (!rr.ok)
      return fail("leftover_matchings", "colour " + std::to_string(c) + ": " + rr.reason);
    for (auto [u, v] : rr.matchings[0]) {
      Triangle t(u, v, c);
      for (auto [x, y] : t.edges()) g.remove_edge(x, y);
      out.triangles.push_back(t);
    }
  }
  for (int c : c1)
    if (g.degree(c) != 0)
      return fail("leftover_matchings", "colour " + std::to_string(c) + " keeps degree");
  out.stages.push_back({"leftover_matchings",
                        static_cast<long long>(out.triangles.size() - step2_begin),
                        detail::ms_since(t0), ""});

  // Step 3: cover the clique leftovers with apexes in the reserved colours,
  // drawing the same apex subset for both sides each round.
  t0 = std::chrono::steady_clock::now();
  std::size_t step3_begin = out.triangles.size();
  std::array<Graph, 2> gs = {Graph(nv), Graph(nv)};
  std::array<Bitset, 2> pv = {detail::bitset_of(nv, v1), detail::bitset_of(nv, v2)};
  for (int s = 0; s < 2; ++s) {
    const auto& part = s == 0 ? v1 : v2;
    for (std::size_t a = 0; a < part.size(); ++a)
      for (std::size_t b = a + 1; b < part.size(); ++b)
        if (g.has_edge(part[a], part[b])) gs[s].add_edge(part[a], part[b]);
  }
  if (gs[0].edge_count() != gs[1].edge_count())
    return fail("apex_rounds", "unequal clique leftovers");
  // Every clique vertex keeps all its links to the reserved colours at this
  // point, so an equitable colouring of each leftover into |C2'| matchings
  // assigns one class per apex directly. Sorting both sides by class size
  // pairs the ranks, which keeps each apex drained equally on both sides.
  int pool = static_cast<int>(c2p.size());
  if (gs[0].max_degree() >= pool || gs[1].max_degree() >= pool)
    return fail("apex_rounds",
                "clique leftover degree " +
                    std::to_string(std::max(gs[0].max_degree(), gs[1].max_degree())) +
                    " too large for " + std::to_string(pool) + " reserved colours");
  std::array<std::vector<Matching>, 2> cls;
  for (int s = 0; s < 2; ++s) {
    auto cc = equitable_edge_colouring(gs[s], pool);
    cls[s] = cc.classes;
    std::sort(cls[s].begin(), cls[s].end(),
              [](const Matching& a, const Matching& b) { return a.size() > b.size(); });
  }
  auto apex = c2p;
  rng.shuffle(apex);
  // Swap a blocked edge into another apex class when thinning removes the
  // triangle it would form (only possible when the exposure rate is < 1).
  for (int s = 0; s < 2; ++s) {
    auto covered = [&](const Matching& m, int x, std::size_t skip) {
      for (std::size_t i = 0; i < m.size(); ++i)
        if (i != skip && (m[i].first == x || m[i].second == x)) return true;
      return false;
    };
    for (int r = 0; r < pool; ++r)
      for (std::size_t i = 0; i < cls[s][r].size(); ++i) {
        auto [u, v] = cls[s][r][i];
        if (ledger.expose(Triangle(u, v, apex[r]), 31)) continue;
        bool fixed = false;
        for (int r2 = 0; r2 < pool && !fixed; ++r2) {
          if (r2 == r || covered(cls[s][r2], u, cls[s][r2].size())) continue;
          if (covered(cls[s][r2], v, cls[s][r2].size())) continue;
          if (!ledger.expose(Triangle(u, v, apex[r2]), 31)) continue;
          for (std::size_t j = 0; j < cls[s][r2].size() && !fixed; ++j) {
            auto [x, y] = cls[s][r2][j];
            if (covered(cls[s][r], x, i) || covered(cls[s][r], y, i)) continue;
            if (!ledger.expose(Triangle(x, y, apex[r]), 31)) continue;
            std::swap(cls[s][r][i], cls[s][r2][j]);
            fixed = true;
          }
        }
        if (!fixed)
          return fail("apex_rounds", "thinning stranded a clique leftover edge");
      }
  }
  for (int r = 0; r < pool; ++r) {
    if (cls[0][r].size() != cls[1][r].size())
      throw std::logic_error("apex class pairing broken");
    for (int s = 0; s < 2; ++s)
      for (auto [u, v] : cls[s][r]) {
        int c = apex[r];
        if (!g.has_edge(u, c) || !g.has_edge(v, c))
          throw std::logic_error("apex link already consumed");
        Triangle t(u, v, c);
        if (!ledger.expose(t, 31)) throw std::logic_error("unexposed apex triangle");
        for (auto [x, y] : t.edges()) g.remove_edge(x, y);
        out.triangles.push_back(t);
      }
  }
  out.stages.push_back({"apex_rounds",
                        static_cast<long long>(out.triangles.size() - step3_begin),
                        detail::ms_since(t0),
                        "classes " + std::to_string(pool)});

  // Step 4: clear the reserved colours with per-colour matchings.
  t0 = std::chrono::steady_clock::now();
  std::size_t step4_begin = out.triangles.size();
  std::vector<int> order = c2p;
  rng.shuffle(order);
  for (int c : order) {
    std::vector<int> a, b;
    g.for_each_neighbor(c, [&](int v) { (side_of[v] == 0 ? a : b).push_back(v); });
    if (a.size() != b.size())
      return fail("clear_reserved", "unequal sides at colour " + std::to_string(c));
    if (a.empty()) continue;
    int m = static_cast<int>(a.size());
    bool done = false;
    for (int attempt = 0; attempt < cfg.matching_retries && !done; ++attempt) {
      BipartiteInstance bp(m, m);
      for (int li = 0; li < m; ++li)
        for (int ri = 0; ri < m; ++ri)
          if (g.has_edge(a[li], b[ri]) && ledger.expose(Triangle(a[li], b[ri], c), 32))
            bp.adj[li].push_back(ri);
      auto pm = hopcroft_karp(bp, &rng);
      if (!pm.perfect) continue;
      for (int li = 0; li < m; ++li) {
        Triangle t(a[li], b[pm.match_l[li]], c);
        for (auto [x, y] : t.edges()) g.remove_edge(x, y);
        out.triangles.push_back(t);
      }
      done = true;
    }
    if (!done) return fail("clear_reserved", "no matching at colour " + std::to_string(c));
  }
  out.stages.push_back({"clear_reserved",
                        static_cast<long long>(out.triangles.size() - step4_begin),
                        detail::ms_since(t0), ""});

  // Conclusions, checked exactly.
  out.residual = g;
  out.class_violations = ledger.class_violations();
  int expected = static_cast<int>(c2.size() - c2p.size());
  for (int c : c1)
    if (g.degree(c) != 0) return fail("validate", "main colour keeps degree");
  for (int c : c2p)
    if (g.degree(c) != 0) return fail("validate", "reserved colour keeps degree");
  for (int c : c2)
    if (!base.is_special(c) && g.degree(c) != 2 * n)
      return fail("validate", "free colour degree off");
  for (int s = 0; s < 2; ++s)
    for (int v : (s == 0 ? v1 : v2)) {
      if (g.row(v).intersect_count(pv[s]) != 0)
        return fail("validate", "internal edge survives");
      if (g.row(v).intersect_count(pv[1 - s]) != expected)
        return fail("validate", "cross degree off at vertex " + std::to_string(v));
    }
  if (base.edge_count() != g.edge_count() + 3 * static_cast<long long>(out.triangles.size()))
    return fail("validate", "edge conservation broken");
  std::unordered_set<std::uint64_t> covered;
  for (const Triangle& t : out.triangles) {
    if (!ledger.would_be_present(t)) return fail("validate", "unexposed triangle in output");
    for (auto [x, y] : t.edges())
      if (!covered.insert(edge_key(x, y)).second)
        return fail("validate", "triangles overlap");
  }
  if (out.class_violations != 0) return fail("validate", "exposure class discipline broken");
  out.ok = true;
  return out;
}

inline ReductionOutput one_f_reduce(int n, double eps, double p, std::uint64_t seed,
                                    OneFReduceConfig cfg = {}) {
  cfg.eps = eps;
  Graph base = build_join_base(n, eps);
  ExposureLedger ledger(base, p, seed);
  Rng rng(splitmix64(seed ^ 0x6f6e6566ULL));
  auto out = one_f_reduce_with(base, ledger, rng, cfg);
  out.seed = seed;
  return out;
}

}  // namespace designforge
