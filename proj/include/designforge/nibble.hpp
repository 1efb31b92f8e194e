#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "designforge/hypergraph.hpp"
#include "designforge/rng.hpp"

namespace designforge {

struct NibbleRoundStats {
  // aligned with the tracked family
  std::vector<long long> surviving;  // |S \ V(B)|
  std::vector<long long> matched;    // |S cap V(M)|
  long long bite_edges = 0;
  long long matching_edges = 0;
  long long vertices_before = 0;
  long long vertices_after = 0;
  double mean_degree_before = 0.0;
};

struct NibbleRoundResult {
  std::vector<int> bite;      // hyperedge ids of B
  std::vector<int> matching;  // hyperedge ids of M (isolated edges of B)
  std::vector<char> alive;    // V(H') as a mask over the input vertex ids
  LinearTripleHypergraph reduced{0};  // induced on the surviving vertices
  NibbleRoundStats stats;
};

namespace detail {

// One bite on the engine state: alive mask + active edge list are updated in
// place; B and M are returned as hyperedge ids. Vertex hit counts are reset
// via the touched list, so a round costs O(active edges).
struct NibbleEngine {
  const LinearTripleHypergraph* h;
  std::vector<char> alive;
  std::vector<int> active;  // surviving hyperedge ids
  std::vector<int> hits;    // scratch: per-vertex bite multiplicity

  explicit NibbleEngine(const LinearTripleHypergraph& hg)
      : h(&hg), alive(hg.vertex_count(), 1), hits(hg.vertex_count(), 0) {
    active.resize(hg.edge_count());
    for (int e = 0; e < hg.edge_count(); ++e) active[e] = e;
  }

  long long alive_count() const {
    long long c = 0;
    for (char a : alive) c += a;
    return c;
  }

  void round(double p_bite, Rng& rng, std::vector<int>& bite, std::vector<int>& match) {
    bite.clear();
    match.clear();
    std::vector<int> touched;
    for (int e : active)
      if (rng.bernoulli(p_bite)) {
        bite.push_back(e);
        for (int v : h->edge(e)) {
          if (hits[v]++ == 0) touched.push_back(v);
        }
      }
    for (int e : bite) {
      const auto& t = h->edge(e);
      if (hits[t[0]] == 1 && hits[t[1]] == 1 && hits[t[2]] == 1) match.push_back(e);
    }
    for (int e : bite)
      for (int v : h->edge(e)) alive[v] = 0;
    for (int v : touched) hits[v] = 0;
    std::vector<int> next;
    next.reserve(active.size());
    for (int e : active) {
      const auto& t = h->edge(e);
      if (alive[t[0]] && alive[t[1]] && alive[t[2]]) next.push_back(e);
    }
    active.swap(next);
  }
};

}  // namespace detail

// One nibble round on H (all vertex ids of H count as V(H)): B is an i.i.d.
// Bernoulli(min(1, eps/d)) bite over hyperedges, M its isolated edges, and
// the result carries the sub-hypergraph induced on V(H) \ V(B). Tracked-set
// statistics are exact counts.
inline NibbleRoundResult nibble_round(const LinearTripleHypergraph& h, double d,
                                      double eps,
                                      const std::vector<std::vector<int>>& tracked,
                                      Rng& rng) {
  if (d < 0.0 || eps < 0.0) throw std::invalid_argument("nibble_round: bad d or eps");
  double p = d > 0.0 ? std::min(1.0, eps / d) : 0.0;
  detail::NibbleEngine eng(h);
  NibbleRoundResult out;
  out.stats.vertices_before = h.vertex_count();
  out.stats.mean_degree_before = h.mean_degree();
  eng.round(p, rng, out.bite, out.matching);
  out.alive = eng.alive;
  out.stats.bite_edges = static_cast<long long>(out.bite.size());
  out.stats.matching_edges = static_cast<long long>(out.matching.size());
  out.stats.vertices_after = eng.alive_count();

  std::vector<char> in_m(h.vertex_count(), 0);
  for (int e : out.matching)
    for (int v : h.edge(e)) in_m[v] = 1;
  for (const auto& s : tracked) {
    long long surv = 0, mat = 0;
    for (int v : s) {
      if (out.alive[v]) ++surv;
      if (in_m[v]) ++mat;
    }
    out.stats.surviving.push_back(surv);
    out.stats.matched.push_back(mat);
  }

  out.reduced = LinearTripleHypergraph(h.vertex_count());
  for (int e : eng.active) {
    const auto& t = h.edge(e);
    out.reduced.add_edge(t[0], t[1], t[2]);
  }
  return out;
}

struct PseudoMatchingConfig {
  double epsilon = 0.01;
  double gamma = 0.1;
  double band_slack = 0.02;  // absolute slack on the band, in units of |S|
  // Mid-run degree sanity: fail if the mean surviving degree strays from the
  // nominal decayed degree by more than this relative factor, checked only
  // while the nominal degree is still meaningful.
  double collapse_tolerance = 0.9;
  double min_check_degree = 4.0;
  // Thin the accumulated matching at exactly gamma instead of compensating
  // for the never-matched mass (compensation targets the band midpoint).
  bool literal_thinning = false;
  int t_override = -1;  // round count; < 0 derives t from epsilon
};

inline int pseudo_matching_rounds(double eps) {
  // smallest t with e^{-eps t / 2} <= 1.01 eps
  return static_cast<int>(std::ceil(std::log(1.0 / (1.01 * eps)) * 2.0 / eps));
}

struct TrackedSetReport {
  long long size = 0;
  long long leftover = 0;  // |S \ V(M)|
  bool in_band = false;    // within [0.8 gamma, gamma]|S| +- slack|S|
};

struct PseudoMatchingResult {
  bool ok = false;
  std::vector<int> matching;  // hyperedge ids of M
  int rounds = 0;
  int failed_round = -1;
  double unmatched_fraction = 0.0;  // never-matched share of V(H), pre-thinning
  double thinning_rate = 0.0;
  std::vector<TrackedSetReport> sets;
  int sets_in_band = 0;
  std::string error;
};

// t rounds of nibble with nominal degree decaying as d e^{-2 eps i}, then a
// thinning pass over the accumulated matching. Band misses on tracked sets
// are soft (reported, never fatal); only a degree collapse aborts.
inline PseudoMatchingResult pseudo_matching(const LinearTripleHypergraph& h, double d,
                                            const std::vector<std::vector<int>>& tracked,
                                            Rng& rng,
                                            const PseudoMatchingConfig& cfg = {}) {
  PseudoMatchingResult out;
  int t = cfg.t_override >= 0 ? cfg.t_override : pseudo_matching_rounds(cfg.epsilon);
  out.rounds = t;
  detail::NibbleEngine eng(h);
  std::vector<int> mstar;
  std::vector<int> bite, match;
  for (int i = 0; i < t && !eng.active.empty(); ++i) {
    double di = d * std::exp(-2.0 * cfg.epsilon * i);
    long long alive = eng.alive_count();
    if (di >= cfg.min_check_degree && alive > 0) {
      double mean_deg = 3.0 * static_cast<double>(eng.active.size()) / alive;
      if (std::abs(mean_deg - di) > cfg.collapse_tolerance * di) {
        out.failed_round = i;
        out.error = "degree collapse at round " + std::to_string(i) + ": mean " +
                    std::to_string(mean_deg) + " vs nominal " + std::to_string(di);
        return out;
      }
    }
    double p = di > 0.0 ? std::min(1.0, cfg.epsilon / di) : 1.0;
    eng.round(p, rng, bite, match);
    mstar.insert(mstar.end(), match.begin(), match.end());
  }

  long long n = h.vertex_count();
  out.unmatched_fraction =
      n ? static_cast<double>(n - 3 * static_cast<long long>(mstar.size())) / n : 0.0;
  double u = out.unmatched_fraction;
  double rate = cfg.literal_thinning
                    ? cfg.gamma
                    : std::clamp((0.9 * cfg.gamma - u) / std::max(1e-12, 1.0 - u), 0.0, 1.0);
  out.thinning_rate = rate;
  std::vector<char> in_m(h.vertex_count(), 0);
  for (int e : mstar) {
    if (rng.bernoulli(rate)) continue;  // thinned away
    out.matching.push_back(e);
    for (int v : h.edge(e)) in_m[v] = 1;
  }

  for (const auto& s : tracked) {
    TrackedSetReport r;
    r.size = static_cast<long long>(s.size());
    for (int v : s)
      if (!in_m[v]) ++r.leftover;
    double lo = (0.8 * cfg.gamma - cfg.band_slack) * r.size;
    double hi = (cfg.gamma + cfg.band_slack) * r.size;
    r.in_band = r.leftover >= lo && r.leftover <= hi;
    if (r.in_band) ++out.sets_in_band;
    out.sets.push_back(r);
  }
  out.ok = true;
  return out;
}

struct AlmostDecompositionConfig {
  PseudoMatchingConfig nibble;
  double degree_tolerance = 0.6;     // relative band around the mean aux degree
  double max_irregular_fraction = 0.02;
  double typicality_eta = 0.3;       // codegree diagnostic band
  int typicality_pairs = 200;
};

struct AlmostDecompositionResult {
  bool ok = false;
  std::vector<Triangle> triangles;  // edge-disjoint, all exposure-present
  Graph leftover;
  bool typical = true;         // codegree diagnostic (never fatal)
  double aux_mean_degree = 0;  // exposed triangles per edge
  int leftover_max_degree = 0;
  int leftover_min_degree = 0;
  double band_lo = 0, band_hi = 0;  // expected leftover degree window
  PseudoMatchingResult nibble;
  std::string error;
};

// Exposed-triangle packing: vertices of the auxiliary hypergraph are the
// edges of G, hyperedges its exposure-present triangles; pseudo_matching
// with the edge stars (plus the full vertex set) tracked gives an
// edge-disjoint triangle set whose leftover degrees are reported against
// the [3 gamma p n / 4, gamma p n] window.
inline AlmostDecompositionResult almost_triangle_decomposition(
    const Graph& g, ExposureLedger& ledger, double gamma, Rng& rng,
    const AlmostDecompositionConfig& cfg = {}, int class_id = -1) {
  AlmostDecompositionResult out;
  out.leftover = g;
  int n = g.vertex_count();
  double p = ledger.rate();
  out.band_lo = 0.75 * gamma * p * n;
  out.band_hi = gamma * p * n;

  // Codegree typicality diagnostic against the graph's own density.
  long long m = g.edge_count();
  double rho = n >= 2 ? 2.0 * m / (static_cast<double>(n) * (n - 1)) : 0.0;
  for (int s = 0; s < cfg.typicality_pairs && n >= 2; ++s) {
    int u = static_cast<int>(rng.below(n));
    int v = static_cast<int>(rng.below(n));
    if (u == v) continue;
    double co = g.row(u).intersect_count(g.row(v));
    if (co < (1 - cfg.typicality_eta) * rho * rho * n ||
        co > (1 + cfg.typicality_eta) * rho * rho * n)
      out.typical = false;
  }

  auto th = triangle_hypergraph(
      g, [&](const Triangle& t) { return ledger.expose(t, class_id); });
  out.aux_mean_degree = th.h.mean_degree();
  if (th.h.edge_count() == 0) {
    out.ok = true;
    for (int v = 0; v < n; ++v) {
      int dv = out.leftover.degree(v);
      out.leftover_max_degree = std::max(out.leftover_max_degree, dv);
    }
    return out;
  }

  long long irregular = 0;
  for (int v = 0; v < th.h.vertex_count(); ++v) {
    double dv = th.h.degree(v);
    if (dv < (1 - cfg.degree_tolerance) * out.aux_mean_degree ||
        dv > (1 + cfg.degree_tolerance) * out.aux_mean_degree)
      ++irregular;
  }
  if (irregular > cfg.max_irregular_fraction * th.h.vertex_count()) {
    out.error = "auxiliary hypergraph too irregular (" + std::to_string(irregular) +
                " of " + std::to_string(th.h.vertex_count()) +
                " edges outside the degree band) - exposure too sparse";
    return out;
  }

  // Tracked family: one edge-star per graph vertex, plus all of V(aux).
  std::vector<std::vector<int>> tracked;
  for (int v = 0; v < n; ++v) {
    std::vector<int> star;
    g.for_each_neighbor(v, [&](int w) { star.push_back(th.aux_vertex(v, w)); });
    tracked.push_back(std::move(star));
  }
  std::vector<int> all(th.h.vertex_count());
  for (int i = 0; i < th.h.vertex_count(); ++i) all[i] = i;
  tracked.push_back(std::move(all));

  PseudoMatchingConfig ncfg = cfg.nibble;
  ncfg.gamma = gamma;
  out.nibble = pseudo_matching(th.h, out.aux_mean_degree, tracked, rng, ncfg);
  if (!out.nibble.ok) {
    out.error = out.nibble.error;
    return out;
  }
  for (int e : out.nibble.matching) {
    const Triangle& t = th.triangle_of_edge[e];
    out.triangles.push_back(t);
    out.leftover.remove_edge(t.a, t.b);
    out.leftover.remove_edge(t.a, t.c);
    out.leftover.remove_edge(t.b, t.c);
  }
  out.leftover_min_degree = n ? out.leftover.degree(0) : 0;
  for (int v = 0; v < n; ++v) {
    int dv = out.leftover.degree(v);
    out.leftover_max_degree = std::max(out.leftover_max_degree, dv);
    out.leftover_min_degree = std::min(out.leftover_min_degree, dv);
  }
  out.ok = true;
  return out;
}

}  // namespace designforge
