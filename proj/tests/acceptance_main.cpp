// Acceptance gate: one pass/fail line per criterion, exit 0 only if all pass.
// Checks are always on (no NDEBUG dependence); failures print the violated
// condition to stderr and the run continues to the next criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_set>
#include <vector>

#include "designforge/nibble.hpp"
#include "designforge/solvers.hpp"
#include "designforge/spread.hpp"

using namespace designforge;

namespace {

#define REQ(cond)                                                             \
  do {                                                                        \
    if (!(cond)) {                                                            \
      std::fprintf(stderr, "  [fail] %s at %s:%d\n", #cond, __FILE__, __LINE__); \
      return false;                                                           \
    }                                                                         \
  } while (0)

double now_s() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

Graph bipartite_from_pairs(int nl, int nr,
                           const std::vector<std::pair<int, int>>& es) {
  Graph g(nl + nr);
  std::vector<int> a(nl), b(nr);
  for (int i = 0; i < nl; ++i) a[i] = i;
  for (int j = 0; j < nr; ++j) b[j] = nl + j;
  g.add_part("A", a);
  g.add_part("B", b);
  for (auto [u, v] : es) g.add_edge(u, nl + v);
  return g;
}

Graph random_regular_bipartite(int n, int d, Rng& rng) {
  Graph g(2 * n);
  std::vector<int> a(n), b(n);
  for (int i = 0; i < n; ++i) a[i] = i, b[i] = n + i;
  g.add_part("A", a);
  g.add_part("B", b);
  for (int k = 0; k < d; ++k) {
    BipartiteInstance inst(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!g.has_edge(i, n + j)) inst.adj[i].push_back(j);
    auto m = hopcroft_karp(inst, &rng);
    if (!m.perfect) { --k; continue; }  // resample this matching
    for (int i = 0; i < n; ++i) g.add_edge(i, n + m.match_l[i]);
  }
  return g;
}

// --- criterion 1: f-factor solver agrees with the brute-force oracle -------

bool criterion1() {
  Rng rng(101);
  int checked = 0;
  while (checked < 500) {
    int nl = static_cast<int>(rng.range(1, 4));
    int nr = static_cast<int>(rng.range(1, 4));
    std::vector<std::pair<int, int>> es;
    for (int i = 0; i < nl; ++i)
      for (int j = 0; j < nr; ++j)
        if (rng.bernoulli(0.6)) es.push_back({i, j});
    if (static_cast<int>(es.size()) > 16) continue;
    auto g = bipartite_from_pairs(nl, nr, es);
    DegreeSpec f(nl + nr, 0);
    int budget = static_cast<int>(rng.range(0, static_cast<int>(es.size())));
    for (int t = 0; t < budget; ++t) {
      int i = static_cast<int>(rng.below(nl));
      int j = static_cast<int>(rng.below(nr));
      if (f[i] < nr) ++f[i];
      if (f[nl + j] < nl) ++f[nl + j];
    }
    long long sa = 0, sb = 0;
    for (int i = 0; i < nl; ++i) sa += f[i];
    for (int j = 0; j < nr; ++j) sb += f[nl + j];
    if (sa != sb) continue;
    ++checked;
    auto res = f_factor(g, f);
    REQ(res.feasible == f_factor_oracle(g, f));
    if (res.feasible) {
      std::vector<int> deg(nl + nr, 0);
      for (auto [u, v] : res.edges) {
        REQ(g.has_edge(u, v));
        ++deg[u];
        ++deg[v];
      }
      for (int v = 0; v < nl + nr; ++v) REQ(deg[v] == f[v]);
    } else {
      // The witness must break the counting inequality when re-evaluated.
      long long cross = 0;
      for (int u : res.a_prime)
        for (int v : res.b_prime)
          if (g.has_edge(u, v)) ++cross;
      long long lhs = 0;
      for (int u : res.a_prime) lhs += f[u];
      std::set<int> bp(res.b_prime.begin(), res.b_prime.end());
      for (int j = 0; j < nr; ++j)
        if (!bp.count(nl + j)) lhs -= f[nl + j];
      REQ(cross < lhs);
    }
  }
  return true;
}

// --- criterion 2: one_factorize validity on random regular hosts -----------

bool criterion2() {
  Rng rng(202);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 4 + static_cast<int>(rng.below(trial < 95 ? 61 : 253));  // up to 256
    int d = 1 + static_cast<int>(rng.below(n));
    Graph g = random_regular_bipartite(n, d, rng);
    auto of = one_factorize(g, &rng);
    REQ(static_cast<int>(of.matchings.size()) == d);
    REQ(validate_one_factorization(g, of).valid);
  }
  return true;
}

// --- criterion 3: spread sampler structural suite ---------------------------

bool criterion3() {
  const int n = 128;
  Graph g = build_complete_bipartite(n);
  SpreadConfig cfg;
  auto vp = vortex_params(n, cfg.c);
  int ok = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(303 + seed);
    auto s = sample_spread_factorization(g, cfg, rng);
    if (!s.ok) continue;
    bool good = true;
    // (i) the parts partition E(K_{n,n}) and each part is regular.
    long long total = 0;
    for (const Graph& part : s.dec.parts) {
      if (part.vertex_count() == 0) continue;
      total += part.edge_count();
      int deg = part.degree(0);
      for (int v = 1; v < part.vertex_count() && good; ++v)
        good = part.degree(v) == deg;
    }
    good = good && total == static_cast<long long>(n) * n;
    g.for_each_edge([&](int u, int v) {
      int owners = 0;
      for (const Graph& part : s.dec.parts)
        if (part.vertex_count() && part.has_edge(u, v)) ++owners;
      if (owners != 1) good = false;
    });
    // (ii) valid 1-factorization of the host.
    good = good && validate_one_factorization(g, s.factorization).valid;
    // (iii) provenance: each edge sits in its own base slot or one level down.
    for (std::size_t idx = 0; idx < s.trace.edge_order.size() && good; ++idx) {
      auto [u, v] = s.trace.edge_order[idx];
      auto it = s.dec.provenance.find(edge_key(u, v));
      if (it == s.dec.provenance.end()) { good = false; break; }
      auto [label, how] = it->second;
      if (!s.dec.parts[label - 1].has_edge(u, v)) { good = false; break; }
      auto base = VortexDecomposition::slot_of(vp.ell, s.trace.base_labels[idx]);
      auto fin = VortexDecomposition::slot_of(vp.ell, label);
      if (how == Provenance::own_level)
        good = fin.i == base.i && fin.j == base.j;
      else
        good = fin.i == std::min(base.i + 1, vp.ell);
    }
    if (good) ++ok;
  }
  std::fprintf(stderr, "  criterion 3: %d/100 structurally clean\n", ok);
  REQ(ok >= 95);
  return true;
}

// --- criterion 4: spreadness marginal bounds --------------------------------

bool criterion4() {
  const int n = 64;
  Graph g = build_complete_bipartite(n);
  SpreadConfig cfg;
  auto vp = vortex_params(n, cfg.c);
  Rng prng(404);
  auto random_item = [&]() {
    SpreadProbe::Item it;
    it.u = static_cast<int>(prng.below(n));
    it.v = n + static_cast<int>(prng.below(n));
    it.slot.i = 1 + static_cast<int>(prng.below(vp.ell));
    it.slot.j = 1 + static_cast<int>(prng.below(1u << (vp.ell - it.slot.i)));
    return it;
  };
  std::vector<SpreadProbe> probes;
  for (int i = 0; i < 50; ++i) probes.push_back({{random_item()}});
  for (int i = 0; i < 20; ++i) {
    SpreadProbe pr{{random_item(), random_item()}};
    while (edge_key(pr.items[0].u, pr.items[0].v) ==
           edge_key(pr.items[1].u, pr.items[1].v))
      pr.items[1] = random_item();
    probes.push_back(std::move(pr));
  }
  Rng rng(405);
  auto rep = estimate_spreadness(g, cfg, probes, 10000, rng);
  for (const auto& pr : rep.probes) REQ(pr.pass);  // empirical <= bound + 3 sigma
  REQ(rep.all_pass);
  return true;
}

// --- criterion 5: nibble survival calibration and pseudo-matching band ------

bool criterion5() {
  Graph g = build_complete(151);
  auto th = triangle_hypergraph(g);
  const int nv = th.h.vertex_count();
  std::vector<std::vector<int>> all(1);
  for (int i = 0; i < nv; ++i) all[0].push_back(i);

  double sum = 0;
  for (int seed = 0; seed < 50; ++seed) {
    Rng rng(505 + seed);
    auto r = nibble_round(th.h, 149.0, 0.1, all, rng);
    sum += static_cast<double>(r.stats.surviving[0]) / nv;
  }
  double mean = sum / 50;
  std::fprintf(stderr, "  criterion 5: mean survival %.4f vs e^-0.1 = %.4f\n",
               mean, std::exp(-0.1));
  REQ(std::abs(mean - std::exp(-0.1)) < 0.01);

  // Tracked family: V(H) plus 50 random size-2000 subsets.
  Rng trng(515);
  std::vector<std::vector<int>> tracked = all;
  for (int s = 0; s < 50; ++s) {
    std::vector<int> ids(nv);
    for (int i = 0; i < nv; ++i) ids[i] = i;
    trng.shuffle(ids);
    ids.resize(2000);
    tracked.push_back(std::move(ids));
  }
  PseudoMatchingConfig cfg;  // gamma = 0.1, band slack 0.02
  long long in_band = 0, total = 0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng rng(525 + seed);
    auto res = pseudo_matching(th.h, th.h.mean_degree(), tracked, rng, cfg);
    REQ(res.ok);
    in_band += res.sets_in_band;
    total += static_cast<long long>(res.sets.size());
  }
  std::fprintf(stderr, "  criterion 5: %lld/%lld tracked sets in band\n",
               in_band, total);
  REQ(in_band * 10 >= total * 9);
  return true;
}

// --- criteria 6 + 11: STS reduction exactness and the divisibility scan -----

std::vector<ReductionOutput> g_red1_99;  // shared with criterion 11

bool reduction_contract_sts(const ReductionOutput& r) {
  const Graph& base = r.base;
  const Graph& h = r.residual;
  int n3 = static_cast<int>(base.part(2).size());
  int w3 = static_cast<int>(base.special_of_part(2).size());
  for (int w : base.special_of_part(2))
    if (h.degree(w) != 0) return false;
  Bitset v12(base.vertex_count());
  for (int v : base.part(0)) v12.set(v);
  for (int v : base.part(1)) v12.set(v);
  for (int i = 0; i < 2; ++i)
    for (int v : base.part(i)) {
      if (h.row(v).intersect_count(v12) != n3 - w3) return false;
      for (int u : base.part(i))
        if (u != v && h.has_edge(u, v)) return false;
    }
  // Triangles edge-disjoint and inside the exposure universe.
  ExposureLedger probe(base, 1.0, r.seed);
  std::unordered_set<std::uint64_t> used;
  for (const Triangle& t : r.triangles) {
    if (!probe.in_universe(t)) return false;
    for (auto [u, v] : t.edges())
      if (!used.insert(edge_key(u, v)).second) return false;
  }
  return r.class_violations == 0;
}

bool criterion6() {
  for (int n : {99, 105}) {
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto r = sts_reduce(n, 0.18, 1.0, 606 + seed);
      if (n == 99) g_red1_99.push_back(r);
      if (r.ok && reduction_contract_sts(r)) ++ok;
    }
    std::fprintf(stderr, "  criterion 6: n = %d, %d/20 exact\n", n, ok);
    REQ(ok >= 18);
  }
  return true;
}

bool criterion11() {
  REQ(g_red1_99.size() == 20);
  for (const auto& r : g_red1_99) {
    if (!r.ok) continue;  // failed runs are criterion 6's business
    REQ(r.balance_scan);  // d(u, U_j1) == d(u, U_j2) verified on G3
    for (const auto& tr : r.trackers) {
      REQ(tr.norm() == 0);
      REQ(tr.sum() == 0);
    }
  }
  return true;
}

// --- criterion 7: end-to-end STS ---------------------------------------------

bool criterion7() {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = build_sts(7, 1.0, 707 + seed);
    REQ(r.ok);
    REQ(r.bypass);
    REQ(r.triples.size() == 7);
    REQ(validate_sts(7, r.triples).valid);
  }
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = build_sts(99, 1.0, 717 + seed);
    if (r.ok && r.triples.size() == 1617 && validate_sts(99, r.triples).valid) ++ok;
  }
  std::fprintf(stderr, "  criterion 7: %d/20 valid STS(99)\n", ok);
  REQ(ok >= 18);
  return true;
}

// --- criterion 8: 1-factorization reduction and end-to-end build ------------

bool criterion8() {
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = one_f_reduce(64, 0.33, 1.0, 808 + seed);
    if (!r.ok || r.class_violations != 0) continue;
    const Graph& base = r.base;
    const Graph& h = r.residual;
    bool good = true;
    int reserved = static_cast<int>(base.special_of_part(3).size());
    int free_deg = static_cast<int>(base.part(3).size()) - reserved;
    for (int c : base.part(2)) good = good && h.degree(c) == 0;
    for (int c : base.part(3))
      if (base.is_special(c)) good = good && h.degree(c) == 0;
    Bitset v12(base.vertex_count());
    for (int v : base.part(0)) v12.set(v);
    for (int v : base.part(1)) v12.set(v);
    for (int i = 0; i < 2 && good; ++i)
      for (int v : base.part(i)) {
        good = good && h.row(v).intersect_count(v12) == free_deg;
        for (int u : base.part(i))
          if (u != v && h.has_edge(u, v)) good = false;
      }
    if (good) ++ok;
  }
  std::fprintf(stderr, "  criterion 8: %d/20 exact reductions\n", ok);
  REQ(ok >= 18);

  int built = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = build_one_factorization_K2n(64, 1.0, 818 + seed);
    if (r.ok && r.factors.matchings.size() == 127 && r.report.valid) ++built;
  }
  std::fprintf(stderr, "  criterion 8: %d/20 valid K_128 colourings\n", built);
  REQ(built >= 18);
  return true;
}

// --- criterion 9: threshold endpoint and monotonicity ------------------------

bool criterion9() {
  const int n = 16, trials = 50;
  Graph h = build_complete_bipartite(n);
  std::vector<double> lo, hi, rate, empty_frac;
  for (int step = 1; step <= 10; ++step) {
    double p = step / 10.0;
    int succ = 0, empties = 0;
    for (int t = 0; t < trials; ++t) {
      Rng rng(splitmix64(909ull * 1000003 + step * 97 + t));
      ListAssignment la = sample_lists(h, ListMode::binomial, p, 0, n, rng);
      bool has_empty = false;
      h.for_each_edge([&](int u, int v) {
        has_empty = has_empty || la.list(u, v).empty();
      });
      if (has_empty) ++empties;
      auto r = solve_list_edge_colouring(h, la, 4000, rng);
      if (r.outcome == SolveOutcome::success &&
          validate_proper_edge_colouring(h, r.colouring, n, &la, true).valid)
        ++succ;
    }
    auto [wl, wh] = wilson_interval(succ, trials);
    lo.push_back(wl);
    hi.push_back(wh);
    rate.push_back(static_cast<double>(succ) / trials);
    empty_frac.push_back(static_cast<double>(empties) / trials);
    std::fprintf(stderr, "  criterion 9: p = %.1f rate %.2f (empty-list %.2f)\n",
                 p, rate.back(), empty_frac.back());
  }
  REQ(rate.back() == 1.0);  // p = 1.0
  // Non-decreasing up to overlapping Wilson intervals: an earlier point may
  // never sit significantly above a later one.
  for (std::size_t i = 0; i < rate.size(); ++i)
    for (std::size_t j = i + 1; j < rate.size(); ++j) REQ(lo[i] <= hi[j]);
  // At the first p where lists go empty in >= 95% of trials, near-zero rate.
  for (std::size_t i = 0; i < rate.size(); ++i)
    if (empty_frac[i] >= 0.95) {
      REQ(rate[i] <= 0.05);
      break;
    }
  return true;
}

// --- criterion 10: equitable colouring ---------------------------------------

bool criterion10() {
  Rng rng(1010);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 8 + static_cast<int>(rng.below(40));
    Graph g(n);
    double p = (2.0 + rng.next_double() * 8.0) / n;  // mean degree 2..10
    for (int u = 0; u < n; ++u)
      for (int v = u + 1; v < n; ++v)
        if (rng.bernoulli(p) && g.degree(u) < 12 && g.degree(v) < 12)
          g.add_edge(u, v);
    int k = g.max_degree() + 1;
    auto cc = equitable_edge_colouring(g, k);
    long long e = g.edge_count();
    long long floor_sz = e / k, ceil_sz = (e + k - 1) / k;
    long long total = 0;
    std::set<int> seen;
    for (const auto& cls : cc.classes) {
      REQ(static_cast<long long>(cls.size()) >= floor_sz);
      REQ(static_cast<long long>(cls.size()) <= ceil_sz);
      seen.clear();
      for (auto [u, v] : cls) {
        REQ(g.has_edge(u, v));
        REQ(seen.insert(u).second);
        REQ(seen.insert(v).second);
      }
      total += static_cast<long long>(cls.size());
    }
    REQ(total == e);
  }
  return true;
}

struct Criterion {
  int id;
  const char* name;
  bool (*fn)();
  double limit_s;
};

}  // namespace

int main() {
  const Criterion table[] = {
      {1, "f-factor oracle equivalence", criterion1, 10},
      {2, "1-factorization validity", criterion2, 60},
      {3, "spread sampler structural suite", criterion3, 300},
      {4, "spreadness marginal bound", criterion4, 600},
      {5, "nibble calibration", criterion5, 300},
      {6, "STS reduction exactness", criterion6, 600},
      {7, "end-to-end STS", criterion7, 900},
      {8, "1-factorization reduction + build", criterion8, 900},
      {9, "threshold endpoint + monotonicity", criterion9, 1200},
      {10, "equitable colouring", criterion10, 30},
      {11, "divisibility balancer", criterion11, 600},
  };
  int failures = 0;
  for (const auto& c : table) {
    double t0 = now_s();
    bool ok = false;
    try {
      ok = c.fn();
    } catch (const std::exception& e) {
      std::fprintf(stderr, "  [fail] exception: %s\n", e.what());
    }
    double dt = now_s() - t0;
    if (ok && dt > c.limit_s) {
      std::fprintf(stderr, "  [fail] over time budget (%.1f s > %.0f s)\n", dt,
                   c.limit_s);
      ok = false;
    }
    std::printf("criterion %2d (%s): %s [%.1f s]\n", c.id, c.name,
                ok ? "PASS" : "FAIL", dt);
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
