#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "designforge/factorize.hpp"
#include "designforge/graph.hpp"
#include "designforge/lists.hpp"
#include "designforge/matching.hpp"
#include "designforge/reductions.hpp"
#include "designforge/rng.hpp"
#include "designforge/triangles.hpp"
#include "designforge/validate.hpp"

namespace designforge {

// ---------------------------------------------------------------------------
// List-edge-colouring of a d-regular bipartite graph with d colours: each
// colour class must be a perfect matching drawn from the lists. Colour-by-
// colour perfect matchings in random order, limited backtracking, full
// restarts, and an exact fallback at small orders. "infeasible" is only ever
// claimed on a structural certificate (empty list, or an exhausted exact
// search); running out of budget is reported as such.
// ---------------------------------------------------------------------------

enum class SolveOutcome { success, exhausted, infeasible };

struct ColouringResult {
  SolveOutcome outcome = SolveOutcome::exhausted;
  std::unordered_map<std::uint64_t, int> colouring;  // edge key -> colour
  int empty_u = -1, empty_v = -1;  // infeasible certificate: edge with empty list
  bool exhaustive = false;         // verdict proved by the exact fallback
  long long restarts = 0;
  long long backtracks = 0;
  long long matchings_tried = 0;
  double time_ms = 0;
};

inline std::string colouring_result_json(const ColouringResult& r) {
  std::string status = r.outcome == SolveOutcome::success      ? "success"
                       : r.outcome == SolveOutcome::infeasible ? "infeasible"
                                                               : "exhausted";
  std::string s = "{\"status\":\"" + status + "\"";
  if (r.outcome == SolveOutcome::success) {
    s += ",\"colouring\":[";
    std::vector<std::pair<std::uint64_t, int>> items(r.colouring.begin(),
                                                     r.colouring.end());
    std::sort(items.begin(), items.end());
    bool first = true;
    for (auto [key, c] : items) {
      int u = static_cast<int>(key >> 32), v = static_cast<int>(key & 0xffffffffULL);
      s += (first ? "" : ",") + std::string("[") + std::to_string(u) + "," +
           std::to_string(v) + "," + std::to_string(c) + "]";
      first = false;
    }
    s += "]";
  }
  if (r.outcome == SolveOutcome::infeasible && r.empty_u >= 0)
    s += ",\"empty_list_edge\":[" + std::to_string(r.empty_u) + "," +
         std::to_string(r.empty_v) + "]";
  s += ",\"stats\":{\"restarts\":" + std::to_string(r.restarts) +
       ",\"backtracks\":" + std::to_string(r.backtracks) +
       ",\"matchings\":" + std::to_string(r.matchings_tried) +
       ",\"exhaustive\":" + (r.exhaustive ? "true" : "false") + "}}";
  return s;
}

namespace detail {

// Exact cell-by-cell completion, fewest-choices-first; colours as bitmasks.
// Returns 1 = coloured, 0 = proven impossible, -1 = node budget hit.
inline int exact_list_colouring(const std::vector<std::pair<int, int>>& edges,
                                const std::vector<std::uint64_t>& allowed,
                                int n_vertices, int d,
                                std::unordered_map<std::uint64_t, int>& out,
                                long long node_budget) {
  std::vector<std::uint64_t> free_at(n_vertices, (d >= 64) ? ~0ULL : ((1ULL << d) - 1));
  int m = static_cast<int>(edges.size());
  std::vector<int> chosen(m, -1);
  long long nodes = 0;
  std::function<int()> dfs = [&]() -> int {
    if (++nodes > node_budget) return -1;
    int best = -1;
    int best_count = 65;
    for (int i = 0; i < m; ++i) {
      if (chosen[i] >= 0) continue;
      auto [u, v] = edges[i];
      std::uint64_t opts = allowed[i] & free_at[u] & free_at[v];
      int cnt = __builtin_popcountll(opts);
      if (cnt == 0) return 0;
      if (cnt < best_count) {
        best_count = cnt;
        best = i;
      }
    }
    if (best < 0) return 1;
    auto [u, v] = edges[best];
    std::uint64_t opts = allowed[best] & free_at[u] & free_at[v];
    while (opts) {
      int c = __builtin_ctzll(opts);
      opts &= opts - 1;
      chosen[best] = c;
      free_at[u] &= ~(1ULL << c);
      free_at[v] &= ~(1ULL << c);
      int sub = dfs();
      if (sub != 0) return sub;
      chosen[best] = -1;
      free_at[u] |= 1ULL << c;
      free_at[v] |= 1ULL << c;
    }
    return 0;
  };
  int verdict = dfs();
  if (verdict == 1)
    for (int i = 0; i < m; ++i) out[edge_key(edges[i].first, edges[i].second)] = chosen[i];
  return verdict;
}

}  // namespace detail

inline ColouringResult solve_list_edge_colouring(const Graph& h, const ListAssignment& la,
                                                 long long budget, Rng& rng) {
  auto t0 = std::chrono::steady_clock::now();
  if (h.part_count() != 2)
    throw std::invalid_argument("solve_list_edge_colouring: host not bipartite");
  const auto& a = h.part(0);
  const auto& b = h.part(1);
  int d = h.vertex_count() ? h.degree(a[0]) : 0;
  for (int v = 0; v < h.vertex_count(); ++v)
    if (h.degree(v) != d)
      throw std::invalid_argument("solve_list_edge_colouring: host not regular");
  if (la.n_colours != d)
    throw std::invalid_argument("solve_list_edge_colouring: colour universe != degree");

  ColouringResult res;
  std::vector<std::pair<int, int>> edges;
  h.for_each_edge([&](int u, int v) { edges.emplace_back(u, v); });
  for (auto [u, v] : edges)
    if (la.list(u, v).empty()) {
      res.outcome = SolveOutcome::infeasible;
      res.empty_u = u;
      res.empty_v = v;
      res.time_ms = detail::ms_since(t0);
      return res;
    }
  if (edges.empty() || d == 0) {
    res.outcome = SolveOutcome::success;
    res.time_ms = detail::ms_since(t0);
    return res;
  }

  int m = static_cast<int>(a.size());
  std::vector<int> left_of(h.vertex_count(), -1), right_of(h.vertex_count(), -1);
  for (int i = 0; i < m; ++i) left_of[a[i]] = i;
  for (int i = 0; i < static_cast<int>(b.size()); ++i) right_of[b[i]] = i;

  const int max_backtracks_per_run = 6;
  while (budget > 0) {
    std::vector<int> order(d);
    for (int c = 0; c < d; ++c) order[c] = c;
    rng.shuffle(order);
    std::unordered_map<std::uint64_t, int> col;
    std::vector<std::pair<int, Matching>> placed;  // (colour, class) stack
    int run_backtracks = 0;
    std::size_t next = 0;
    while (next < order.size() && budget > 0) {
      int c = order[next];
      BipartiteInstance inst(m, m);
      for (auto [u, v] : edges) {
        if (col.count(edge_key(u, v))) continue;
        if (!la.allows(u, v, c)) continue;
        int li = left_of[u] >= 0 ? left_of[u] : left_of[v];
        int ri = right_of[v] >= 0 ? right_of[v] : right_of[u];
        inst.adj[li].push_back(ri);
      }
      --budget;
      ++res.matchings_tried;
      auto pm = hopcroft_karp(inst, &rng);
      if (pm.perfect) {
        Matching cls;
        for (int li = 0; li < m; ++li) {
          int u = a[li], v = b[pm.match_l[li]];
          col[edge_key(u, v)] = c;
          cls.emplace_back(u, v);
        }
        placed.emplace_back(c, std::move(cls));
        ++next;
        continue;
      }
      if (!placed.empty() && run_backtracks < max_backtracks_per_run) {
        // Un-assign the most recent class and swap it behind the stuck colour.
        ++run_backtracks;
        ++res.backtracks;
        auto [pc, cls] = placed.back();
        placed.pop_back();
        for (auto [u, v] : cls) col.erase(edge_key(u, v));
        --next;
        for (std::size_t i = order.size() - 1; i > next; --i)
          std::swap(order[i], order[next + rng.below(i - next + 1)]);
        continue;
      }
      break;  // dead end: restart with a fresh order
    }
    if (next == order.size()) {
      res.outcome = SolveOutcome::success;
      res.colouring = std::move(col);
      res.time_ms = detail::ms_since(t0);
      return res;
    }
    ++res.restarts;
  }

  // Exact fallback decides small instances; otherwise report the spent budget.
  if (m <= 8 && d <= 64) {
    std::vector<std::uint64_t> allowed(edges.size(), 0);
    for (std::size_t i = 0; i < edges.size(); ++i)
      for (int c : la.list(edges[i].first, edges[i].second)) allowed[i] |= 1ULL << c;
    std::unordered_map<std::uint64_t, int> col;
    int verdict = detail::exact_list_colouring(edges, allowed, h.vertex_count(), d, col,
                                               5000000);
    if (verdict == 1) {
      res.outcome = SolveOutcome::success;
      res.colouring = std::move(col);
      res.exhaustive = true;
    } else if (verdict == 0) {
      res.outcome = SolveOutcome::infeasible;
      res.exhaustive = true;
    }
  }
  res.time_ms = detail::ms_since(t0);
  return res;
}

// ---------------------------------------------------------------------------
// End-to-end builders. Both run the matching reduction on one exposure
// sub-stream and finish the residual with the list solver on a second,
// independent sub-stream; the two rates p1, p2 satisfy (1-p1)(1-p2) = 1-p.
// ---------------------------------------------------------------------------

struct TwoExposure {
  double p1 = 0, p2 = 0;
};

inline TwoExposure split_exposure(double p) {
  double q = 1.0 - std::sqrt(std::max(0.0, 1.0 - p));
  return {q, q};
}

struct StsBuildConfig {
  double eps = 0.18;
  int bypass_below = 30;  // solve directly when the reduction has no room
  long long budget = 20000;
  StsReduceConfig reduce;
};

struct StsBuildResult {
  bool ok = false;
  std::vector<Triangle> triples;
  bool bypass = false;
  ReductionOutput reduction;
  ColouringResult colouring;
  ValidationReport report;
  std::string failed_stage;
  std::string error;
  std::uint64_t seed = 0;
};

namespace detail {

// Exact cover of the pairs of [n] by exposed triangles, pair-pivot
// backtracking (used by the small-n bypass).
inline bool exposed_triangle_cover(int n, const std::vector<Triangle>& pool, Rng& rng,
                                   std::vector<Triangle>& out, long long node_budget) {
  auto pair_id = [n](int u, int v) { return u * n + v; };  // u < v
  std::vector<std::vector<int>> at_pair(n * n);
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (auto [u, v] : pool[i].edges()) at_pair[pair_id(u, v)].push_back(static_cast<int>(i));
  for (auto& lst : at_pair) rng.shuffle(lst);
  std::vector<char> covered(n * n, 0), used(pool.size(), 0);
  long long nodes = 0;
  std::function<bool()> dfs = [&]() -> bool {
    if (++nodes > node_budget) return false;
    int pivot = -1;
    for (int u = 0; u < n && pivot < 0; ++u)
      for (int v = u + 1; v < n; ++v)
        if (!covered[pair_id(u, v)]) {
          pivot = pair_id(u, v);
          break;
        }
    if (pivot < 0) return true;
    for (int ti : at_pair[pivot]) {
      if (used[ti]) continue;
      const Triangle& t = pool[ti];
      bool fits = true;
      for (auto [u, v] : t.edges())
        if (covered[pair_id(u, v)]) {
          fits = false;
          break;
        }
      if (!fits) continue;
      used[ti] = 1;
      for (auto [u, v] : t.edges()) covered[pair_id(u, v)] = 1;
      out.push_back(t);
      if (dfs()) return true;
      out.pop_back();
      used[ti] = 0;
      for (auto [u, v] : t.edges()) covered[pair_id(u, v)] = 0;
    }
    return false;
  };
  return dfs();
}

}  // namespace detail

inline StsBuildResult build_sts(int n, double p, std::uint64_t seed,
                                const StsBuildConfig& cfg = {}) {
  StsBuildResult out;
  out.seed = seed;
  if (n % 6 != 1 && n % 6 != 3)
    throw std::invalid_argument("build_sts: n mod 6 must be 1 or 3");
  Rng rng(splitmix64(seed ^ 0x62737473ULL));

  if (n < cfg.bypass_below) {
    out.bypass = true;
    Graph host = build_complete(n);
    ExposureLedger ledger(host, p, seed);
    std::vector<Triangle> pool;
    for (const Triangle& t : enumerate_triangles(host))
      if (ledger.expose(t, 50)) pool.push_back(t);
    if (!detail::exposed_triangle_cover(n, pool, rng, out.triples, 2000000)) {
      out.failed_stage = "bypass_cover";
      out.error = "no exposed triangle decomposition found";
      return out;
    }
    out.report = validate_sts(n, out.triples);
    if (!out.report.valid) {
      out.failed_stage = "validate";
      out.error = out.report.violations.empty() ? "invalid" : out.report.violations[0];
      return out;
    }
    out.ok = true;
    return out;
  }

  Graph base = build_sts_reduction_host(n, cfg.eps);
  ExposureLedger master(base, p, seed);
  auto two = split_exposure(p);
  ExposureLedger led1 = master.subledger(two.p1, 1);
  ExposureLedger led2 = master.subledger(two.p2, 2);
  StsReduceConfig rcfg = cfg.reduce;
  rcfg.eps = cfg.eps;
  out.reduction = sts_reduce_with(base, led1, rng, rcfg);
  out.reduction.seed = seed;
  if (!out.reduction.ok) {
    out.failed_stage = "reduce:" + out.reduction.failed_stage;
    out.error = out.reduction.error;
    return out;
  }

  // Residual: cross edges between V1 and V2 plus the free V3 stars. Build the
  // bipartite list instance with colours = free vertices of V3.
  const Graph& h = out.reduction.residual;
  const auto& v1 = base.part(0);
  const auto& v2 = base.part(1);
  std::vector<int> free3 = base.nonspecial_of_part(2);
  int d = static_cast<int>(free3.size());
  int m = static_cast<int>(v1.size());
  Graph rh(2 * m);
  std::vector<int> ra(m), rb(m);
  for (int i = 0; i < m; ++i) ra[i] = i, rb[i] = m + i;
  rh.add_part("A", ra);
  rh.add_part("B", rb);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (h.has_edge(v1[i], v2[j])) rh.add_edge(i, m + j);
  ListAssignment la;
  la.n_colours = d;
  rh.for_each_edge([&](int i, int j) {
    std::vector<int> l;
    for (int s = 0; s < d; ++s)
      if (led2.expose(Triangle(v1[i], v2[j - m], free3[s]), 51)) l.push_back(s);
    la.lists.emplace(edge_key(i, j), std::move(l));
  });

  out.colouring = solve_list_edge_colouring(rh, la, cfg.budget, rng);
  if (out.colouring.outcome != SolveOutcome::success) {
    out.failed_stage = "list_solve";
    out.error = out.colouring.outcome == SolveOutcome::infeasible ? "infeasible lists"
                                                                  : "budget exhausted";
    return out;
  }

  out.triples = out.reduction.triangles;
  for (const auto& [key, c] : out.colouring.colouring) {
    int i = static_cast<int>(key >> 32), j = static_cast<int>(key & 0xffffffffULL);
    out.triples.emplace_back(v1[i], v2[j - m], free3[c]);
  }
  std::sort(out.triples.begin(), out.triples.end());
  out.report = validate_sts(n, out.triples);
  if (!out.report.valid) {
    out.failed_stage = "validate";
    out.error = out.report.violations.empty() ? "invalid" : out.report.violations[0];
    return out;
  }
  out.ok = true;
  return out;
}

struct OneFBuildConfig {
  // eps <= 0 sizes the reserved pool automatically: the clique-leftover max
  // degree shrinks slower than n, so small orders need a larger fraction.
  double eps = 0.0;
  long long budget = 20000;
  OneFReduceConfig reduce;
};

inline double one_f_auto_eps(int n) {
  double pool = std::max(14.0, std::floor(0.33 * n));
  return std::min(0.95, (pool + 0.5) / n);
}

struct OneFBuildResult {
  bool ok = false;
  OneFactorization factors;                          // 2n-1 factors of K_{2n}
  std::unordered_map<std::uint64_t, int> colour_of;  // K_{2n} edge -> factor
  ReductionOutput reduction;
  ColouringResult colouring;
  ValidationReport report;
  std::string failed_stage;
  std::string error;
  std::uint64_t seed = 0;
};

inline OneFBuildResult build_one_factorization_K2n(int n, double p, std::uint64_t seed,
                                                   const OneFBuildConfig& cfg = {}) {
  OneFBuildResult out;
  out.seed = seed;
  if (n < 2) throw std::invalid_argument("build_one_factorization_K2n: n too small");
  Rng rng(splitmix64(seed ^ 0x6f666b32ULL));
  double eps = cfg.eps > 0 ? cfg.eps : one_f_auto_eps(n);
  Graph base = build_join_base(n, eps);
  ExposureLedger master(base, p, seed);
  auto two = split_exposure(p);
  ExposureLedger led1 = master.subledger(two.p1, 1);
  ExposureLedger led2 = master.subledger(two.p2, 2);
  OneFReduceConfig rcfg = cfg.reduce;
  rcfg.eps = eps;
  out.reduction = one_f_reduce_with(base, led1, rng, rcfg);
  out.reduction.seed = seed;
  if (!out.reduction.ok) {
    out.failed_stage = "reduce:" + out.reduction.failed_stage;
    out.error = out.reduction.error;
    return out;
  }

  const Graph& h = out.reduction.residual;
  const auto& v1 = base.part(0);
  const auto& v2 = base.part(1);
  std::vector<int> free2 = base.nonspecial_of_part(3);
  int d = static_cast<int>(free2.size());
  Graph rh(2 * n);
  std::vector<int> ra(n), rb(n);
  for (int i = 0; i < n; ++i) ra[i] = i, rb[i] = n + i;
  rh.add_part("A", ra);
  rh.add_part("B", rb);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (h.has_edge(v1[i], v2[j])) rh.add_edge(i, n + j);
  ListAssignment la;
  la.n_colours = d;
  rh.for_each_edge([&](int i, int j) {
    std::vector<int> l;
    for (int s = 0; s < d; ++s)
      if (led2.expose(Triangle(v1[i], v2[j - n], free2[s]), 52)) l.push_back(s);
    la.lists.emplace(edge_key(i, j), std::move(l));
  });

  out.colouring = solve_list_edge_colouring(rh, la, cfg.budget, rng);
  if (out.colouring.outcome != SolveOutcome::success) {
    out.failed_stage = "list_solve";
    out.error = out.colouring.outcome == SolveOutcome::infeasible ? "infeasible lists"
                                                                  : "budget exhausted";
    return out;
  }

  // Reassemble: every triangle carries exactly one colour vertex; its two
  // clique vertices form a K_{2n} edge of that factor.
  std::vector<int> factor_of(base.vertex_count(), -1);
  int idx = 0;
  for (int c : base.part(2)) factor_of[c] = idx++;
  for (int c : base.part(3)) factor_of[c] = idx++;
  out.factors.matchings.assign(idx, {});
  auto place = [&](int u, int v, int c) {
    out.factors.matchings[factor_of[c]].emplace_back(u, v);
    out.colour_of[edge_key(u, v)] = factor_of[c];
  };
  for (const Triangle& t : out.reduction.triangles) {
    int u = -1, v = -1, c = -1;
    for (int x : {t.a, t.b, t.c})
      (base.part_of(x) <= 1 ? (u < 0 ? u : v) : c) = x;
    place(u, v, c);
  }
  for (const auto& [key, col] : out.colouring.colouring) {
    int i = static_cast<int>(key >> 32), j = static_cast<int>(key & 0xffffffffULL);
    place(v1[i], v2[j - n], free2[col]);
  }

  Graph k2n = build_complete(2 * n);
  out.report = validate_one_factorization(k2n, out.factors);
  if (!out.report.valid) {
    out.failed_stage = "validate";
    out.error = out.report.violations.empty() ? "invalid" : out.report.violations[0];
    return out;
  }
  out.ok = true;
  return out;
}

// Latin square of order n from a list assignment on K_{n,n} (n colours): the
// square is the colour matrix of the list-edge-colouring.
struct LatinBuildResult {
  bool ok = false;
  std::vector<std::vector<int>> square;
  ColouringResult colouring;
  ValidationReport report;
  std::string error;
};

inline LatinBuildResult build_latin_from_lists(int n, const ListAssignment& la,
                                               long long budget, Rng& rng) {
  LatinBuildResult out;
  Graph host = build_complete_bipartite(n);
  out.colouring = solve_list_edge_colouring(host, la, budget, rng);
  if (out.colouring.outcome != SolveOutcome::success) {
    out.error = out.colouring.outcome == SolveOutcome::infeasible ? "infeasible lists"
                                                                  : "budget exhausted";
    return out;
  }
  out.square.assign(n, std::vector<int>(n, -1));
  for (const auto& [key, c] : out.colouring.colouring) {
    int u = static_cast<int>(key >> 32), v = static_cast<int>(key & 0xffffffffULL);
    out.square[u][v - n] = c;
  }
  out.report = validate_latin_square(out.square);
  if (!out.report.valid) {
    out.error = out.report.violations.empty() ? "invalid" : out.report.violations[0];
    return out;
  }
  out.ok = true;
  return out;
}

}  // namespace designforge
