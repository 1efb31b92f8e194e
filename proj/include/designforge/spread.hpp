#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "designforge/factorize.hpp"
#include "designforge/flow.hpp"
#include "designforge/stats.hpp"
#include "designforge/vortex.hpp"

namespace designforge {

struct RegularizeResult {
  bool ok = false;
  Graph r;       // spanning regular graph containing the leftover
  int d_star = 0;
  // last infeasibility witness when no feasible target exists in range
  std::vector<int> a_prime, b_prime;
};

// Minimal spanning regular R >= L inside H u L: search the target degree
// upward from max leftover degree, taking the first feasible exact-degree
// complement from H.
inline RegularizeResult regularize(const Graph& h, const Graph& l) {
  if (h.part_count() != 2) throw std::invalid_argument("regularize: not bipartite");
  RegularizeResult res;
  int max_dl = l.max_degree();
  int hi = max_dl + h.max_degree();
  for (int d = max_dl; d <= hi; ++d) {
    DegreeSpec f(h.vertex_count());
    for (int v = 0; v < h.vertex_count(); ++v) f[v] = d - l.degree(v);
    auto ff = f_factor(h, f);
    if (ff.feasible) {
      res.ok = true;
      res.d_star = d;
      res.r = l;
      for (auto [u, v] : ff.edges) res.r.add_edge(u, v);
      return res;
    }
    res.a_prime = std::move(ff.a_prime);
    res.b_prime = std::move(ff.b_prime);
  }
  return res;
}

struct CoverDownResult {
  bool ok = false;
  std::vector<Graph> r;                          // regular parts, one per slot
  std::vector<int> d;                            // their degrees
  Graph leftover;                                // next level's inherited edges
  std::unordered_map<std::uint64_t, int> split;  // leftover-split labels (1-based)
  int failed_slot = -1;
};

// One cover-down step: split the current leftover uniformly over the next
// level's slots, regularize each slot, and pass un-absorbed next-level edges
// onward.
inline CoverDownResult cover_down_level(const std::vector<Graph>& h_next, const Graph& l,
                                        Rng& rng) {
  int m = static_cast<int>(h_next.size());
  CoverDownResult out;
  std::vector<Graph> lj;
  auto blank = [&]() {
    Graph g(l.vertex_count());
    for (int pi = 0; pi < l.part_count(); ++pi) g.add_part(l.part_name(pi), l.part(pi));
    return g;
  };
  for (int j = 0; j < m; ++j) lj.push_back(blank());
  l.for_each_edge([&](int u, int v) {
    int j = static_cast<int>(rng.below(m));
    out.split[edge_key(u, v)] = j + 1;
    lj[j].add_edge(u, v);
  });
  out.leftover = blank();
  for (int j = 0; j < m; ++j) {
    auto reg = regularize(h_next[j], lj[j]);
    if (!reg.ok) {
      out.failed_slot = j;
      return out;
    }
    out.d.push_back(reg.d_star);
    h_next[j].for_each_edge([&](int u, int v) {
      if (!reg.r.has_edge(u, v)) out.leftover.add_edge(u, v);
    });
    out.r.push_back(std::move(reg.r));
  }
  out.ok = true;
  return out;
}

enum class Provenance { own_level, inherited };

struct RegularDecomposition {
  int ell = 1;
  std::vector<Graph> parts;    // indexed by label - 1
  std::vector<int> degrees;    // per part
  // per edge: final label and how it got there
  std::unordered_map<std::uint64_t, std::pair<int, Provenance>> provenance;
};

struct SpreadTrace {
  int ell = 1;
  double p = 1.0;
  std::vector<std::pair<int, int>> edge_order;
  std::vector<int> base_labels;  // vortex labels, aligned with edge_order
  // split labels per level transition i (key: edge, value: slot 1-based)
  std::vector<std::unordered_map<std::uint64_t, int>> split_labels;
  std::vector<int> level_retries;  // per level transition
  int sample_retries = 0;
};

struct DecomposeConfig {
  int level_retry_budget = 5;
  int sample_retry_budget = 5;
};

struct DecomposeResult {
  bool ok = false;
  RegularDecomposition dec;
  SpreadTrace trace;
  std::string error;
};

inline DecomposeResult decompose_regular(const Graph& g, const VortexDecomposition& vx,
                                         Rng& rng, const DecomposeConfig& cfg = {}) {
  DecomposeResult out;
  int ell = vx.ell;
  out.trace.ell = ell;
  out.trace.p = std::ldexp(1.0, -ell);
  out.trace.edge_order = vx.edge_order;
  out.trace.base_labels = vx.labels;
  out.dec.ell = ell;
  out.dec.parts.assign(vx.part_count(), Graph());
  out.dec.degrees.assign(vx.part_count(), 0);

  // Base level: R_{1,j} empty; everything at level 1 is leftover.
  Graph leftover(g.vertex_count());
  for (int pi = 0; pi < g.part_count(); ++pi)
    leftover.add_part(g.part_name(pi), g.part(pi));
  for (std::size_t e = 0; e < vx.edge_order.size(); ++e) {
    auto s = VortexDecomposition::slot_of(ell, vx.labels[e]);
    if (s.i == 1) leftover.add_edge(vx.edge_order[e].first, vx.edge_order[e].second);
  }
  for (int j = 1; j <= (1 << (ell - 1)); ++j) {
    int label = VortexDecomposition::label_of(ell, {1, j});
    out.dec.parts[label - 1] = Graph(g.vertex_count());
    out.dec.degrees[label - 1] = 0;
  }

  for (int i = 2; i < ell; ++i) {
    int m = 1 << (ell - i);
    std::vector<Graph> h_next;
    for (int j = 1; j <= m; ++j) h_next.push_back(vortex_part(vx, {i, j}));
    int retries = 0;
    CoverDownResult cd;
    for (;;) {
      Rng sub = rng.substream((static_cast<std::uint64_t>(i) << 20) + retries);
      cd = cover_down_level(h_next, leftover, sub);
      if (cd.ok) break;
      if (++retries > cfg.level_retry_budget) {
        out.error = "regularize failed at level " + std::to_string(i) + " slot " +
                    std::to_string(cd.failed_slot + 1);
        out.trace.level_retries.push_back(retries);
        return out;
      }
    }
    out.trace.level_retries.push_back(retries);
    out.trace.split_labels.push_back(cd.split);
    for (int j = 1; j <= m; ++j) {
      int label = VortexDecomposition::label_of(ell, {i, j});
      out.dec.parts[label - 1] = std::move(cd.r[j - 1]);
      out.dec.degrees[label - 1] = cd.d[j - 1];
    }
    leftover = std::move(cd.leftover);
  }

  // Absorber: the single level-ell part plus the final leftover; regular by
  // complementation inside regular G, but verified, never assumed.
  if (ell >= 2) {
    Graph absorber = vortex_part(vx, {ell, 1});
    leftover.for_each_edge([&](int u, int v) { absorber.add_edge(u, v); });
    int d0 = absorber.degree(0);
    for (int v = 0; v < absorber.vertex_count(); ++v)
      if (absorber.degree(v) != d0) {
        out.error = "absorber not regular (invariant breach)";
        return out;
      }
    int label = VortexDecomposition::label_of(ell, {ell, 1});
    out.dec.parts[label - 1] = std::move(absorber);
    out.dec.degrees[label - 1] = d0;
  } else {
    // Degenerate vortex: single part = G.
    out.dec.parts[0] = g;
    out.dec.degrees[0] = g.vertex_count() ? g.degree(0) : 0;
  }

  // Provenance tags.
  for (std::size_t e = 0; e < vx.edge_order.size(); ++e) {
    auto [u, v] = vx.edge_order[e];
    auto key = edge_key(u, v);
    auto s0 = VortexDecomposition::slot_of(ell, vx.labels[e]);
    int own_label = vx.labels[e];
    if (out.dec.parts[own_label - 1].vertex_count() > 0 &&
        out.dec.parts[own_label - 1].has_edge(u, v)) {
      out.dec.provenance[key] = {own_label, Provenance::own_level};
    } else {
      // Must sit one level down, in the slot its split label chose.
      int i = s0.i;
      int next_label;
      if (i + 1 >= ell) {
        next_label = VortexDecomposition::label_of(ell, {ell, 1});
      } else {
        // Transition into level i+1 is stored at index (i+1) - 2.
        const auto& split = out.trace.split_labels[i - 1];
        auto it = split.find(key);
        if (it == split.end()) {
          out.error = "missing split label for an inherited edge";
          return out;
        }
        next_label = VortexDecomposition::label_of(ell, {i + 1, it->second});
      }
      if (!out.dec.parts[next_label - 1].has_edge(u, v)) {
        out.error = "provenance breach: edge skipped a level";
        return out;
      }
      out.dec.provenance[key] = {next_label, Provenance::inherited};
    }
  }
  out.ok = true;
  return out;
}

struct SpreadSample {
  bool ok = false;
  OneFactorization factorization;
  RegularDecomposition dec;
  SpreadTrace trace;
  // matching index ranges per part label: (first index, count) into the
  // canonical (i,j,k) concatenation
  std::vector<std::pair<int, int>> part_ranges;
  std::string error;
};

struct SpreadConfig {
  // Spread constant C. The construction needs a generously large C: the
  // cover-down absorbs leftover degree fluctuations of order sqrt(pn log n)
  // into fresh parts of degree ~pn, which only works out for pn well above
  // log n. The default keeps every stage feasible down to small n (at the
  // cost of a shallower vortex there); forcing deeper vortices at small n
  // makes the f-factors infeasible.
  double c = 3.5;
  DecomposeConfig decompose;
  bool factorize = true;  // false: stop after the regular decomposition
};

inline SpreadSample sample_spread_factorization(const Graph& g, const SpreadConfig& cfg,
                                                Rng& rng) {
  if (g.part_count() != 2 || g.part(0).size() != g.part(1).size())
    throw std::invalid_argument("sample_spread_factorization: need bipartite, equal parts");
  int n = static_cast<int>(g.part(0).size());
  auto vp = vortex_params(n, cfg.c);
  SpreadSample out;
  for (int attempt = 0; attempt <= cfg.decompose.sample_retry_budget; ++attempt) {
    Rng sub = rng.substream(0xdecull * 131 + attempt);
    auto vx = random_vortex(g, vp.ell, sub);
    auto dr = decompose_regular(g, vx, sub, cfg.decompose);
    if (!dr.ok) {
      out.error = dr.error;
      continue;
    }
    dr.trace.sample_retries = attempt;
    out.dec = std::move(dr.dec);
    out.trace = std::move(dr.trace);
    if (cfg.factorize) {
      out.factorization.matchings.clear();
      out.part_ranges.clear();
      bool fine = true;
      // Canonical order: levels i ascending, slots j ascending, k within.
      for (int i = 1; i <= vp.ell && fine; ++i)
        for (int j = 1; j <= (1 << (vp.ell - i)) && fine; ++j) {
          int label = VortexDecomposition::label_of(vp.ell, {i, j});
          const Graph& part = out.dec.parts[label - 1];
          int first = static_cast<int>(out.factorization.matchings.size());
          if (out.dec.degrees[label - 1] > 0) {
            try {
              auto of = one_factorize(part, &sub);
              for (auto& m : of.matchings) out.factorization.matchings.push_back(std::move(m));
            } catch (const std::exception& e) {
              out.error = e.what();
              fine = false;
              break;
            }
          }
          out.part_ranges.emplace_back(first,
                                       static_cast<int>(out.factorization.matchings.size()) - first);
        }
      if (!fine) continue;
    }
    out.ok = true;
    return out;
  }
  return out;
}

// ---- spreadness estimation ----

struct SpreadProbe {
  // Event: every listed edge lies in E(R_{slot}); when k >= 0, additionally
  // in the k-th matching of that part (canonical order within the part).
  struct Item {
    int u, v;
    LevelSlot slot;
    int k = -1;
  };
  std::vector<Item> items;
};

struct ProbeReport {
  std::string indices;
  int total_size = 0;
  double empirical = 0.0;
  double wilson_lo = 0.0, wilson_hi = 0.0;
  double bound = 1.0;    // (4p)^{total size}
  double q_bound = 1.0;  // (8 C ln n / n)^{total size}
  bool pass = false;
};

struct SpreadnessReport {
  int n = 0;
  double c = 0.0;
  int ell = 0;
  double p = 0.0;
  long long trials = 0;
  double retry_rate = 0.0;
  std::vector<ProbeReport> probes;
  bool all_pass = true;
};

inline SpreadnessReport estimate_spreadness(const Graph& g, const SpreadConfig& cfg,
                                            const std::vector<SpreadProbe>& probes,
                                            long long trials, Rng& rng) {
  int n = static_cast<int>(g.part(0).size());
  auto vp = vortex_params(n, cfg.c);
  bool need_matchings = false;
  for (const auto& pr : probes)
    for (const auto& it : pr.items)
      if (it.k >= 0) need_matchings = true;
  SpreadConfig run_cfg = cfg;
  run_cfg.factorize = need_matchings;

  std::vector<long long> hits(probes.size(), 0);
  long long retried = 0;
  for (long long t = 0; t < trials; ++t) {
    Rng sub = rng.substream(0x5eedULL * 1000003 + t);
    auto s = sample_spread_factorization(g, run_cfg, sub);
    if (!s.ok) {
      // failed sample after budget: count as a retry-heavy miss for all probes
      ++retried;
      continue;
    }
    if (s.trace.sample_retries > 0) ++retried;
    for (std::size_t pi = 0; pi < probes.size(); ++pi) {
      bool all = true;
      for (const auto& it : probes[pi].items) {
        int label = VortexDecomposition::label_of(vp.ell, it.slot);
        const Graph& part = s.dec.parts[label - 1];
        if (part.vertex_count() == 0 || !part.has_edge(it.u, it.v)) {
          all = false;
          break;
        }
        if (it.k >= 0) {
          // Locate the part's matching range in canonical order.
          int ordinal = 0;
          for (int i = 1; i <= vp.ell; ++i)
            for (int j = 1; j <= (1 << (vp.ell - i)); ++j) {
              if (VortexDecomposition::label_of(vp.ell, {i, j}) == label) goto found;
              ++ordinal;
            }
        found:
          auto [first, count] = s.part_ranges[ordinal];
          if (it.k >= count) {
            all = false;
            break;
          }
          const auto& m = s.factorization.matchings[first + it.k];
          bool in = false;
          for (auto [u, v] : m)
            if (edge_key(u, v) == edge_key(it.u, it.v)) in = true;
          if (!in) {
            all = false;
            break;
          }
        }
      }
      if (all) ++hits[pi];
    }
  }

  SpreadnessReport rep;
  rep.n = n;
  rep.c = cfg.c;
  rep.ell = vp.ell;
  rep.p = vp.p;
  rep.trials = trials;
  rep.retry_rate = trials ? static_cast<double>(retried) / trials : 0.0;
  double q = 8.0 * cfg.c * std::log(static_cast<double>(n)) / n;
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    ProbeReport pr;
    int size = 0;
    std::string idx;
    for (const auto& it : probes[pi].items) {
      ++size;
      idx += "(" + std::to_string(it.slot.i) + "," + std::to_string(it.slot.j) +
             (it.k >= 0 ? "," + std::to_string(it.k) : "") + ")";
    }
    pr.indices = idx;
    pr.total_size = size;
    pr.empirical = trials ? static_cast<double>(hits[pi]) / trials : 0.0;
    auto [lo, hi] = wilson_interval(hits[pi], trials);
    pr.wilson_lo = lo;
    pr.wilson_hi = hi;
    pr.bound = std::pow(4.0 * vp.p, size);
    pr.q_bound = std::pow(q, size);
    pr.pass = pr.empirical <= pr.bound + 3.0 * proportion_sigma(hits[pi], trials);
    if (!pr.pass) rep.all_pass = false;
    rep.probes.push_back(std::move(pr));
  }
  return rep;
}

}  // namespace designforge
