#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "designforge/graph.hpp"
#include "designforge/lists.hpp"
#include "designforge/rng.hpp"

namespace designforge {

struct VortexParams {
  int ell = 1;
  double p = 0.5;
  bool degenerate = false;  // even ell = 1 misses the scale band
};

// Largest ell with 2^-ell >= C ln n / n; p = 2^-ell. The scale band uses the
// natural log; the level structure is base-2.
inline VortexParams vortex_params(int n, double c) {
  if (n < 2 || c <= 0.0) throw std::invalid_argument("vortex_params: bad n or C");
  double floor_p = c * std::log(static_cast<double>(n)) / n;
  VortexParams out;
  if (0.5 < floor_p) {
    out.ell = 1;
    out.p = 0.5;
    out.degenerate = true;
    return out;
  }
  int ell = 1;
  while (std::ldexp(1.0, -(ell + 1)) >= floor_p) ++ell;
  out.ell = ell;
  out.p = std::ldexp(1.0, -ell);
  return out;
}

// Level/slot index pair: levels i in [1..ell], slots j in [1..2^(ell-i)].
struct LevelSlot {
  int i = 0, j = 0;
  bool operator==(const LevelSlot& o) const { return i == o.i && j == o.j; }
};

// Uniform random decomposition of E(G) into 2^ell - 1 indexed spanning
// parts, stored as one i.i.d. label per edge. The label-to-index map is
// label = 2^(ell-i) + j - 1.
struct VortexDecomposition {
  const Graph* host = nullptr;
  int ell = 1;
  std::vector<std::pair<int, int>> edge_order;  // canonical (u < v) order
  std::vector<int> labels;                      // per edge, in [1, 2^ell - 1]
  std::unordered_map<std::uint64_t, int> edge_index;

  int part_count() const { return (1 << ell) - 1; }

  static int label_of(int ell, LevelSlot s) { return (1 << (ell - s.i)) + s.j - 1; }

  static LevelSlot slot_of(int ell, int label) {
    int h = 31 - __builtin_clz(label);  // floor(log2 label)
    LevelSlot s;
    s.i = ell - h;
    s.j = label - (1 << h) + 1;
    return s;
  }

  LevelSlot slot_of_edge(int u, int v) const {
    return slot_of(ell, labels[edge_index.at(edge_key(u, v))]);
  }
};

inline VortexDecomposition random_vortex(const Graph& g, int ell, Rng& rng) {
  if (ell < 1) throw std::invalid_argument("random_vortex: ell < 1");
  VortexDecomposition out;
  out.host = &g;
  out.ell = ell;
  out.edge_order = g.edges();
  out.labels.resize(out.edge_order.size());
  int m = (1 << ell) - 1;
  for (std::size_t e = 0; e < out.edge_order.size(); ++e) {
    out.labels[e] = 1 + static_cast<int>(rng.below(m));
    out.edge_index.emplace(
        edge_key(out.edge_order[e].first, out.edge_order[e].second),
        static_cast<int>(e));
  }
  return out;
}

// Materialize one part H_{i,j} as a spanning subgraph with the host's parts.
inline Graph vortex_part(const VortexDecomposition& vx, LevelSlot s) {
  const Graph& g = *vx.host;
  Graph out(g.vertex_count());
  for (int pi = 0; pi < g.part_count(); ++pi)
    out.add_part(g.part_name(pi), g.part(pi));
  int want = VortexDecomposition::label_of(vx.ell, s);
  for (std::size_t e = 0; e < vx.edge_order.size(); ++e)
    if (vx.labels[e] == want)
      out.add_edge(vx.edge_order[e].first, vx.edge_order[e].second);
  return out;
}

struct QRWitness {
  int condition = 0;  // 1..4
  std::string detail;
};

struct QRReport {
  bool qr1 = false;
  bool qr234 = false;        // at the best delta' on the grid
  double delta = 0.0;        // calibration choice, not derived from the source material
  double delta_prime = 0.0;  // grid value at which QR2-QR4 held
  bool exact = false;
  std::vector<QRWitness> witnesses;
  bool pass() const { return qr1 && qr234; }
};

struct QRCheckConfig {
  double delta = 0.3;  // flagged: calibration default
  bool exact = false;  // exact subset enumeration, sides <= 14 only
  int trials = 2000;   // sampled falsification budget per condition
};

namespace detail {

inline bool qr234_exact(const Graph& h, double p, double delta, double dprime,
                        const std::vector<int>& a, const std::vector<int>& b,
                        QRWitness* w) {
  int n = static_cast<int>(a.size());
  int na = static_cast<int>(a.size()), nb = static_cast<int>(b.size());
  for (std::uint64_t xm = 1; xm < (1ULL << na); ++xm) {
    Bitset x(h.vertex_count());
    int xs = 0;
    for (int i = 0; i < na; ++i)
      if (xm >> i & 1) {
        x.set(a[i]);
        ++xs;
      }
    for (std::uint64_t ym = 1; ym < (1ULL << nb); ++ym) {
      Bitset y(h.vertex_count());
      int ys = 0;
      for (int i = 0; i < nb; ++i)
        if (ym >> i & 1) {
          y.set(b[i]);
          ++ys;
        }
      double exy = static_cast<double>(h.edges_between(x, y));
      if (xs >= dprime * n && ys >= dprime * n && exy < (1 - delta) * p * xs * ys) {
        if (w) *w = {2, "|X|=" + std::to_string(xs) + " |Y|=" + std::to_string(ys)};
        return false;
      }
      if (xs < dprime * n && xs > ys / 2.0 && exy > p * n * xs / 3.0) {
        if (w) *w = {3, "|X|=" + std::to_string(xs) + " |Y|=" + std::to_string(ys)};
        return false;
      }
      if (ys < dprime * n && ys > xs / 2.0 && exy > p * n * ys / 3.0) {
        if (w) *w = {4, "|X|=" + std::to_string(xs) + " |Y|=" + std::to_string(ys)};
        return false;
      }
    }
  }
  return true;
}

inline Bitset random_subset(const std::vector<int>& pool, int size, int universe, Rng& rng) {
  std::vector<int> idx(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) idx[i] = static_cast<int>(i);
  rng.shuffle(idx);
  Bitset out(universe);
  for (int i = 0; i < size; ++i) out.set(pool[idx[i]]);
  return out;
}

inline bool qr234_sampled(const Graph& h, double p, double delta, double dprime,
                          const std::vector<int>& a, const std::vector<int>& b,
                          int trials, Rng& rng, QRWitness* w) {
  int n = static_cast<int>(a.size());
  int dn = static_cast<int>(std::ceil(dprime * n));
  // QR2 at the boundary size regime (violations concentrate near |X| = d'n).
  for (int t = 0; t < trials; ++t) {
    int xs = std::min(n, dn + static_cast<int>(rng.below(std::max(1, n / 8))));
    int ys = std::min(n, dn + static_cast<int>(rng.below(std::max(1, n / 8))));
    if (xs < 1 || ys < 1) continue;
    auto x = random_subset(a, xs, h.vertex_count(), rng);
    auto y = random_subset(b, ys, h.vertex_count(), rng);
    if (static_cast<double>(h.edges_between(x, y)) < (1 - delta) * p * xs * ys) {
      if (w) *w = {2, "sampled |X|=" + std::to_string(xs) + " |Y|=" + std::to_string(ys)};
      return false;
    }
  }
  // QR3 / QR4 small-side regimes.
  for (int t = 0; t < trials; ++t) {
    int xs = 1 + static_cast<int>(rng.below(std::max(1, dn)));
    if (xs >= dn && dn > 0) xs = dn - 1;
    if (xs < 1) break;
    int ymax = std::max(1, 2 * xs - 1);
    int ys = 1 + static_cast<int>(rng.below(std::min(ymax, n)));
    auto x = random_subset(a, xs, h.vertex_count(), rng);
    auto y = random_subset(b, ys, h.vertex_count(), rng);
    double exy = static_cast<double>(h.edges_between(x, y));
    if (xs > ys / 2.0 && exy > p * n * xs / 3.0) {
      if (w) *w = {3, "sampled |X|=" + std::to_string(xs) + " |Y|=" + std::to_string(ys)};
      return false;
    }
    if (ys < dn && ys > xs / 2.0 && exy > p * n * ys / 3.0) {
      if (w) *w = {4, "sampled |X|=" + std::to_string(xs) + " |Y|=" + std::to_string(ys)};
      return false;
    }
  }
  return true;
}

}  // namespace detail

// Quasirandomness diagnostics for one vortex part (bipartite, equal sides).
// QR1 is a full degree scan; QR2-QR4 are exact for tiny sides, otherwise
// sampled falsification; delta' is searched over {delta/8, delta/4,
// delta/2, delta}.
inline QRReport qr_check(const Graph& h, double p, const QRCheckConfig& cfg, Rng& rng) {
  if (h.part_count() != 2) throw std::invalid_argument("qr_check: not bipartite");
  const auto& a = h.part(0);
  const auto& b = h.part(1);
  int n = static_cast<int>(a.size());
  QRReport r;
  r.delta = cfg.delta;
  r.exact = cfg.exact;
  r.qr1 = true;
  for (int v = 0; v < h.vertex_count(); ++v) {
    double d = h.degree(v);
    if (d < (1 - cfg.delta) * p * n || d > (1 + cfg.delta) * p * n) {
      r.qr1 = false;
      r.witnesses.push_back({1, "vertex " + std::to_string(v) + " degree " +
                                    std::to_string(h.degree(v))});
      break;
    }
  }
  if (cfg.exact && (a.size() > 14 || b.size() > 14))
    throw std::invalid_argument("qr_check: exact mode needs sides <= 14");
  double grid[4] = {cfg.delta / 8, cfg.delta / 4, cfg.delta / 2, cfg.delta};
  for (double dp : grid) {
    QRWitness w;
    bool ok = cfg.exact
                  ? detail::qr234_exact(h, p, cfg.delta, dp, a, b, &w)
                  : detail::qr234_sampled(h, p, cfg.delta, dp, a, b, cfg.trials, rng, &w);
    if (ok) {
      r.qr234 = true;
      r.delta_prime = dp;
      return r;
    }
    if (dp == cfg.delta) r.witnesses.push_back(w);
  }
  return r;
}

}  // namespace designforge
