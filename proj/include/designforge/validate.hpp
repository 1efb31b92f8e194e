#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "designforge/graph.hpp"
#include "designforge/lists.hpp"
#include "designforge/triangles.hpp"

namespace designforge {

struct ValidationReport {
  bool valid = true;
  std::vector<std::string> violations;

  void fail(const std::string& msg) {
    valid = false;
    if (violations.size() < 50) violations.push_back(msg);
  }
};

using Matching = std::vector<std::pair<int, int>>;

struct OneFactorization {
  std::vector<Matching> matchings;
};

inline ValidationReport validate_one_factorization(const Graph& host,
                                                   const OneFactorization& of) {
  ValidationReport r;
  int n = host.vertex_count();
  std::unordered_map<std::uint64_t, int> seen;
  for (std::size_t m = 0; m < of.matchings.size(); ++m) {
    std::vector<char> hit(n, 0);
    for (auto [u, v] : of.matchings[m]) {
      std::ostringstream e;
      e << "(" << u << "," << v << ")";
      if (!host.has_edge(u, v)) r.fail("matching " + std::to_string(m) + ": non-edge " + e.str());
      if (hit[u] || hit[v]) r.fail("matching " + std::to_string(m) + ": vertex reused at " + e.str());
      hit[u] = hit[v] = 1;
      auto [it, fresh] = seen.emplace(edge_key(u, v), static_cast<int>(m));
      if (!fresh)
        r.fail("edge " + e.str() + " in matchings " + std::to_string(it->second) +
               " and " + std::to_string(m));
    }
    for (int v = 0; v < n; ++v)
      if (!hit[v]) {
        r.fail("matching " + std::to_string(m) + ": vertex " + std::to_string(v) +
               " unsaturated");
        break;
      }
  }
  if (static_cast<long long>(seen.size()) != host.edge_count())
    r.fail("union covers " + std::to_string(seen.size()) + " of " +
           std::to_string(host.edge_count()) + " edges");
  return r;
}

inline ValidationReport validate_triangle_decomposition(const Graph& host,
                                                        const std::vector<Triangle>& ts) {
  ValidationReport r;
  std::unordered_map<std::uint64_t, int> cover;
  for (const auto& t : ts) {
    for (auto [u, v] : t.edges()) {
      if (!host.has_edge(u, v)) {
        r.fail("triangle uses non-edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
        continue;
      }
      if (++cover[edge_key(u, v)] > 1)
        r.fail("edge (" + std::to_string(u) + "," + std::to_string(v) +
               ") covered more than once");
    }
  }
  if (static_cast<long long>(cover.size()) != host.edge_count())
    r.fail("covered " + std::to_string(cover.size()) + " of " +
           std::to_string(host.edge_count()) + " edges");
  return r;
}

// Steiner triple system on points 0..n-1: every pair in exactly one triple.
inline ValidationReport validate_sts(int n, const std::vector<Triangle>& ts) {
  ValidationReport r;
  std::map<std::pair<int, int>, int> cover;
  for (const auto& t : ts) {
    if (t.a < 0 || t.c >= n) {
      r.fail("point out of range in a triple");
      continue;
    }
    for (auto [u, v] : t.edges())
      if (++cover[{u, v}] > 1)
        r.fail("pair (" + std::to_string(u) + "," + std::to_string(v) +
               ") in more than one triple");
  }
  long long want = static_cast<long long>(n) * (n - 1) / 2;
  if (static_cast<long long>(cover.size()) != want)
    r.fail("covered " + std::to_string(cover.size()) + " of " + std::to_string(want) +
           " pairs");
  return r;
}

// Row-major n x n matrix over symbols 0..n-1.
inline ValidationReport validate_latin_square(const std::vector<std::vector<int>>& sq) {
  ValidationReport r;
  int n = static_cast<int>(sq.size());
  for (int i = 0; i < n; ++i)
    if (static_cast<int>(sq[i].size()) != n) {
      r.fail("row " + std::to_string(i) + " has wrong length");
      return r;
    }
  for (int i = 0; i < n; ++i) {
    std::vector<int> row_cnt(n, 0), col_cnt(n, 0);
    for (int j = 0; j < n; ++j) {
      int a = sq[i][j], b = sq[j][i];
      if (a < 0 || a >= n || b < 0 || b >= n) {
        r.fail("symbol out of range");
        return r;
      }
      if (++row_cnt[a] > 1) r.fail("row " + std::to_string(i) + " repeats symbol " + std::to_string(a));
      if (++col_cnt[b] > 1) r.fail("col " + std::to_string(i) + " repeats symbol " + std::to_string(b));
    }
  }
  return r;
}

// Proper edge colouring given as edge -> colour; optionally constrained to
// lists and/or required to be total over E(host).
inline ValidationReport validate_proper_edge_colouring(
    const Graph& host, const std::unordered_map<std::uint64_t, int>& colour,
    int k, const ListAssignment* lists = nullptr, bool require_total = true) {
  ValidationReport r;
  int n = host.vertex_count();
  // per-vertex seen-colour sets
  std::vector<std::vector<char>> seen(n, std::vector<char>(k, 0));
  long long coloured = 0;
  host.for_each_edge([&](int u, int v) {
    auto it = colour.find(edge_key(u, v));
    if (it == colour.end()) {
      if (require_total)
        r.fail("edge (" + std::to_string(u) + "," + std::to_string(v) + ") uncoloured");
      return;
    }
    ++coloured;
    int c = it->second;
    if (c < 0 || c >= k) {
      r.fail("colour out of range on (" + std::to_string(u) + "," + std::to_string(v) + ")");
      return;
    }
    if (lists && !lists->allows(u, v, c))
      r.fail("colour " + std::to_string(c) + " not in list of (" + std::to_string(u) +
             "," + std::to_string(v) + ")");
    if (seen[u][c]) r.fail("vertex " + std::to_string(u) + " sees colour " + std::to_string(c) + " twice");
    if (seen[v][c]) r.fail("vertex " + std::to_string(v) + " sees colour " + std::to_string(c) + " twice");
    seen[u][c] = seen[v][c] = 1;
  });
  (void)coloured;
  return r;
}

}  // namespace designforge
