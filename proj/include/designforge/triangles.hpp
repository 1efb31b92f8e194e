#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "designforge/graph.hpp"
#include "designforge/rng.hpp"

namespace designforge {

struct Triangle {
  // Canonically sorted: a < b < c.
  int a, b, c;

  Triangle() : a(-1), b(-1), c(-1) {}
  Triangle(int x, int y, int z) {
    int v[3] = {x, y, z};
    std::sort(v, v + 3);
    a = v[0];
    b = v[1];
    c = v[2];
    if (a == b || b == c) throw std::invalid_argument("degenerate triangle");
  }

  bool operator==(const Triangle& o) const {
    return a == o.a && b == o.b && c == o.c;
  }
  bool operator<(const Triangle& o) const {
    if (a != o.a) return a < o.a;
    if (b != o.b) return b < o.b;
    return c < o.c;
  }

  std::uint64_t key() const {
    return (static_cast<std::uint64_t>(a) << 42) |
           (static_cast<std::uint64_t>(b) << 21) |
           static_cast<std::uint64_t>(c);
  }

  std::array<std::pair<int, int>, 3> edges() const {
    return {{{a, b}, {a, c}, {b, c}}};
  }

  bool contains(int v) const { return v == a || v == b || v == c; }

  // The vertex other than u and v.
  int third(int u, int v) const {
    if (!contains(u) || !contains(v)) throw std::invalid_argument("not in triangle");
    return a + b + c - u - v;
  }
};

// One-shot Bernoulli(p) exposure of triangles. Draws are keyed by the
// canonical triangle id and the ledger seed, so they are pure functions:
// the same triangle always returns the same answer, independent of query
// order. Class ids tag which pipeline family first exposed a triangle; a
// second exposure from a different class is recorded as a discipline
// violation (diagnostic, queries still answer consistently).
class ExposureLedger {
 public:
  ExposureLedger(const Graph& host, double p, std::uint64_t seed)
      : host_(&host), p_(p), seed_(splitmix64(seed ^ 0x74726961ULL)) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("p out of [0,1]");
  }

  double rate() const { return p_; }
  const Graph& host() const { return *host_; }

  bool in_universe(const Triangle& t) const {
    if (t.a < 0 || t.c >= host_->vertex_count()) return false;
    return host_->has_edge(t.a, t.b) && host_->has_edge(t.a, t.c) &&
           host_->has_edge(t.b, t.c);
  }

  // class_id < 0 means "unclassified".
  bool expose(const Triangle& t, int class_id = -1) {
    if (!in_universe(t)) throw std::invalid_argument("triangle outside universe");
    bool present = keyed_bernoulli(seed_, t.key(), p_);
    auto it = record_.find(t.key());
    if (it == record_.end()) {
      record_.emplace(t.key(), class_id);
    } else if (class_id >= 0 && it->second >= 0 && it->second != class_id) {
      ++class_violations_;
    }
    return present;
  }

  // Peek without recording (used by validators re-checking provenance).
  bool would_be_present(const Triangle& t) const {
    return in_universe(t) && keyed_bernoulli(seed_, t.key(), p_);
  }

  std::size_t exposed_count() const { return record_.size(); }
  long long class_violations() const { return class_violations_; }

  // Independent sub-ledger (fresh keyed stream) at rate q.
  ExposureLedger subledger(double q, std::uint64_t tag) const {
    ExposureLedger out(*host_, q, splitmix64(seed_ ^ splitmix64(tag)));
    return out;
  }

 private:
  const Graph* host_;
  double p_;
  std::uint64_t seed_;
  std::unordered_map<std::uint64_t, int> record_;
  long long class_violations_ = 0;
};

// Optional part-pattern restriction for triangle enumeration: a multiset of
// three part indices (e.g. {0,1,2} = one vertex in each of three parts,
// {0,0,1} = an edge inside part 0 plus a vertex in part 1).
struct PartPattern {
  std::array<int, 3> parts;  // sorted
  PartPattern(int x, int y, int z) {
    parts = {x, y, z};
    std::sort(parts.begin(), parts.end());
  }
};

inline bool matches_pattern(const Graph& g, const Triangle& t, const PartPattern& pat) {
  std::array<int, 3> got = {g.part_of(t.a), g.part_of(t.b), g.part_of(t.c)};
  std::sort(got.begin(), got.end());
  return got == pat.parts;
}

inline std::vector<Triangle> enumerate_triangles(const Graph& g,
                                                 const PartPattern* pat = nullptr) {
  std::vector<Triangle> out;
  Bitset tail(g.vertex_count());
  g.for_each_edge([&](int u, int v) {
    // w > v keeps each triangle once (u < v < w).
    g.row(u).for_each([&](int w) {
      if (w > v && g.has_edge(v, w)) {
        Triangle t(u, v, w);
        if (!pat || matches_pattern(g, t, *pat)) out.push_back(t);
      }
    });
  });
  std::sort(out.begin(), out.end());
  return out;
}

// All triangles through a fixed vertex.
inline std::vector<Triangle> enumerate_triangles_at(const Graph& g, int v) {
  std::vector<Triangle> out;
  auto nb = g.neighbors(v);
  for (std::size_t i = 0; i < nb.size(); ++i)
    for (std::size_t j = i + 1; j < nb.size(); ++j)
      if (g.has_edge(nb[i], nb[j])) out.emplace_back(v, nb[i], nb[j]);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace designforge
