#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace designforge {

// Fixed-size dynamic bitset used for adjacency rows and vertex sets.
class Bitset {
 public:
  Bitset() : n_(0) {}
  explicit Bitset(int n) : n_(n), w_((n + 63) / 64, 0) {}

  int size() const { return n_; }

  bool test(int i) const { return (w_[i >> 6] >> (i & 63)) & 1; }
  void set(int i) { w_[i >> 6] |= 1ULL << (i & 63); }
  void reset(int i) { w_[i >> 6] &= ~(1ULL << (i & 63)); }
  void clear() { std::fill(w_.begin(), w_.end(), 0); }

  int count() const {
    int c = 0;
    for (auto x : w_) c += __builtin_popcountll(x);
    return c;
  }

  int intersect_count(const Bitset& o) const {
    int c = 0;
    for (std::size_t i = 0; i < w_.size(); ++i)
      c += __builtin_popcountll(w_[i] & o.w_[i]);
    return c;
  }

  // Visit indices of set bits.
  template <typename F>
  void for_each(F f) const {
    for (std::size_t i = 0; i < w_.size(); ++i) {
      std::uint64_t x = w_[i];
      while (x) {
        int b = __builtin_ctzll(x);
        f(static_cast<int>(i * 64 + b));
        x &= x - 1;
      }
    }
  }

  std::vector<int> to_vector() const {
    std::vector<int> out;
    for_each([&](int i) { out.push_back(i); });
    return out;
  }

  const std::uint64_t* words() const { return w_.data(); }
  std::size_t word_count() const { return w_.size(); }

 private:
  int n_;
  std::vector<std::uint64_t> w_;
};

// Simple undirected graph: adjacency-matrix bitset rows (O(1) membership,
// fast common-neighbourhood counting) plus maintained degrees. Optional
// labeled vertex parts; an extra per-vertex marker distinguishes special
// subsets (the reserved slice of the third part in the triple-system base,
// the reserved colour slice in the join base).
class Graph {
 public:
  Graph() : n_(0), edges_(0) {}
  explicit Graph(int n)
      : n_(n), edges_(0), adj_(n, Bitset(n)), deg_(n, 0), part_of_(n, -1),
        special_(n, 0) {}

  int vertex_count() const { return n_; }
  long long edge_count() const { return edges_; }

  bool has_edge(int u, int v) const { return adj_[u].test(v); }
  int degree(int v) const { return deg_[v]; }
  const Bitset& row(int v) const { return adj_[v]; }

  void add_edge(int u, int v) {
    if (u == v) throw std::invalid_argument("loop edge");
    if (adj_[u].test(v)) throw std::invalid_argument("parallel edge");
    adj_[u].set(v);
    adj_[v].set(u);
    ++deg_[u];
    ++deg_[v];
    ++edges_;
  }

  void remove_edge(int u, int v) {
    if (!adj_[u].test(v)) throw std::invalid_argument("missing edge");
    adj_[u].reset(v);
    adj_[v].reset(u);
    --deg_[u];
    --deg_[v];
    --edges_;
  }

  std::vector<int> neighbors(int v) const { return adj_[v].to_vector(); }

  template <typename F>
  void for_each_neighbor(int v, F f) const {
    adj_[v].for_each(f);
  }

  // Visit each edge once, u < v.
  template <typename F>
  void for_each_edge(F f) const {
    for (int u = 0; u < n_; ++u)
      adj_[u].for_each([&](int v) {
        if (v > u) f(u, v);
      });
  }

  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(edges_);
    for_each_edge([&](int u, int v) { out.emplace_back(u, v); });
    return out;
  }

  int max_degree() const {
    int d = 0;
    for (int v = 0; v < n_; ++v) d = std::max(d, deg_[v]);
    return d;
  }
  int min_degree() const {
    int d = n_ ? deg_[0] : 0;
    for (int v = 0; v < n_; ++v) d = std::min(d, deg_[v]);
    return d;
  }

  // Number of edges with one end in X and the other in Y (X, Y disjoint),
  // via row/bitset intersection.
  long long edges_between(const Bitset& x, const Bitset& y) const {
    long long c = 0;
    x.for_each([&](int u) { c += adj_[u].intersect_count(y); });
    return c;
  }

  // ---- parts ----
  int part_count() const { return static_cast<int>(parts_.size()); }
  const std::vector<int>& part(int i) const { return parts_[i]; }
  const std::string& part_name(int i) const { return part_names_[i]; }
  int part_of(int v) const { return part_of_[v]; }
  bool is_special(int v) const { return special_[v] != 0; }

  int part_index(const std::string& name) const {
    for (int i = 0; i < part_count(); ++i)
      if (part_names_[i] == name) return i;
    return -1;
  }

  void add_part(const std::string& name, std::vector<int> verts) {
    int idx = part_count();
    for (int v : verts) {
      if (part_of_[v] != -1) throw std::invalid_argument("vertex in two parts");
      part_of_[v] = idx;
    }
    parts_.push_back(std::move(verts));
    part_names_.push_back(name);
  }

  void mark_special(int v) { special_[v] = 1; }

  std::vector<int> special_of_part(int i) const {
    std::vector<int> out;
    for (int v : parts_[i])
      if (special_[v]) out.push_back(v);
    return out;
  }

  std::vector<int> nonspecial_of_part(int i) const {
    std::vector<int> out;
    for (int v : parts_[i])
      if (!special_[v]) out.push_back(v);
    return out;
  }

  // ---- metadata for serialization ----
  std::string kind;
  std::vector<long long> kind_params;

 private:
  int n_;
  long long edges_;
  std::vector<Bitset> adj_;
  std::vector<int> deg_;
  std::vector<std::vector<int>> parts_;
  std::vector<std::string> part_names_;
  std::vector<int> part_of_;
  std::vector<char> special_;
};

enum class BaseKind { complete_bipartite, complete, sts_base, join_base, ls_base };

inline const char* base_kind_name(BaseKind k) {
  switch (k) {
    case BaseKind::complete_bipartite: return "complete_bipartite";
    case BaseKind::complete: return "complete";
    case BaseKind::sts_base: return "sts_base";
    case BaseKind::join_base: return "join_base";
    case BaseKind::ls_base: return "ls_base";
  }
  return "?";
}

struct BaseParams {
  double eps = 0.0;      // reserved-slice fraction for sts_base / join_base
  int d = 0;             // colour count for ls_base
  const Graph* host = nullptr;  // d-regular bipartite host for ls_base
};

inline Graph build_complete_bipartite(int n) {
  Graph g(2 * n);
  std::vector<int> a(n), b(n);
  for (int i = 0; i < n; ++i) a[i] = i, b[i] = n + i;
  g.add_part("A", a);
  g.add_part("B", b);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g.add_edge(i, n + j);
  g.kind = "complete_bipartite";
  g.kind_params = {n};
  return g;
}

inline Graph build_complete(int n) {
  Graph g(n);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) g.add_edge(u, v);
  g.kind = "complete";
  g.kind_params = {n};
  return g;
}

// Triple-system reduction base on [n], n = 1,3 mod 6: equitable parts
// |V1| <= |V2| <= |V3|, complete inside each part, complete between V1 and
// V2, and cross edges from V1 u V2 only to the reserved slice W3 of V3
// (|W3| = floor(eps*n), marked special).
inline Graph build_sts_base(int n, double eps) {
  if (n % 6 != 1 && n % 6 != 3)
    throw std::invalid_argument("sts_base: n mod 6 must be 1 or 3");
  if (eps <= 0.0 || eps >= 1.0)
    throw std::invalid_argument("sts_base: eps out of (0,1)");
  int n3 = (n + 2) / 3;           // |V3|
  int n1 = (n - n3) / 2;          // |V1|
  int n2 = n - n3 - n1;           // |V2|
  if (n1 > n2 || n2 > n3) throw std::logic_error("part sizing");
  int w3 = static_cast<int>(eps * n);
  if (w3 < 1 || w3 > n3) throw std::invalid_argument("sts_base: |W3| out of range");
  Graph g(n);
  std::vector<int> v1(n1), v2(n2), v3(n3);
  for (int i = 0; i < n1; ++i) v1[i] = i;
  for (int i = 0; i < n2; ++i) v2[i] = n1 + i;
  for (int i = 0; i < n3; ++i) v3[i] = n1 + n2 + i;
  g.add_part("V1", v1);
  g.add_part("V2", v2);
  g.add_part("V3", v3);
  // Reserved slice = last w3 vertices of V3 (deterministic).
  for (int i = n3 - w3; i < n3; ++i) g.mark_special(v3[i]);
  auto complete_within = [&](const std::vector<int>& vs) {
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = i + 1; j < vs.size(); ++j) g.add_edge(vs[i], vs[j]);
  };
  complete_within(v1);
  complete_within(v2);
  complete_within(v3);
  for (int u : v1)
    for (int v : v2) g.add_edge(u, v);
  for (int w : g.special_of_part(2)) {
    for (int u : v1) g.add_edge(u, w);
    for (int u : v2) g.add_edge(u, w);
  }
  g.kind = "sts_base";
  g.kind_params = {n, w3};
  return g;
}

// 1-factorization reduction base on 4n-1 vertices: complete on V1 u V2
// (|V1| = |V2| = n), plus the join to the independent colour set C1 u C2
// (|C1| = n-1, |C2| = n); the reserved slice C2' of C2 has size floor(eps*n).
inline Graph build_join_base(int n, double eps) {
  if (eps <= 0.0 || eps >= 1.0)
    throw std::invalid_argument("join_base: eps out of (0,1)");
  int c2p = static_cast<int>(eps * n);
  if (c2p < 1 || c2p > n) throw std::invalid_argument("join_base: |C2'| out of range");
  int total = 4 * n - 1;
  Graph g(total);
  std::vector<int> v1(n), v2(n), c1(n - 1), c2(n);
  for (int i = 0; i < n; ++i) v1[i] = i;
  for (int i = 0; i < n; ++i) v2[i] = n + i;
  for (int i = 0; i < n - 1; ++i) c1[i] = 2 * n + i;
  for (int i = 0; i < n; ++i) c2[i] = 3 * n - 1 + i;
  g.add_part("V1", v1);
  g.add_part("V2", v2);
  g.add_part("C1", c1);
  g.add_part("C2", c2);
  for (int i = n - c2p; i < n; ++i) g.mark_special(c2[i]);
  for (int i = 0; i < 2 * n; ++i)
    for (int j = i + 1; j < 2 * n; ++j) g.add_edge(i, j);
  for (int i = 0; i < 2 * n; ++i)
    for (int c = 2 * n; c < total; ++c) g.add_edge(i, c);
  g.kind = "join_base";
  g.kind_params = {n, c2p};
  return g;
}

// List-colouring base: a d-regular bipartite host H on parts of size m plus
// a colour part V3 of size d joined completely to V1 u V2. Triangles x-y-s
// (x in V1, y in V2, s in V3) correspond to "colour s allowed on edge xy".
inline Graph build_ls_base(const Graph& host, int d) {
  if (host.part_count() != 2) throw std::invalid_argument("ls_base: host not bipartite");
  int m = static_cast<int>(host.part(0).size());
  if (static_cast<int>(host.part(1).size()) != m)
    throw std::invalid_argument("ls_base: unequal host parts");
  for (int v = 0; v < host.vertex_count(); ++v)
    if (host.degree(v) != d)
      throw std::invalid_argument("ls_base: host not d-regular");
  Graph g(2 * m + d);
  std::vector<int> v1(m), v2(m), v3(d);
  for (int i = 0; i < m; ++i) v1[i] = i;
  for (int i = 0; i < m; ++i) v2[i] = m + i;
  for (int i = 0; i < d; ++i) v3[i] = 2 * m + i;
  g.add_part("V1", v1);
  g.add_part("V2", v2);
  g.add_part("V3", v3);
  // Host edges, re-indexed: host part 0 -> V1, host part 1 -> V2.
  std::vector<int> remap(host.vertex_count(), -1);
  for (int i = 0; i < m; ++i) remap[host.part(0)[i]] = i;
  for (int i = 0; i < m; ++i) remap[host.part(1)[i]] = m + i;
  host.for_each_edge([&](int u, int v) { g.add_edge(remap[u], remap[v]); });
  for (int i = 0; i < 2 * m; ++i)
    for (int s = 0; s < d; ++s) g.add_edge(i, 2 * m + s);
  g.kind = "ls_base";
  g.kind_params = {m, d};
  return g;
}

inline Graph build_base_graph(BaseKind kind, int n, const BaseParams& params = {}) {
  switch (kind) {
    case BaseKind::complete_bipartite: return build_complete_bipartite(n);
    case BaseKind::complete: return build_complete(n);
    case BaseKind::sts_base: return build_sts_base(n, params.eps);
    case BaseKind::join_base: return build_join_base(n, params.eps);
    case BaseKind::ls_base:
      if (!params.host) throw std::invalid_argument("ls_base: host required");
      return build_ls_base(*params.host, params.d);
  }
  throw std::invalid_argument("unknown kind");
}

// ---- text edge-list format ----
// Header `graph <kind> <n> <params...>`, then one `u v` per line, 0-indexed.

inline void write_edge_list(const Graph& g, std::ostream& os) {
  os << "graph " << (g.kind.empty() ? "raw" : g.kind) << ' ' << g.vertex_count();
  for (auto p : g.kind_params) os << ' ' << p;
  os << '\n';
  g.for_each_edge([&](int u, int v) { os << u << ' ' << v << '\n'; });
}

// Reads the raw structure (vertices + edges); parts are not reconstructed.
inline Graph read_edge_list(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty edge list");
  std::istringstream hdr(line);
  std::string tag, kind;
  int n = 0;
  hdr >> tag >> kind >> n;
  if (tag != "graph" || n <= 0) throw std::runtime_error("bad edge-list header");
  Graph g(n);
  g.kind = kind;
  long long p;
  while (hdr >> p) g.kind_params.push_back(p);
  int u, v;
  while (is >> u >> v) g.add_edge(u, v);
  return g;
}

}  // namespace designforge
