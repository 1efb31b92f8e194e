#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <unordered_set>

#include "designforge/reductions.hpp"

using namespace designforge;

namespace {

// Every triangle exposed, inside the base, and pairwise edge-disjoint;
// base edges = residual edges + 3 * triangles.
void check_triangle_accounting(const ReductionOutput& r) {
  ExposureLedger probe(r.base, 1.0, r.seed);
  std::unordered_set<std::uint64_t> used;
  for (const Triangle& t : r.triangles) {
    REQUIRE(probe.in_universe(t));
    for (auto [u, v] : t.edges()) REQUIRE(used.insert(edge_key(u, v)).second);
  }
  long long residual = 0;
  r.residual.for_each_edge([&](int u, int v) {
    REQUIRE(r.base.has_edge(u, v));
    REQUIRE(!used.count(edge_key(u, v)));
    ++residual;
  });
  REQUIRE(r.base.edge_count() == residual + 3 * static_cast<long long>(r.triangles.size()));
}

Graph random_graph(int n, double p, Rng& rng) {
  Graph g(n);
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (rng.bernoulli(p)) g.add_edge(u, v);
  return g;
}

}  // namespace

TEST_CASE("equitable edge colouring is proper and balanced", "[reductions]") {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    Graph g = random_graph(10 + static_cast<int>(rng.below(20)), 0.3, rng);
    int k = g.max_degree() + 1;
    auto cc = equitable_edge_colouring(g, k);
    REQUIRE(cc.k == k);
    REQUIRE(cc.max_size() - cc.min_size() <= 1);
    long long total = 0;
    std::set<int> seen;
    for (int c = 0; c < k; ++c) {
      seen.clear();
      for (auto [u, v] : cc.classes[c]) {
        REQUIRE(g.has_edge(u, v));
        REQUIRE(seen.insert(u).second);
        REQUIRE(seen.insert(v).second);
      }
      total += static_cast<long long>(cc.classes[c].size());
    }
    REQUIRE(total == g.edge_count());
  }
}

TEST_CASE("equitable edge colouring solves K4 with three colours", "[reductions]") {
  Graph g = build_complete(4);
  auto cc = equitable_edge_colouring(g, 3);  // k == max degree, exact mode
  REQUIRE(cc.k == 3);
  for (const auto& cls : cc.classes) REQUIRE(cls.size() == 2);
}

TEST_CASE("cover_down_part clears a part down to its U-interior", "[reductions]") {
  Graph base = build_sts_reduction_host(99, 0.18);
  Graph g = base;
  ExposureLedger ledger(base, 1.0, 7);
  Rng rng(7);
  const auto& v1 = base.part(0);
  std::vector<int> u(v1.begin(), v1.begin() + base.special_of_part(2).size());
  auto r = cover_down_part(g, v1, u, ledger, rng, {}, 5);
  REQUIRE(r.ok);
  Bitset ub(g.vertex_count());
  for (int x : u) ub.set(x);
  for (std::size_t a = 0; a < v1.size(); ++a)
    for (std::size_t b = a + 1; b < v1.size(); ++b)
      if (g.has_edge(v1[a], v1[b])) {
        REQUIRE(ub.test(v1[a]));
        REQUIRE(ub.test(v1[b]));
      }
  // Triangles live inside the part and are edge-disjoint.
  std::unordered_set<std::uint64_t> used;
  Bitset pb(g.vertex_count());
  for (int x : v1) pb.set(x);
  for (const Triangle& t : r.triangles) {
    REQUIRE((pb.test(t.a) && pb.test(t.b) && pb.test(t.c)));
    for (auto [x, y] : t.edges()) REQUIRE(used.insert(edge_key(x, y)).second);
  }
  REQUIRE(ledger.class_violations() == 0);
}

TEST_CASE("cover_down_part rejects odd outside degrees", "[reductions]") {
  Graph base = build_sts_reduction_host(103, 0.18);  // inside-part degree 33
  Graph g = base;
  ExposureLedger ledger(base, 1.0, 1);
  Rng rng(1);
  const auto& v1 = base.part(0);
  std::vector<int> u(v1.begin(), v1.begin() + 8);
  REQUIRE_THROWS_AS(cover_down_part(g, v1, u, ledger, rng, {}, 5), std::invalid_argument);
}

TEST_CASE("sts_reduce rejects bad orders and slices", "[reductions]") {
  REQUIRE_THROWS_AS(build_sts_reduction_host(8, 0.18), std::invalid_argument);
  REQUIRE_THROWS_AS(build_sts_reduction_host(99, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(build_sts_reduction_host(99, 0.95), std::invalid_argument);
}

TEST_CASE("sts_reduce meets the residual contract at n = 99", "[reductions]") {
  auto r = sts_reduce(99, 0.18, 1.0, 2024);
  REQUIRE(r.ok);
  REQUIRE(r.class_violations == 0);
  check_triangle_accounting(r);

  const Graph& base = r.base;
  const Graph& h = r.residual;
  int n3 = static_cast<int>(base.part(2).size());
  int w3 = static_cast<int>(base.special_of_part(2).size());
  // Reserved slice isolated.
  for (int w : base.special_of_part(2)) REQUIRE(h.degree(w) == 0);
  // Induced residual on V1 u V2: cross and exactly (n3 - w3)-regular.
  Bitset v12(base.vertex_count());
  for (int v : base.part(0)) v12.set(v);
  for (int v : base.part(1)) v12.set(v);
  for (int i = 0; i < 2; ++i)
    for (int v : base.part(i)) {
      REQUIRE(h.row(v).intersect_count(v12) == n3 - w3);
      for (int u : base.part(i))
        if (u != v) REQUIRE(!h.has_edge(u, v));
    }
}

TEST_CASE("sts_reduce handles the pivot case n = 1 mod 6", "[reductions]") {
  auto r = sts_reduce(103, 0.18, 1.0, 11);
  REQUIRE(r.ok);
  REQUIRE(r.class_violations == 0);
  check_triangle_accounting(r);
  for (int w : r.base.special_of_part(2)) REQUIRE(r.residual.degree(w) == 0);
}

TEST_CASE("balance stage ends with zero deficiency and an exact scan", "[reductions]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto r = sts_reduce(99, 0.18, 1.0, seed);
    REQUIRE(r.ok);
    REQUIRE(r.balance_scan);
    for (const auto& tr : r.trackers) {
      REQUIRE(tr.norm() == 0);
      REQUIRE(tr.sum() == 0);
      for (int c : tr.case_history) {
        REQUIRE(c >= 0);
        REQUIRE(c <= 3);
      }
    }
  }
}

TEST_CASE("one_f_reduce rejects a gamma without batches", "[reductions]") {
  OneFReduceConfig cfg;
  cfg.gamma = 1.2;  // 1/gamma^4 < 1
  REQUIRE_THROWS_AS(one_f_reduce(16, 0.33, 1.0, 0, cfg), std::invalid_argument);
}

TEST_CASE("one_f_reduce meets the residual contract at n = 64", "[reductions]") {
  auto r = one_f_reduce(64, 0.33, 1.0, 3);
  REQUIRE(r.ok);
  REQUIRE(r.class_violations == 0);
  check_triangle_accounting(r);

  const Graph& base = r.base;
  const Graph& h = r.residual;
  const auto& c1 = base.part(2);
  const auto& c2 = base.part(3);
  int reserved = static_cast<int>(base.special_of_part(3).size());
  int free_deg = static_cast<int>(c2.size()) - reserved;
  for (int c : c1) REQUIRE(h.degree(c) == 0);
  for (int c : c2) {
    if (base.is_special(c)) REQUIRE(h.degree(c) == 0);
    else REQUIRE(h.degree(c) == 2 * 64);
  }
  Bitset v12(base.vertex_count());
  for (int v : base.part(0)) v12.set(v);
  for (int v : base.part(1)) v12.set(v);
  for (int i = 0; i < 2; ++i)
    for (int v : base.part(i)) {
      REQUIRE(h.row(v).intersect_count(v12) == free_deg);
      for (int u : base.part(i))
        if (u != v) REQUIRE(!h.has_edge(u, v));
    }
}

TEST_CASE("reductions are deterministic per seed", "[reductions]") {
  auto a = sts_reduce(99, 0.18, 1.0, 17);
  auto b = sts_reduce(99, 0.18, 1.0, 17);
  REQUIRE(a.ok);
  REQUIRE(a.ok == b.ok);
  REQUIRE(a.triangles.size() == b.triangles.size());
  for (std::size_t i = 0; i < a.triangles.size(); ++i)
    REQUIRE(a.triangles[i].key() == b.triangles[i].key());
}

TEST_CASE("reduction output serializes round-trippable JSON scaffolding", "[reductions]") {
  auto r = sts_reduce(99, 0.18, 1.0, 5);
  REQUIRE(r.ok);
  std::string js = reduction_output_json(r);
  REQUIRE(js.find("\"ok\":true") != std::string::npos);
  REQUIRE(js.find("\"triangles\":[[") != std::string::npos);
  REQUIRE(js.find("\"residual_edges\":[[") != std::string::npos);
  std::string trace = reduction_stage_trace(r);
  REQUIRE(trace.find("\"stage\":\"balance\"") != std::string::npos);
  // Deterministic artifacts per (config, seed).
  auto r2 = sts_reduce(99, 0.18, 1.0, 5);
  REQUIRE(reduction_output_json(r2) == js);
}
