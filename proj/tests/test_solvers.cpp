#include <catch2/catch_amalgamated.hpp>

#include "designforge/solvers.hpp"

using namespace designforge;

TEST_CASE("full lists colour like a one-factorization", "[solvers]") {
  Rng rng(3);
  Graph h = build_complete_bipartite(8);
  ListAssignment la = sample_lists(h, ListMode::binomial, 1.0, 0, 8, rng);
  auto r = solve_list_edge_colouring(h, la, 1000, rng);
  REQUIRE(r.outcome == SolveOutcome::success);
  auto rep = validate_proper_edge_colouring(h, r.colouring, 8, &la, true);
  REQUIRE(rep.valid);
}

TEST_CASE("an empty list is an immediate infeasibility certificate", "[solvers]") {
  Rng rng(4);
  Graph h = build_complete_bipartite(4);
  ListAssignment la = sample_lists(h, ListMode::binomial, 1.0, 0, 4, rng);
  la.lists[edge_key(1, 5)].clear();
  auto r = solve_list_edge_colouring(h, la, 1000, rng);
  REQUIRE(r.outcome == SolveOutcome::infeasible);
  REQUIRE(r.empty_u == 1);
  REQUIRE(r.empty_v == 5);
  REQUIRE(r.matchings_tried == 0);
}

TEST_CASE("heuristic verdicts agree with the exact fallback at n = 4", "[solvers]") {
  Rng rng(5);
  Graph h = build_complete_bipartite(4);
  for (int trial = 0; trial < 50; ++trial) {
    ListAssignment la = sample_lists(h, ListMode::binomial, 0.9, 0, 4, rng);
    bool empty = false;
    h.for_each_edge([&](int u, int v) { empty = empty || la.list(u, v).empty(); });
    if (empty) continue;
    Rng r1(trial), r2(trial);
    auto heur = solve_list_edge_colouring(h, la, 200, r1);
    auto exact = solve_list_edge_colouring(h, la, 0, r2);  // straight to exact
    REQUIRE(exact.exhaustive);
    if (heur.outcome == SolveOutcome::success) {
      REQUIRE(exact.outcome == SolveOutcome::success);
      auto rep = validate_proper_edge_colouring(h, heur.colouring, 4, &la, true);
      REQUIRE(rep.valid);
    }
    if (heur.outcome == SolveOutcome::infeasible)
      REQUIRE(exact.outcome == SolveOutcome::infeasible);
  }
}

TEST_CASE("exhaustive agreement on 200 random small instances", "[solvers]") {
  Rng rng(6);
  int infeasible = 0, success = 0;
  for (int trial = 0; trial < 200; ++trial) {
    int n = 3 + static_cast<int>(rng.below(4));  // 3..6
    Graph h = build_complete_bipartite(n);
    double p = 0.3 + 0.5 * rng.next_double();
    ListAssignment la = sample_lists(h, ListMode::binomial, p, 0, n, rng);
    Rng solver_rng(trial);
    auto r = solve_list_edge_colouring(h, la, 100, solver_rng);
    if (r.outcome == SolveOutcome::success) {
      ++success;
      auto rep = validate_proper_edge_colouring(h, r.colouring, n, &la, true);
      REQUIRE(rep.valid);
    } else if (r.outcome == SolveOutcome::infeasible) {
      ++infeasible;
      // Infeasible without an empty-list certificate must be exhaustive.
      if (r.empty_u < 0) REQUIRE(r.exhaustive);
    }
  }
  REQUIRE(success > 0);
  REQUIRE(infeasible > 0);
}

TEST_CASE("build_sts bypass produces a valid small system every seed", "[solvers]") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto r = build_sts(7, 1.0, seed);
    REQUIRE(r.ok);
    REQUIRE(r.bypass);
    REQUIRE(r.triples.size() == 7);
    REQUIRE(validate_sts(7, r.triples).valid);
  }
}

TEST_CASE("build_sts rejects impossible orders", "[solvers]") {
  REQUIRE_THROWS_AS(build_sts(8, 1.0, 0), std::invalid_argument);
}

TEST_CASE("build_sts end to end at n = 99", "[solvers]") {
  auto r = build_sts(99, 1.0, 12);
  REQUIRE(r.ok);
  REQUIRE_FALSE(r.bypass);
  REQUIRE(r.triples.size() == 1617);  // n(n-1)/6
  REQUIRE(validate_sts(99, r.triples).valid);
  REQUIRE(r.reduction.ok);
  REQUIRE(r.colouring.outcome == SolveOutcome::success);
  // Same seed replays to the same system.
  auto r2 = build_sts(99, 1.0, 12);
  REQUIRE(r2.ok);
  REQUIRE(r2.triples.size() == r.triples.size());
  for (std::size_t i = 0; i < r.triples.size(); ++i)
    REQUIRE(r.triples[i].key() == r2.triples[i].key());
}

TEST_CASE("build_one_factorization_K2n produces proper colourings", "[solvers]") {
  auto r = build_one_factorization_K2n(32, 1.0, 9);
  REQUIRE(r.ok);
  REQUIRE(r.factors.matchings.size() == 63);  // 2n - 1
  REQUIRE(r.report.valid);
  for (const auto& m : r.factors.matchings) REQUIRE(m.size() == 32);
  // Every K_{2n} edge carries a factor index.
  REQUIRE(r.colour_of.size() == 64ull * 63 / 2);
}

TEST_CASE("build_one_factorization_K2n fails honestly at p = 0", "[solvers]") {
  auto r = build_one_factorization_K2n(32, 0.0, 0);
  REQUIRE_FALSE(r.ok);
  REQUIRE(r.failed_stage.rfind("reduce:", 0) == 0);
  REQUIRE_FALSE(r.error.empty());
}

TEST_CASE("latin squares assemble from list colourings", "[solvers]") {
  Rng rng(7);
  Graph h = build_complete_bipartite(9);
  ListAssignment la = sample_lists(h, ListMode::binomial, 0.9, 0, 9, rng);
  auto r = build_latin_from_lists(9, la, 5000, rng);
  REQUIRE(r.ok);
  REQUIRE(validate_latin_square(r.square).valid);
}

TEST_CASE("colouring results serialize deterministically", "[solvers]") {
  Rng rng(8);
  Graph h = build_complete_bipartite(4);
  ListAssignment la = sample_lists(h, ListMode::binomial, 1.0, 0, 4, rng);
  Rng r1(1), r2(1);
  auto a = solve_list_edge_colouring(h, la, 100, r1);
  auto b = solve_list_edge_colouring(h, la, 100, r2);
  REQUIRE(colouring_result_json(a).find("\"status\":\"success\"") != std::string::npos);
  REQUIRE(colouring_result_json(a) == colouring_result_json(b));
}
