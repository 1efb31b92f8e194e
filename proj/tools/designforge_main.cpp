// designforge CLI: seeded experiment harness and artifact emission.
//
//   designforge <subcommand> --config <file> [--seed N] [--out DIR]
//                            [--n N] [--p LIST] [--trials N]
//
// Subcommands: threshold, spreadness, sts, onef, latin, nibble, klist.
// Exit codes: 0 success, 2 config error, 3 build failure, 4 validation
// failure. All artifacts are a deterministic function of (config, seed).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "designforge/nibble.hpp"
#include "designforge/solvers.hpp"
#include "designforge/spread.hpp"
#include "designforge/stats.hpp"

using json = nlohmann::ordered_json;
using namespace designforge;

namespace {

struct Config {
  std::unordered_map<std::string, std::string> kv;

  bool has(const std::string& k) const { return kv.count(k) != 0; }
  std::string get(const std::string& k, const std::string& dflt) const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : it->second;
  }
  long long get_ll(const std::string& k, long long dflt) const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : std::stoll(it->second);
  }
  double get_d(const std::string& k, double dflt) const {
    auto it = kv.find(k);
    return it == kv.end() ? dflt : std::stod(it->second);
  }
  std::vector<double> get_grid(const std::string& k,
                               const std::vector<double>& dflt) const {
    auto it = kv.find(k);
    if (it == kv.end()) return dflt;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) out.push_back(std::stod(tok));
    return out;
  }
};

// Flat `key = value` file; '#' starts a comment.
bool load_config(const std::string& path, Config& cfg, std::string& err) {
  std::ifstream in(path);
  if (!in) {
    err = "cannot open config file: " + path;
    return false;
  }
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto eq = line.find('=');
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r");
      auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    if (eq == std::string::npos) {
      if (!trim(line).empty()) {
        err = "line " + std::to_string(lineno) + ": expected key = value";
        return false;
      }
      continue;
    }
    std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) {
      err = "line " + std::to_string(lineno) + ": empty key or value";
      return false;
    }
    cfg.kv[key] = val;
  }
  return true;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", x + 0.0);  // normalize -0
  if (buf[0] == '-' && std::stod(buf) == 0.0) return buf + 1;
  return buf;
}

bool write_file(const std::string& path, const std::string& body, std::string& err) {
  std::error_code ec;
  std::filesystem::create_directories(std::filesystem::path(path).parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    err = "cannot write " + path;
    return false;
  }
  out << body;
  return true;
}

json triples_json(const std::vector<Triangle>& ts) {
  json a = json::array();
  for (const auto& t : ts) a.push_back({t.a, t.b, t.c});
  return a;
}

json factors_json(const OneFactorization& f) {
  json a = json::array();
  for (const auto& m : f.matchings) {
    json fa = json::array();
    auto sorted = m;
    std::sort(sorted.begin(), sorted.end());
    for (auto [u, v] : sorted) fa.push_back({u, v});
    a.push_back(std::move(fa));
  }
  return a;
}

// One CSV row of the threshold sweep. mean_time_ms is pinned to 0 in the
// artifact: identical (config, seed) must be byte-identical, and wall time
// is not. Real timing goes to stderr.
struct SweepRow {
  int n;
  double p;
  long long trials, successes;
};

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "n,p,trials,successes,wilson_lo,wilson_hi,mean_time_ms\n";
  for (const auto& r : rows) {
    auto [lo, hi] = wilson_interval(r.successes, r.trials);
    s += std::to_string(r.n) + "," + fmt(r.p) + "," + std::to_string(r.trials) + "," +
         std::to_string(r.successes) + "," + fmt(lo) + "," + fmt(hi) + ",0\n";
  }
  return s;
}

int run_threshold(const Config& cfg, const std::string& out_dir, bool klist_mode) {
  int n = static_cast<int>(cfg.get_ll("n", 16));
  long long trials = cfg.get_ll("trials", 50);
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_ll("seed", 0));
  long long budget = cfg.get_ll("budget", 2000);
  std::string builder = cfg.get("builder", klist_mode ? "klist" : "list");
  std::vector<double> grid =
      klist_mode ? cfg.get_grid("k", {1, 2, 3, 4, 5, 6, 8, 10, 12, 16})
                 : cfg.get_grid("p", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0});
  if (grid.empty() || trials < 1) {
    std::fprintf(stderr, "threshold: empty grid or trials < 1\n");
    return 2;
  }
  std::vector<SweepRow> rows;
  for (double x : grid) {
    long long ok = 0;
    for (long long t = 0; t < trials; ++t) {
      std::uint64_t s = splitmix64(seed ^ splitmix64(
                                              static_cast<std::uint64_t>(rows.size()) * 1000003 + t));
      Rng rng(s);
      bool success = false;
      if (builder == "list" || builder == "klist") {
        Graph h = build_complete_bipartite(n);
        ListAssignment la =
            builder == "klist"
                ? sample_lists(h, ListMode::uniform_k, 0.0, static_cast<int>(x), n, rng)
                : sample_lists(h, ListMode::binomial, x, 0, n, rng);
        auto r = solve_list_edge_colouring(h, la, budget, rng);
        success = r.outcome == SolveOutcome::success &&
                  validate_proper_edge_colouring(h, r.colouring, n, &la, true).valid;
      } else if (builder == "sts") {
        auto r = build_sts(n, x, s);
        success = r.ok;
      } else if (builder == "onef") {
        auto r = build_one_factorization_K2n(n, x, s);
        success = r.ok;
      } else {
        std::fprintf(stderr, "threshold: unknown builder '%s'\n", builder.c_str());
        return 2;
      }
      if (success) ++ok;
    }
    rows.push_back({n, x, trials, ok});
    std::fprintf(stderr, "%s %s=%g: %lld/%lld\n", klist_mode ? "klist" : "threshold",
                 klist_mode ? "k" : "p", x, ok, trials);
  }
  std::string err;
  std::string path = out_dir + "/" + (klist_mode ? "klist.csv" : "threshold.csv");
  if (!write_file(path, sweep_csv(rows), err)) {
    std::fprintf(stderr, "%s\n", err.c_str());
    return 2;
  }
  return 0;
}

int run_spreadness(const Config& cfg, const std::string& out_dir) {
  int n = static_cast<int>(cfg.get_ll("n", 64));
  long long trials = cfg.get_ll("trials", 10000);
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_ll("seed", 0));
  int singles = static_cast<int>(cfg.get_ll("single_probes", 50));
  int doubles = static_cast<int>(cfg.get_ll("double_probes", 20));
  SpreadConfig scfg;
  scfg.c = cfg.get_d("C", scfg.c);
  Graph g = build_complete_bipartite(n);
  auto vp = vortex_params(n, scfg.c);
  Rng prng(splitmix64(seed ^ 0x70726f62ULL));
  auto random_item = [&]() {
    SpreadProbe::Item it;
    it.u = static_cast<int>(prng.below(n));
    it.v = n + static_cast<int>(prng.below(n));
    it.slot.i = 1 + static_cast<int>(prng.below(vp.ell));
    it.slot.j = 1 + static_cast<int>(prng.below(1u << (vp.ell - it.slot.i)));
    return it;
  };
  std::vector<SpreadProbe> probes;
  for (int i = 0; i < singles; ++i) probes.push_back({{random_item()}});
  for (int i = 0; i < doubles; ++i) {
    SpreadProbe pr{{random_item(), random_item()}};
    while (edge_key(pr.items[0].u, pr.items[0].v) ==
           edge_key(pr.items[1].u, pr.items[1].v))
      pr.items[1] = random_item();
    probes.push_back(std::move(pr));
  }
  Rng rng(seed);
  auto rep = estimate_spreadness(g, scfg, probes, trials, rng);
  json out = {{"n", rep.n},        {"C", rep.c},
              {"ell", rep.ell},    {"p", rep.p},
              {"q_bound", 8.0 * rep.c * std::log(static_cast<double>(n)) / n},
              {"trials", rep.trials}, {"retry_rate", rep.retry_rate},
              {"all_pass", rep.all_pass}};
  json jp = json::array();
  for (const auto& pr : rep.probes)
    jp.push_back({{"indices", pr.indices},
                  {"sizes", pr.total_size},
                  {"empirical", pr.empirical},
                  {"ci", {pr.wilson_lo, pr.wilson_hi}},
                  {"bound", pr.bound},
                  {"q_bound", pr.q_bound},
                  {"pass", pr.pass}});
  out["probes"] = std::move(jp);
  std::string err;
  if (!write_file(out_dir + "/spreadness.json", out.dump(2) + "\n", err)) {
    std::fprintf(stderr, "%s\n", err.c_str());
    return 2;
  }
  return rep.all_pass ? 0 : 4;
}

int run_sts(const Config& cfg, const std::string& out_dir) {
  int n = static_cast<int>(cfg.get_ll("n", 99));
  double p = cfg.get_d("p", 1.0);
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_ll("seed", 0));
  StsBuildConfig bcfg;
  bcfg.eps = cfg.get_d("eps", bcfg.eps);
  bcfg.budget = cfg.get_ll("budget", bcfg.budget);
  auto r = build_sts(n, p, seed, bcfg);
  json out = {{"n", n}, {"p", p}, {"seed", seed}, {"ok", r.ok}, {"bypass", r.bypass}};
  if (r.ok) {
    out["triples"] = triples_json(r.triples);
    out["valid"] = r.report.valid;
  } else {
    out["failed_stage"] = r.failed_stage;
    out["error"] = r.error;
  }
  std::string err;
  if (!write_file(out_dir + "/sts.json", out.dump(2) + "\n", err)) {
    std::fprintf(stderr, "%s\n", err.c_str());
    return 2;
  }
  if (!r.ok) {
    std::fprintf(stderr, "sts: %s (%s)\n", r.error.c_str(), r.failed_stage.c_str());
    return r.failed_stage == "validate" ? 4 : 3;
  }
  return 0;
}

int run_onef(const Config& cfg, const std::string& out_dir) {
  int n = static_cast<int>(cfg.get_ll("n", 32));
  double p = cfg.get_d("p", 1.0);
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_ll("seed", 0));
  OneFBuildConfig bcfg;
  bcfg.eps = cfg.get_d("eps", bcfg.eps);
  bcfg.budget = cfg.get_ll("budget", bcfg.budget);
  auto r = build_one_factorization_K2n(n, p, seed, bcfg);
  json out = {{"n", n}, {"p", p}, {"seed", seed}, {"ok", r.ok}};
  if (r.ok) {
    out["factors"] = factors_json(r.factors);
    out["valid"] = r.report.valid;
  } else {
    out["failed_stage"] = r.failed_stage;
    out["error"] = r.error;
  }
  std::string err;
  if (!write_file(out_dir + "/onef.json", out.dump(2) + "\n", err)) {
    std::fprintf(stderr, "%s\n", err.c_str());
    return 2;
  }
  if (!r.ok) {
    std::fprintf(stderr, "onef: %s (%s)\n", r.error.c_str(), r.failed_stage.c_str());
    return r.failed_stage == "validate" ? 4 : 3;
  }
  return 0;
}

int run_latin(const Config& cfg, const std::string& out_dir) {
  int n = static_cast<int>(cfg.get_ll("n", 9));
  double p = cfg.get_d("p", 1.0);
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_ll("seed", 0));
  long long budget = cfg.get_ll("budget", 5000);
  Rng rng(splitmix64(seed ^ 0x6c617471ULL));
  Graph h = build_complete_bipartite(n);
  ListAssignment la = sample_lists(h, ListMode::binomial, p, 0, n, rng);
  auto r = build_latin_from_lists(n, la, budget, rng);
  json out = {{"n", n}, {"p", p}, {"seed", seed}, {"ok", r.ok}};
  if (r.ok) {
    out["square"] = r.square;
    out["valid"] = r.report.valid;
  } else {
    out["error"] = r.error;
  }
  std::string err;
  if (!write_file(out_dir + "/latin.json", out.dump(2) + "\n", err)) {
    std::fprintf(stderr, "%s\n", err.c_str());
    return 2;
  }
  return r.ok ? 0 : 3;
}

int run_nibble(const Config& cfg, const std::string& out_dir) {
  int n = static_cast<int>(cfg.get_ll("n", 51));
  double eps = cfg.get_d("eps", 0.1);
  std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_ll("seed", 0));
  int rounds = static_cast<int>(cfg.get_ll("rounds", pseudo_matching_rounds(eps)));
  Graph g = build_complete(n);
  auto th = triangle_hypergraph(g);
  double d = static_cast<double>(n - 2);
  std::vector<std::vector<int>> tracked(1);
  tracked[0].resize(th.h.vertex_count());
  for (int v = 0; v < th.h.vertex_count(); ++v) tracked[0][v] = v;
  Rng rng(seed);
  LinearTripleHypergraph cur = th.h;
  std::string lines;
  for (int i = 0; i < rounds && cur.edge_count() > 0; ++i) {
    double di = d * std::exp(-2.0 * eps * i);
    auto rr = nibble_round(cur, di, eps, tracked, rng);
    json row = {{"round", i},
                {"bite_edges", rr.stats.bite_edges},
                {"matching_edges", rr.stats.matching_edges},
                {"vertices_before", rr.stats.vertices_before},
                {"vertices_after", rr.stats.vertices_after},
                {"mean_degree_before", rr.stats.mean_degree_before},
                {"surviving", rr.stats.surviving},
                {"matched", rr.stats.matched}};
    lines += row.dump() + "\n";
    cur = std::move(rr.reduced);
  }
  std::string err;
  if (!write_file(out_dir + "/nibble.jsonl", lines, err)) {
    std::fprintf(stderr, "%s\n", err.c_str());
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"designforge experiment harness"};
  app.require_subcommand(1);
  std::string config_path, out_dir = "out";
  long long seed_override = -1, n_override = -1, trials_override = -1;
  std::string p_override;
  for (const char* name :
       {"threshold", "spreadness", "sts", "onef", "latin", "nibble", "klist"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path);
    sub->add_option("--seed", seed_override);
    sub->add_option("--out", out_dir);
    sub->add_option("--n", n_override);
    sub->add_option("--p", p_override);
    sub->add_option("--trials", trials_override);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  Config cfg;
  std::string err;
  if (!config_path.empty() && !load_config(config_path, cfg, err)) {
    std::fprintf(stderr, "config error: %s\n", err.c_str());
    return 2;
  }
  if (seed_override >= 0) cfg.kv["seed"] = std::to_string(seed_override);
  if (n_override >= 0) cfg.kv["n"] = std::to_string(n_override);
  if (trials_override >= 0) cfg.kv["trials"] = std::to_string(trials_override);
  if (!p_override.empty()) cfg.kv["p"] = p_override;

  std::string sub = app.get_subcommands()[0]->get_name();
  try {
    if (sub == "threshold") return run_threshold(cfg, out_dir, false);
    if (sub == "klist") return run_threshold(cfg, out_dir, true);
    if (sub == "spreadness") return run_spreadness(cfg, out_dir);
    if (sub == "sts") return run_sts(cfg, out_dir);
    if (sub == "onef") return run_onef(cfg, out_dir);
    if (sub == "latin") return run_latin(cfg, out_dir);
    if (sub == "nibble") return run_nibble(cfg, out_dir);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "build failure: %s\n", e.what());
    return 3;
  }
  return 2;
}
