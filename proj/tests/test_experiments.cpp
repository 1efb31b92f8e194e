#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

// The CLI binary path is injected at compile time so the suite exercises
// the same executable users run.
const std::string kBin = DESIGNFORGE_BIN;

int run_cli(const std::string& args) {
  int rc = std::system((kBin + " " + args + " > /dev/null 2>&1").c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path d = fs::temp_directory_path() / "designforge_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

void write_cfg(const fs::path& p, const std::string& body) {
  std::ofstream out(p);
  out << body;
}

}  // namespace

TEST_CASE("threshold sweep hits both endpoints", "[experiments]") {
  fs::path d = scratch("endpoints");
  write_cfg(d / "cfg", "n = 8\ntrials = 15\np = 0.0,1.0\nseed = 3\n");
  REQUIRE(run_cli("threshold --config " + (d / "cfg").string() + " --out " + d.string()) == 0);
  std::string csv = slurp(d / "threshold.csv");
  REQUIRE(csv.rfind("n,p,trials,successes,wilson_lo,wilson_hi,mean_time_ms\n", 0) == 0);
  REQUIRE(csv.find("8,0.000000,15,0,") != std::string::npos);
  REQUIRE(csv.find("8,1.000000,15,15,") != std::string::npos);
}

TEST_CASE("artifacts are byte-identical per config and seed", "[experiments]") {
  fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  write_cfg(a / "cfg", "n = 8\ntrials = 10\np = 0.6,1.0\nseed = 11\n");
  std::string cfg = (a / "cfg").string();
  REQUIRE(run_cli("threshold --config " + cfg + " --out " + a.string()) == 0);
  REQUIRE(run_cli("threshold --config " + cfg + " --out " + b.string()) == 0);
  REQUIRE(slurp(a / "threshold.csv") == slurp(b / "threshold.csv"));

  REQUIRE(run_cli("sts --n 21 --seed 5 --out " + a.string()) == 0);
  REQUIRE(run_cli("sts --n 21 --seed 5 --out " + b.string()) == 0);
  REQUIRE(slurp(a / "sts.json") == slurp(b / "sts.json"));

  REQUIRE(run_cli("nibble --n 25 --seed 2 --out " + a.string()) == 0);
  REQUIRE(run_cli("nibble --n 25 --seed 2 --out " + b.string()) == 0);
  REQUIRE(slurp(a / "nibble.jsonl") == slurp(b / "nibble.jsonl"));
}

TEST_CASE("different seeds change the sampled artifacts", "[experiments]") {
  fs::path a = scratch("seed_a"), b = scratch("seed_b");
  REQUIRE(run_cli("latin --n 7 --p 1.0 --seed 1 --out " + a.string()) == 0);
  REQUIRE(run_cli("latin --n 7 --p 1.0 --seed 2 --out " + b.string()) == 0);
  REQUIRE(slurp(a / "latin.json") != slurp(b / "latin.json"));
}

TEST_CASE("config errors exit with code 2", "[experiments]") {
  fs::path d = scratch("bad_cfg");
  write_cfg(d / "cfg", "this is not a key value pair\n");
  REQUIRE(run_cli("sts --config " + (d / "cfg").string() + " --out " + d.string()) == 2);
  REQUIRE(run_cli("sts --config " + (d / "missing.cfg").string()) == 2);
  REQUIRE(run_cli("sts --n 98 --out " + d.string()) == 2);  // n mod 6 invalid
  REQUIRE(run_cli("bogus_subcommand") == 2);
  write_cfg(d / "cfg2", "builder = bogus\n");
  REQUIRE(run_cli("threshold --config " + (d / "cfg2").string() + " --out " + d.string()) == 2);
}

TEST_CASE("build failures exit with code 3 and name a stage", "[experiments]") {
  fs::path d = scratch("fail3");
  REQUIRE(run_cli("onef --n 32 --p 0.0 --seed 1 --out " + d.string()) == 3);
  std::string js = slurp(d / "onef.json");
  REQUIRE(js.find("\"ok\": false") != std::string::npos);
  REQUIRE(js.find("\"failed_stage\"") != std::string::npos);
}

TEST_CASE("sts subcommand emits a validated system", "[experiments]") {
  fs::path d = scratch("sts_ok");
  REQUIRE(run_cli("sts --n 21 --seed 7 --out " + d.string()) == 0);
  std::string js = slurp(d / "sts.json");
  REQUIRE(js.find("\"ok\": true") != std::string::npos);
  REQUIRE(js.find("\"valid\": true") != std::string::npos);
}

TEST_CASE("klist sweep reports the list-size grid", "[experiments]") {
  fs::path d = scratch("klist");
  write_cfg(d / "cfg", "n = 6\ntrials = 10\nk = 1,6\nseed = 4\n");
  REQUIRE(run_cli("klist --config " + (d / "cfg").string() + " --out " + d.string()) == 0);
  std::string csv = slurp(d / "klist.csv");
  REQUIRE(csv.find("6,1.000000,10,0,") != std::string::npos);   // k=1 never works
  REQUIRE(csv.find("6,6.000000,10,10,") != std::string::npos);  // full lists always do
}

TEST_CASE("spreadness subcommand writes a probe report", "[experiments]") {
  fs::path d = scratch("spread");
  write_cfg(d / "cfg", "n = 16\ntrials = 200\nsingle_probes = 4\ndouble_probes = 2\nseed = 9\n");
  REQUIRE(run_cli("spreadness --config " + (d / "cfg").string() + " --out " + d.string()) == 0);
  std::string js = slurp(d / "spreadness.json");
  REQUIRE(js.find("\"all_pass\": true") != std::string::npos);
  REQUIRE(js.find("\"probes\"") != std::string::npos);
}
