#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string(EPIFLOW_CLI_PATH) + " " + args + " >" + out.string() +
                          " 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  return RunResult{WEXITSTATUS(raw), slurp(out), slurp(err)};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("epiflow_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int counter;
};
int TempDir::counter = 0;

void write_config(const fs::path& p, const nlohmann::json& j) {
  std::ofstream out(p);
  out << j.dump(2);
}

nlohmann::json small_compare_config() {
  return nlohmann::json{
      {"seed", 11},
      {"graph", {{"family", "erdos_renyi"}, {"size", 10}, {"params", {{"p", 0.3}}}}},
      {"optimizer", {{"steps", 25}}},
      {"experiment", {{"type", "compare"}, {"replicates", 2}}},
  };
}

}  // namespace

TEST_CASE("missing config file exits 2 and names the path") {
  TempDir dir;
  const RunResult res = run_cli("run /nonexistent/cfg.json", dir.path);
  CHECK(res.exit_code == 2);
  CHECK(res.err.find("/nonexistent/cfg.json") != std::string::npos);
}

TEST_CASE("invalid configs exit 2 naming the offending field or key") {
  TempDir dir;
  {
    auto cfg = small_compare_config();
    cfg["diffusion"] = {{"tau", -1.0}};
    write_config(dir.path / "bad_tau.json", cfg);
    const RunResult res = run_cli("validate " + (dir.path / "bad_tau.json").string(), dir.path);
    CHECK(res.exit_code == 2);
    CHECK(res.err.find("tau") != std::string::npos);
  }
  {
    auto cfg = small_compare_config();
    cfg["grap"] = {{"family", "erdos_renyi"}};
    write_config(dir.path / "bad_key.json", cfg);
    const RunResult res = run_cli("validate " + (dir.path / "bad_key.json").string(), dir.path);
    CHECK(res.exit_code == 2);
    CHECK(res.err.find("grap") != std::string::npos);
  }
  {
    write_config(dir.path / "not_json.json", {});
    std::ofstream(dir.path / "not_json.json") << "{ nope";
    const RunResult res = run_cli("validate " + (dir.path / "not_json.json").string(), dir.path);
    CHECK(res.exit_code == 2);
  }
}

TEST_CASE("validate echoes the fully resolved defaults") {
  TempDir dir;
  write_config(dir.path / "cfg.json", small_compare_config());
  const RunResult res = run_cli("validate " + (dir.path / "cfg.json").string(), dir.path);
  REQUIRE(res.exit_code == 0);
  const auto resolved = nlohmann::json::parse(res.out);
  CHECK(resolved.at("optimizer").at("steps") == 25);
  CHECK(resolved.at("optimizer").at("schedule").at("type") == "paper_exp");
  CHECK(resolved.at("optimizer").at("schedule").at("phi").get<double>() ==
        doctest::Approx(2.5e-3));
  CHECK(resolved.at("optimizer").at("smooth_max_a").get<double>() == doctest::Approx(20.0));
  CHECK(resolved.at("simulation").at("horizon").get<double>() == doctest::Approx(1000.0));
  CHECK(resolved.at("simulation").at("seed_nodes") == 2);
  CHECK(resolved.at("simulation").at("seed_fraction").get<double>() == doctest::Approx(0.05));
  CHECK(resolved.at("diffusion").at("tau").get<double>() == doctest::Approx(1.0));
  CHECK(resolved.at("experiment").at("replicates") == 2);
  CHECK(resolved.at("graph").at("size") == 10);
}

TEST_CASE("a minimal compare run writes 8 records plus header and a summary") {
  TempDir dir;
  write_config(dir.path / "cfg.json", small_compare_config());
  const RunResult res = run_cli(
      "run " + (dir.path / "cfg.json").string() + " --output-dir " + (dir.path / "out").string(),
      dir.path);
  REQUIRE(res.exit_code == 0);
  const std::string csv = slurp(dir.path / "out" / "results.csv");
  std::size_t lines = 0;
  for (char c : csv)
    if (c == '\n') ++lines;
  CHECK(lines == 9);  // header + 2 replicates x 4 policies
  const auto summary = nlohmann::json::parse(slurp(dir.path / "out" / "summary.json"));
  CHECK(summary.at("experiment") == "compare");
  CHECK(summary.at("groups").size() == 4);
}

TEST_CASE("the same config reruns to byte-identical outputs") {
  TempDir dir;
  auto cfg = small_compare_config();
  cfg["threads"] = 3;
  write_config(dir.path / "cfg.json", cfg);
  const std::string base = "run " + (dir.path / "cfg.json").string() + " --output-dir ";
  REQUIRE(run_cli(base + (dir.path / "a").string(), dir.path).exit_code == 0);
  REQUIRE(run_cli(base + (dir.path / "b").string(), dir.path).exit_code == 0);
  CHECK(slurp(dir.path / "a" / "results.csv") == slurp(dir.path / "b" / "results.csv"));
  CHECK(slurp(dir.path / "a" / "summary.json") == slurp(dir.path / "b" / "summary.json"));
  CHECK(!slurp(dir.path / "a" / "results.csv").empty());
}

TEST_CASE("prop3 with a supercritical reference reports the skip, exit 0") {
  TempDir dir;
  nlohmann::json cfg = {
      {"seed", 3},
      {"graph", {{"family", "erdos_renyi"}, {"size", 8}, {"params", {{"p", 0.35}}}}},
      {"model", {{"distributions", {{"r0_mean", 1.8}, {"r0_sigma", 0.05}}}}},
      {"experiment", {{"type", "prop3"}, {"samples", 2}, {"num_perturbations", 3}}},
      {"simulation", {{"dt", 0.5}}},
  };
  write_config(dir.path / "cfg.json", cfg);
  const RunResult res = run_cli(
      "run " + (dir.path / "cfg.json").string() + " --output-dir " + (dir.path / "out").string(),
      dir.path);
  REQUIRE(res.exit_code == 0);
  const auto summary = nlohmann::json::parse(slurp(dir.path / "out" / "summary.json"));
  REQUIRE(summary.at("reports").size() == 2);
  for (const auto& rep : summary.at("reports"))
    CHECK(rep.at("status") == "SkippedPreconditionFailed");
}

TEST_CASE("simulate_only writes a trajectory with the expected header") {
  TempDir dir;
  nlohmann::json cfg = {
      {"seed", 5},
      {"graph", {{"family", "erdos_renyi"}, {"size", 8}, {"params", {{"p", 0.35}}}}},
      {"experiment", {{"type", "simulate_only"}}},
      {"simulation", {{"horizon", 50.0}, {"record_every", 10}}},
  };
  write_config(dir.path / "cfg.json", cfg);
  const RunResult res = run_cli(
      "run " + (dir.path / "cfg.json").string() + " --output-dir " + (dir.path / "out").string(),
      dir.path);
  REQUIRE(res.exit_code == 0);
  const std::string traj = slurp(dir.path / "out" / "trajectory.csv");
  CHECK(traj.rfind("t,node,S,E,I,R\n", 0) == 0);
  const auto summary = nlohmann::json::parse(slurp(dir.path / "out" / "summary.json"));
  CHECK(summary.contains("r0"));
  CHECK(summary.contains("final_size"));
}

TEST_CASE("validate accepts exactly what run accepts") {
  TempDir dir;
  write_config(dir.path / "cfg.json", small_compare_config());
  CHECK(run_cli("validate " + (dir.path / "cfg.json").string(), dir.path).exit_code == 0);
  CHECK(run_cli("run " + (dir.path / "cfg.json").string() + " --output-dir " +
                    (dir.path / "out").string(),
                dir.path)
            .exit_code == 0);
}
