#include "announce/cli.hpp"
#include "announce/config_io.hpp"
#include "announce/policy.hpp"

#include "helpers.hpp"

#include <doctest.h>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

using namespace announce;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

} // namespace

TEST_CASE("usage errors exit 2") {
  CHECK(cli({}).code == kExitUsage);
  CHECK(cli({"frobnicate"}).code == kExitUsage);
  CHECK(cli({"solve", "--config", "small"}).code == kExitUsage);
  CHECK(cli({"solve", "--config", "small", "--solver", "magic", "--out", "/tmp/x.json"}).code == kExitUsage);
  CHECK(cli({"simulate", "--config", "small", "--policies", "observedtime", "--episodes", "0",
             "--out-dir", "/tmp/never"}).code == kExitUsage);
  CHECK(cli({"simulate", "--config", "small", "--policies", "nonsense", "--episodes", "3",
             "--out-dir", "/tmp/never"}).code == kExitUsage);
  CHECK(cli({"report", "--in", "/tmp", "--format", "xml"}).code == kExitUsage);
  CHECK(cli({"sweep", "--config", "small", "--grid", "1,x", "--out-dir", "/tmp/never"}).code == kExitUsage);
  CHECK(cli({"--help"}).code == kExitOk);
}

TEST_CASE("solve writes a policy with the config fingerprint") {
  testing::TempDir dir;
  const auto r = cli({"solve", "--config", "small", "--solver", "qmdp", "--out", (dir / "q.json").string()});
  REQUIRE(r.code == kExitOk);
  const auto report = nlohmann::json::parse(r.out);
  CHECK(report["converged"] == true);
  CHECK(report["residual"].get<double>() < 1e-6);
  CHECK(peek_policy(dir / "q.json").second == config_fingerprint(ProblemConfig::preset("small")));
  CHECK(report["config_fingerprint"] == config_fingerprint(ProblemConfig::preset("small")));
}

TEST_CASE("solve on the medium config converges") {
  testing::TempDir dir;
  std::ofstream(dir / "medium.json") << config_to_json(ProblemConfig::preset("medium")).dump();
  const auto r = cli({"solve", "--config", (dir / "medium.json").string(), "--solver", "qmdp", "--out",
                      (dir / "q.json").string()});
  REQUIRE(r.code == kExitOk);
  CHECK(nlohmann::json::parse(r.out)["residual"].get<double>() < 1e-6);
}

TEST_CASE("point-based solve stopped early needs --allow-nonconverged") {
  testing::TempDir dir;
  const std::vector<std::string> base = {"solve", "--config", "small", "--solver", "sarsop",
                                         "--max-trials", "5", "--out", (dir / "s.json").string()};
  const auto stopped = cli(base);
  CHECK(stopped.code == kExitRuntime);
  CHECK(nlohmann::json::parse(stopped.out)["status"] == "TrialLimit");
  auto allowed = base;
  allowed.push_back("--allow-nonconverged");
  CHECK(cli(allowed).code == kExitOk);
  CHECK(fs::exists(dir / "s.json"));
}

TEST_CASE("runtime errors exit 1") {
  testing::TempDir dir;
  CHECK(cli({"solve", "--config", (dir / "absent.json").string(), "--solver", "qmdp", "--out",
             (dir / "q.json").string()}).code == kExitRuntime);
  std::ofstream(dir / "bad.json") << R"({"t_min": 2})";
  CHECK(cli({"solve", "--config", (dir / "bad.json").string(), "--solver", "qmdp", "--out",
             (dir / "q.json").string()}).code == kExitRuntime);
  CHECK(cli({"solve", "--config", "small", "--solver", "qmdp", "--out",
             (dir / "no" / "such" / "dir" / "q.json").string()}).code == kExitRuntime);
}

TEST_CASE("simulate is deterministic and writes both outputs") {
  testing::TempDir dir;
  auto run = [&](const std::string &sub, const std::string &workers) {
    return cli({"simulate", "--config", "small", "--policies", "observedtime,mostlikely", "--episodes", "10",
                "--seed", "7", "--out-dir", (dir / sub).string(), "--workers", workers});
  };
  REQUIRE(run("a", "1").code == kExitOk);
  REQUIRE(run("b", "3").code == kExitOk);
  CHECK(slurp(dir / "a" / "episodes.csv") == slurp(dir / "b" / "episodes.csv"));
  CHECK(slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json"));
  const auto summary = nlohmann::json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary["type"] == "batch");
  CHECK(summary["policies"].size() == 2);
  CHECK(summary["policies"][1]["policy"] == "mostlikely");
}

TEST_CASE("simulate with policy files") {
  testing::TempDir dir;
  REQUIRE(cli({"solve", "--config", "small", "--solver", "qmdp", "--out", (dir / "q.json").string()}).code == 0);
  const auto ok = cli({"simulate", "--config", "small", "--policies", (dir / "q.json").string() + ",qmdp",
                       "--episodes", "20", "--out-dir", (dir / "out").string()});
  REQUIRE(ok.code == kExitOk);
  const auto summary = nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  CHECK(summary["policies"][0]["mean_reward"] == summary["policies"][1]["mean_reward"]);

  const auto mismatch = cli({"simulate", "--config", "medium", "--policies", (dir / "q.json").string(),
                             "--episodes", "5", "--out-dir", (dir / "out2").string()});
  CHECK(mismatch.code == kExitRuntime);
  CHECK(mismatch.err.find("ConfigMismatch") != std::string::npos);
}

TEST_CASE("sweep writes one row per grid cell") {
  testing::TempDir dir;
  const auto r = cli({"sweep", "--config", "small", "--grid", "1,4,16", "--episodes", "10", "--seed", "2",
                      "--out-dir", dir.path().string()});
  REQUIRE(r.code == kExitOk);
  std::istringstream csv(slurp(dir / "sweep.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(csv, line))
    ++rows;
  CHECK(rows == 9);
  CHECK(nlohmann::json::parse(slurp(dir / "sweep.json"))["baselines"].size() == 2);
}

TEST_CASE("report") {
  testing::TempDir dir;
  CHECK(cli({"report", "--in", dir.path().string()}).code == kExitRuntime);
  CHECK(cli({"report", "--in", (dir / "absent").string()}).code == kExitRuntime);

  REQUIRE(cli({"scenario", "--config", "small", "--policy", "mostlikely", "--initial-completion", "9",
               "--seed", "4", "--out", (dir / "scenario.json").string()}).code == kExitOk);
  const auto trace = nlohmann::json::parse(slurp(dir / "scenario.json"));

  SUBCASE("json series pass the trace through") {
    const auto r = cli({"report", "--in", dir.path().string(), "--format", "json"});
    REQUIRE(r.code == kExitOk);
    const auto report = nlohmann::json::parse(r.out);
    REQUIRE(report["scenario"].size() == 1);
    const auto &series = report["scenario"][0]["series"];
    REQUIRE(series["t"].size() == trace["steps"].size());
    for (std::size_t i = 0; i < trace["steps"].size(); ++i) {
      CHECK(series["observation"][i] == trace["steps"][i]["observation"]);
      CHECK(series["announcement"][i] == trace["steps"][i]["action"]);
      CHECK(series["belief_mode"][i] == trace["steps"][i]["belief_mode"]);
    }
  }
  SUBCASE("csv long format") {
    REQUIRE(cli({"simulate", "--config", "small", "--policies", "observedtime", "--episodes", "5", "--out-dir",
                 dir.path().string()}).code == 0);
    const auto r = cli({"report", "--in", dir.path().string(), "--format", "csv"});
    REQUIRE(r.code == kExitOk);
    CHECK(r.out.rfind("figure,source,policy,index,quantity,value\n", 0) == 0);
    CHECK(r.out.find("scenario,scenario.json,mostlikely,0,observation,") != std::string::npos);
    CHECK(r.out.find("policy_comparison,summary.json,observedtime,0,mean_reward,") != std::string::npos);
  }
}

TEST_CASE("scenario output") {
  const auto r = cli({"scenario", "--config", "small", "--policy", "qmdp", "--initial-completion", "7"});
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["initial_completion"] == 7);
  CHECK(j["steps"][0]["t"] == 0);
  CHECK(cli({"scenario", "--config", "small", "--policy", "qmdp", "--initial-completion", "40"}).code ==
        kExitUsage);
}
