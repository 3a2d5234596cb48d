#include "announce/cli.hpp"

#include "announce/config_io.hpp"
#include "announce/error.hpp"
#include "announce/parallel.hpp"
#include "announce/policy.hpp"
#include "announce/service.hpp"
#include "announce/sim.hpp"
#include "announce/solvers.hpp"
#include "announce/sweep.hpp"

#include <CLI11.hpp>
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace fs = std::filesystem;

namespace announce {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverFlags {
  double tol = 1e-6;
  std::size_t max_iter = 10000;
  double precision = 1e-3;
  double time_budget = 600.0;
  std::size_t max_trials = std::numeric_limits<std::size_t>::max();
  unsigned workers = 0;

  QmdpOptions qmdp() const {
    QmdpOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    o.workers = resolve_workers(workers);
    return o;
  }
  PointBasedOptions point_based() const {
    PointBasedOptions o;
    o.precision = precision;
    o.time_budget = time_budget;
    o.max_trials = max_trials;
    o.qmdp = qmdp();
    return o;
  }
};

void add_solver_flags(CLI::App *cmd, SolverFlags &f) {
  cmd->add_option("--tol", f.tol, "QMDP convergence tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iter", f.max_iter, "QMDP sweep limit")->check(CLI::PositiveNumber);
  cmd->add_option("--precision", f.precision, "point-based target gap at the root")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--time-budget", f.time_budget, "point-based wall-clock budget in seconds")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-trials", f.max_trials, "point-based trial limit")
      ->check(CLI::PositiveNumber);
}

void add_workers_flag(CLI::App *cmd, unsigned &workers) {
  cmd->add_option("--workers", workers,
                  "parallel workers (default: ANNOUNCE_PLANNER_WORKERS or all cores)");
}

PolicyKind parse_kind_or_usage(const std::string &name) {
  try {
    return parse_policy_kind(name);
  } catch (const InvalidArgument &) {
    throw UsageError("unknown policy '" + name +
                     "' (expected qmdp, sarsop, mostlikely, observedtime or a policy file)");
  }
}

ProblemConfig read_config(const std::string &path) {
  try {
    return load_config(path);
  } catch (const InvalidConfig &) {
    throw;
  } catch (const Error &e) {
    throw IoError(e.what());
  }
}

/// A policy file path, or a kind name solved on the spot.
Policy resolve_policy(const std::string &name_or_path, const ProblemConfig &config, const Model &model,
                      const SolverFlags &flags) {
  if (fs::is_regular_file(name_or_path))
    return load_policy(name_or_path, config);
  const PolicyKind kind = parse_kind_or_usage(name_or_path);
  switch (kind) {
  case PolicyKind::qmdp:
    return solve_qmdp(model, flags.qmdp()).policy;
  case PolicyKind::point_based:
    return solve_point_based(model, flags.point_based()).policy;
  default:
    return Policy::baseline(kind, config);
  }
}

std::vector<std::string> split_list(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty())
      out.push_back(item);
  return out;
}

void write_text(const fs::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text))
    throw IoError("cannot write " + path.string());
}

void ensure_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw IoError("cannot create directory " + dir.string());
}

// --------------------------------------------------------------------------

struct SolveArgs {
  std::string config, solver, out;
  bool allow_nonconverged = false;
  SolverFlags flags;
};

int cmd_solve(const SolveArgs &a, std::ostream &out) {
  const ProblemConfig config = read_config(a.config);
  const Model model(config);
  Solution solution = [&] {
    if (a.solver == "qmdp")
      return solve_qmdp(model, a.flags.qmdp());
    if (a.solver == "sarsop")
      return solve_point_based(model, a.flags.point_based());
    throw UsageError("unknown solver '" + a.solver + "' (expected qmdp or sarsop)");
  }();
  save_policy(solution.policy, a.out);
  auto report = report_to_json(solution.report);
  report["solver"] = a.solver;
  report["config_fingerprint"] = solution.policy.fingerprint();
  report["initial_value"] = initial_belief_value(model, solution.policy);
  out << report.dump(2) << '\n';
  if (!solution.report.converged && !a.allow_nonconverged)
    return kExitRuntime;
  return kExitOk;
}

struct SimulateArgs {
  std::string config, policies, out_dir;
  std::size_t episodes = 0;
  std::uint64_t seed = 1;
  SolverFlags flags;
};

int cmd_simulate(const SimulateArgs &a, std::ostream &out) {
  const ProblemConfig config = read_config(a.config);
  const Model model(config);
  std::vector<Policy> policies;
  std::vector<std::string> labels;
  for (const auto &name_or_path : split_list(a.policies)) {
    policies.push_back(resolve_policy(name_or_path, config, model, a.flags));
    labels.emplace_back(cli_name(policies.back().kind()));
  }
  if (policies.empty())
    throw UsageError("--policies is empty");
  const BatchResult batch = run_batch(model, policies, labels, a.episodes, a.seed,
                                      resolve_workers(a.flags.workers));
  ensure_dir(a.out_dir);
  std::ostringstream csv;
  write_episodes_csv(csv, batch);
  write_text(fs::path(a.out_dir) / "episodes.csv", csv.str());

  nlohmann::json summaries = nlohmann::json::array();
  for (const auto &s : batch.summaries)
    summaries.push_back(summary_to_json(s));
  const nlohmann::json summary = {{"type", "batch"},
                                  {"config", config_to_json(config)},
                                  {"config_fingerprint", config_fingerprint(config)},
                                  {"episodes", a.episodes},
                                  {"seed", a.seed},
                                  {"policies", summaries}};
  write_text(fs::path(a.out_dir) / "summary.json", summary.dump(2) + "\n");
  out << summaries.dump(2) << '\n';
  return kExitOk;
}

struct SweepArgs {
  std::string config, grid, out_dir;
  std::size_t episodes = 100;
  std::uint64_t seed = 1;
  SolverFlags flags;
};

int cmd_sweep(const SweepArgs &a, std::ostream &out) {
  const ProblemConfig config = read_config(a.config);
  std::vector<double> grid;
  for (const auto &item : split_list(a.grid)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception &) {
      used = 0;
    }
    if (used != item.size() || !(v >= 0.0))
      throw UsageError("bad grid value '" + item + "'");
    grid.push_back(v);
  }
  if (grid.empty())
    throw UsageError("--grid is empty");
  SweepOptions options;
  options.n_runs = a.episodes;
  options.master_seed = a.seed;
  options.workers = resolve_workers(a.flags.workers);
  options.tol = a.flags.tol;
  options.max_iter = a.flags.max_iter;
  const SweepResult result = pareto_sweep(config, grid, options);

  ensure_dir(a.out_dir);
  std::ostringstream csv;
  write_sweep_csv(csv, result);
  write_text(fs::path(a.out_dir) / "sweep.csv", csv.str());
  auto j = sweep_to_json(result);
  j["config"] = config_to_json(config);
  j["episodes"] = a.episodes;
  j["seed"] = a.seed;
  write_text(fs::path(a.out_dir) / "sweep.json", j.dump(2) + "\n");
  out << "points: " << result.points.size()
      << ", frontier: " << pareto_frontier(result.points).size() << '\n';
  return kExitOk;
}

struct ScenarioArgs {
  std::string config, policy, out;
  int initial_completion = 0;
  std::uint64_t seed = 1;
  SolverFlags flags;
};

int cmd_scenario(const ScenarioArgs &a, std::ostream &out) {
  const ProblemConfig config = read_config(a.config);
  const Model model(config);
  const Policy policy = resolve_policy(a.policy, config, model, a.flags);
  if (!model.valid_completion(a.initial_completion))
    throw UsageError("--initial-completion outside [t_min, t_max]");
  const auto trace = scenario_trace(model, policy, a.initial_completion, a.seed);
  auto j = scenario_to_json(trace);
  j["config"] = config_to_json(config);
  const std::string text = j.dump(2) + "\n";
  if (a.out.empty())
    out << text;
  else
    write_text(a.out, text);
  return kExitOk;
}

// --------------------------------------------------------------------------
// report

struct ReportArgs {
  std::string in, format = "json", out;
};

nlohmann::json scenario_series(const nlohmann::json &trace) {
  nlohmann::json series = {{"t", nlohmann::json::array()},
                           {"true_completion", nlohmann::json::array()},
                           {"observation", nlohmann::json::array()},
                           {"announcement", nlohmann::json::array()},
                           {"belief_mode", nlohmann::json::array()}};
  for (const auto &step : trace.at("steps")) {
    series["t"].push_back(step.at("t"));
    series["true_completion"].push_back(step.at("true_completion"));
    series["observation"].push_back(step.at("observation"));
    series["announcement"].push_back(step.at("action"));
    series["belief_mode"].push_back(step.at("belief_mode"));
  }
  return series;
}

nlohmann::json collate(const fs::path &dir) {
  if (!fs::is_directory(dir))
    throw IoError("input directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto &entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  nlohmann::json batches = nlohmann::json::array();
  nlohmann::json sweeps = nlohmann::json::array();
  nlohmann::json scenarios = nlohmann::json::array();
  for (const auto &path : files) {
    std::ifstream in(path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("type"))
      continue;
    const std::string file = path.filename().string();
    const std::string type = doc["type"].is_string() ? doc["type"].get<std::string>() : "";
    if (type == "batch") {
      batches.push_back({{"file", file},
                         {"episodes", doc.at("episodes")},
                         {"seed", doc.at("seed")},
                         {"policies", doc.at("policies")}});
    } else if (type == "sweep") {
      sweeps.push_back({{"file", file},
                        {"points", doc.at("points")},
                        {"frontier", doc.at("frontier")},
                        {"baselines", doc.at("baselines")}});
    } else if (type == "scenario") {
      scenarios.push_back({{"file", file},
                           {"policy", doc.at("policy")},
                           {"initial_completion", doc.at("initial_completion")},
                           {"final_completion", doc.at("final_completion")},
                           {"completion_increase", doc.at("completion_increase")},
                           {"series", scenario_series(doc)}});
    }
  }
  if (batches.empty() && sweeps.empty() && scenarios.empty())
    throw IoError("no batch, sweep or scenario outputs in " + dir.string());
  return {{"batch", batches}, {"sweep", sweeps}, {"scenario", scenarios}};
}

/// Long format: figure,source,policy,index,quantity,value
std::string report_csv(const nlohmann::json &report) {
  std::ostringstream out;
  out << "figure,source,policy,index,quantity,value\n";
  auto row = [&](std::string_view figure, const std::string &source, const std::string &policy,
                 std::size_t index, std::string_view quantity, const nlohmann::json &value) {
    out << figure << ',' << source << ',' << policy << ',' << index << ',' << quantity << ','
        << value.dump() << '\n';
  };
  for (const auto &b : report["batch"]) {
    const std::string file = b["file"];
    for (const auto &p : b["policies"])
      for (const char *q : {"mean_reward", "reward_standard_error", "mean_changes",
                            "mean_completion_increase", "mean_step_error",
                            "mean_cumulative_error"})
        row("policy_comparison", file, p["policy"], 0, q, p[q]);
  }
  for (const auto &s : report["sweep"]) {
    const std::string file = s["file"];
    std::size_t i = 0;
    for (const auto &p : s["points"]) {
      for (const char *q : {"lambda_e", "lambda_c", "mean_error", "mean_changes"})
        row("pareto", file, "qmdp", i, q, p[q]);
      ++i;
    }
    i = 0;
    for (const auto &p : s["frontier"]) {
      for (const char *q : {"lambda_e", "lambda_c", "mean_error", "mean_changes"})
        row("pareto_frontier", file, "qmdp", i, q, p[q]);
      ++i;
    }
    for (const auto &p : s["baselines"])
      for (const char *q : {"mean_error", "mean_changes"})
        row("pareto_baseline", file, p["policy"], 0, q, p[q]);
  }
  for (const auto &sc : report["scenario"]) {
    const std::string file = sc["file"];
    const std::string policy = sc["policy"];
    const auto &series = sc["series"];
    for (std::size_t i = 0; i < series["t"].size(); ++i)
      for (const char *q : {"true_completion", "observation", "announcement", "belief_mode"})
        row("scenario", file, policy, series["t"][i].get<std::size_t>(), q, series[q][i]);
  }
  return out.str();
}

int cmd_report(const ReportArgs &a, std::ostream &out) {
  const auto report = collate(a.in);
  const std::string text = a.format == "csv" ? report_csv(report) : report.dump(2) + "\n";
  if (a.out.empty())
    out << text;
  else
    write_text(a.out, text);
  return kExitOk;
}

// --------------------------------------------------------------------------
// serve

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string policies_dir, snapshot;
};

std::atomic<httplib::Server *> g_server{nullptr};

extern "C" void stop_server(int) {
  if (auto *s = g_server.load())
    s->stop();
}

int cmd_serve(const ServeArgs &a, std::ostream &out, std::ostream &err) {
  AdvisorService service(a.policies_dir);
  httplib::Server server;
  install_routes(server, service);
  if (!server.bind_to_port(a.host, a.port)) {
    err << "error: cannot listen on " << a.host << ':' << a.port << '\n';
    return kExitRuntime;
  }
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  out << "listening on http://" << a.host << ':' << a.port << std::endl;
  server.listen_after_bind();
  g_server = nullptr;
  if (!a.snapshot.empty())
    service.snapshot(a.snapshot);
  return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Plan project completion announcements under uncertainty"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto *solve_cmd = app.add_subcommand("solve", "solve a policy and write it to a file");
  solve_cmd->add_option("--config", solve.config, "config file or preset name")->required();
  solve_cmd->add_option("--solver", solve.solver, "qmdp | sarsop")->required();
  solve_cmd->add_option("--out", solve.out, "policy file to write")->required();
  solve_cmd->add_flag("--allow-nonconverged", solve.allow_nonconverged,
                      "exit 0 even if the solver stopped early");
  add_solver_flags(solve_cmd, solve.flags);
  add_workers_flag(solve_cmd, solve.flags.workers);

  // Solving on the fly stops on a trial count, not the clock, so repeated
  // runs produce identical policies.
  SolverFlags on_the_fly;
  on_the_fly.time_budget = 3600.0;
  on_the_fly.max_trials = 1000;

  SimulateArgs sim;
  sim.flags = on_the_fly;
  auto *sim_cmd = app.add_subcommand("simulate", "run a common-random-number batch");
  sim_cmd->add_option("--config", sim.config, "config file or preset name")->required();
  sim_cmd->add_option("--policies", sim.policies, "comma list of policy names or files")
      ->required();
  sim_cmd->add_option("--episodes", sim.episodes, "episodes per policy")
      ->required()
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", sim.seed, "master seed");
  sim_cmd->add_option("--out-dir", sim.out_dir, "directory for episodes.csv and summary.json")
      ->required();
  add_solver_flags(sim_cmd, sim.flags);
  add_workers_flag(sim_cmd, sim.flags.workers);

  SweepArgs sweep;
  auto *sweep_cmd = app.add_subcommand("sweep", "Pareto sweep over lambda_e x lambda_c");
  sweep_cmd->add_option("--config", sweep.config, "config file or preset name")->required();
  sweep_cmd->add_option("--grid", sweep.grid, "comma list of weights")->required();
  sweep_cmd->add_option("--episodes", sweep.episodes, "episodes per cell")
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--seed", sweep.seed, "master seed");
  sweep_cmd->add_option("--out-dir", sweep.out_dir, "directory for sweep.csv and sweep.json")
      ->required();
  add_solver_flags(sweep_cmd, sweep.flags);
  add_workers_flag(sweep_cmd, sweep.flags.workers);

  ReportArgs report;
  auto *report_cmd = app.add_subcommand("report", "collate outputs into plot-ready series");
  report_cmd->add_option("--in", report.in, "directory with simulate/sweep/scenario outputs")
      ->required();
  report_cmd->add_option("--format", report.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  report_cmd->add_option("--out", report.out, "output file (default: standard output)");

  ScenarioArgs scenario;
  scenario.flags = on_the_fly;
  auto *scenario_cmd =
      app.add_subcommand("scenario", "trace one episode with a pinned initial completion");
  scenario_cmd->add_option("--config", scenario.config, "config file or preset name")->required();
  scenario_cmd->add_option("--policy", scenario.policy, "policy name or file")->required();
  scenario_cmd->add_option("--initial-completion", scenario.initial_completion,
                           "true completion week at the start")
      ->required();
  scenario_cmd->add_option("--seed", scenario.seed, "replay seed");
  scenario_cmd->add_option("--out", scenario.out, "output file (default: standard output)");
  add_solver_flags(scenario_cmd, scenario.flags);
  add_workers_flag(scenario_cmd, scenario.flags.workers);

  ServeArgs serve;
  auto *serve_cmd = app.add_subcommand("serve", "run the advisor HTTP service");
  serve_cmd->add_option("--host", serve.host, "bind address");
  serve_cmd->add_option("--port", serve.port, "port")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--policies-dir", serve.policies_dir, "precomputed policy files");
  serve_cmd->add_option("--snapshot", serve.snapshot, "write sessions here on shutdown");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp &e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp &e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "usage error: " << e.what() << '\n';
    for (auto *sub : app.get_subcommands())
      err << sub->help();
    return kExitUsage;
  }

  try {
    if (*solve_cmd)
      return cmd_solve(solve, out);
    if (*sim_cmd)
      return cmd_simulate(sim, out);
    if (*sweep_cmd)
      return cmd_sweep(sweep, out);
    if (*report_cmd)
      return cmd_report(report, out);
    if (*scenario_cmd)
      return cmd_scenario(scenario, out);
    if (*serve_cmd)
      return cmd_serve(serve, out, err);
  } catch (const UsageError &e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidConfig &e) {
    err << "error: InvalidConfig: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const Error &e) {
    err << "error: " << e.kind() << ": " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

} // namespace announce
