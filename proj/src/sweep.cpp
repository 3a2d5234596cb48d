#include "announce/sweep.hpp"

#include "announce/error.hpp"
#include "announce/parallel.hpp"
#include "announce/sim.hpp"
#include "announce/solvers.hpp"

#include <algorithm>

namespace announce {

SweepResult pareto_sweep(const ProblemConfig &base, std::span<const double> grid,
                         const SweepOptions &options) {
  if (grid.empty())
    throw InvalidArgument("sweep grid is empty");
  base.validate();
  const std::size_t cells = grid.size() * grid.size();
  SweepResult result;
  result.points.resize(cells);

  // Cells run in parallel; each solve and batch is single-threaded inside.
  parallel_for(cells, resolve_workers(options.workers), [&](std::size_t i) {
    ProblemConfig cfg = base;
    cfg.lambda_e = grid[i / grid.size()];
    cfg.lambda_c = grid[i % grid.size()];
    const Model model(cfg);
    QmdpOptions qo;
    qo.tol = options.tol;
    qo.max_iter = options.max_iter;
    Solution sol = solve_qmdp(model, qo);
    const std::vector<Policy> policies{std::move(sol.policy)};
    const std::vector<std::string> labels{"qmdp"};
    const BatchResult batch =
        run_batch(model, policies, labels, options.n_runs, options.master_seed, 1);
    const auto &s = batch.summaries.front();
    result.points[i] = {cfg.lambda_e, cfg.lambda_c, s.mean_step_error,
                        s.mean_cumulative_error, s.mean_changes, sol.report.converged};
  });

  const Model model(base);
  const std::vector<Policy> baselines{Policy::baseline(PolicyKind::last_observed, base),
                                      Policy::baseline(PolicyKind::most_likely, base)};
  const std::vector<std::string> labels{"observedtime", "mostlikely"};
  const BatchResult batch = run_batch(model, baselines, labels, options.n_runs,
                                      options.master_seed, options.workers);
  for (const auto &s : batch.summaries)
    result.baselines.push_back(
        {s.policy, s.mean_step_error, s.mean_cumulative_error, s.mean_changes});
  return result;
}

bool dominates(const SweepPoint &p, const SweepPoint &q) {
  return p.mean_error <= q.mean_error && p.mean_changes <= q.mean_changes &&
         (p.mean_error < q.mean_error || p.mean_changes < q.mean_changes);
}

std::vector<SweepPoint> pareto_frontier(std::span<const SweepPoint> points) {
  std::vector<SweepPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const SweepPoint &a, const SweepPoint &b) {
    if (a.mean_error != b.mean_error)
      return a.mean_error < b.mean_error;
    if (a.mean_changes != b.mean_changes)
      return a.mean_changes < b.mean_changes;
    if (a.lambda_e != b.lambda_e)
      return a.lambda_e < b.lambda_e;
    return a.lambda_c < b.lambda_c;
  });
  // After sorting by error, a point is on the frontier iff its change count
  // is strictly below every earlier point's.
  std::vector<SweepPoint> frontier;
  for (const auto &p : sorted) {
    if (!frontier.empty() && p.mean_changes >= frontier.back().mean_changes)
      continue;
    frontier.push_back(p);
  }
  return frontier;
}

void write_sweep_csv(std::ostream &out, const SweepResult &result) {
  const auto frontier = pareto_frontier(result.points);
  auto on_frontier = [&](const SweepPoint &p) {
    return std::any_of(frontier.begin(), frontier.end(), [&](const SweepPoint &f) {
      return f.lambda_e == p.lambda_e && f.lambda_c == p.lambda_c &&
             f.mean_error == p.mean_error && f.mean_changes == p.mean_changes;
    });
  };
  out << "lambda_e,lambda_c,mean_error,mean_changes,on_frontier\n";
  for (const auto &p : result.points)
    out << format_number(p.lambda_e) << ',' << format_number(p.lambda_c) << ','
        << format_number(p.mean_error) << ',' << format_number(p.mean_changes) << ','
        << (on_frontier(p) ? 1 : 0) << '\n';
}

nlohmann::json sweep_to_json(const SweepResult &result) {
  auto point_json = [](const SweepPoint &p) {
    return nlohmann::json{{"lambda_e", p.lambda_e},
                          {"lambda_c", p.lambda_c},
                          {"mean_error", p.mean_error},
                          {"mean_cumulative_error", p.mean_cumulative_error},
                          {"mean_changes", p.mean_changes},
                          {"converged", p.converged}};
  };
  nlohmann::json points = nlohmann::json::array();
  for (const auto &p : result.points)
    points.push_back(point_json(p));
  nlohmann::json frontier = nlohmann::json::array();
  for (const auto &p : pareto_frontier(result.points))
    frontier.push_back(point_json(p));
  nlohmann::json baselines = nlohmann::json::array();
  for (const auto &b : result.baselines)
    baselines.push_back({{"policy", b.policy},
                         {"mean_error", b.mean_error},
                         {"mean_cumulative_error", b.mean_cumulative_error},
                         {"mean_changes", b.mean_changes}});
  return {{"type", "sweep"},
          {"points", std::move(points)},
          {"frontier", std::move(frontier)},
          {"baselines", std::move(baselines)}};
}

} // namespace announce
