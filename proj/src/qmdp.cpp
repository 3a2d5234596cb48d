#include "announce/solvers.hpp"

#include "announce/error.hpp"
#include "announce/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace announce {

nlohmann::json report_to_json(const SolveReport &report) {
  nlohmann::json j = {{"iterations", report.iterations},
                      {"residual", report.residual},
                      {"wall_time", report.wall_time},
                      {"converged", report.converged},
                      {"status", report.status}};
  if (report.bounds)
    j["bounds"] = {{"lower", report.bounds->first}, {"upper", report.bounds->second}};
  else
    j["bounds"] = nullptr;
  return j;
}

Solution solve_qmdp(const Model &model, const QmdpOptions &options) {
  if (!(options.tol > 0.0))
    throw InvalidArgument("QMDP tolerance must be positive");
  const auto start = std::chrono::steady_clock::now();
  const int n = model.num_completions();
  const int t_min = model.t_min();
  const int t_max = model.t_max();
  const double gamma = model.discount();
  const std::size_t num_states = model.num_states();
  const auto num_actions = static_cast<std::size_t>(n);

  std::vector<double> value(num_states, 0.0), next(num_states, 0.0);
  std::vector<std::vector<double>> q(num_actions, std::vector<double>(num_states, 0.0));
  const unsigned workers = resolve_workers(options.workers);

  SolveReport report;
  report.residual = std::numeric_limits<double>::infinity();
  while (report.iterations < options.max_iter) {
    std::vector<double> chunk_residual(workers, 0.0);
    parallel_chunks(num_states, workers, [&](unsigned chunk, std::size_t begin, std::size_t end) {
      double residual = 0.0;
      for (std::size_t s = begin; s < end; ++s) {
        const std::size_t rest = s / static_cast<std::size_t>(n);
        const int y = static_cast<int>(s % static_cast<std::size_t>(n)) + t_min;
        const int prev = static_cast<int>(rest % static_cast<std::size_t>(n)) + t_min;
        const int t = static_cast<int>(rest / static_cast<std::size_t>(n));
        const int t_next = t >= y ? t : t + 1;
        double best = -std::numeric_limits<double>::infinity();
        for (int a = t_min; a <= t_max; ++a) {
          const HiddenTransition k = model.hidden_kernel(t, prev, y, a);
          const std::size_t offset = model.slice_offset(t_next, a);
          double future = 0.0;
          for (int i = 0; i < k.size; ++i)
            future += k.probability[i] * value[offset + static_cast<std::size_t>(k.completion[i] - t_min)];
          const double qa = model.reward_of(t, prev, y, a) + gamma * future;
          q[static_cast<std::size_t>(a - t_min)][s] = qa;
          best = std::max(best, qa);
        }
        next[s] = best;
        residual = std::max(residual, std::abs(best - value[s]));
      }
      chunk_residual[chunk] = residual;
    });
    value.swap(next);
    ++report.iterations;
    report.residual = *std::max_element(chunk_residual.begin(), chunk_residual.end());
    if (options.on_sweep)
      options.on_sweep(report.iterations, value);
    if (report.residual < options.tol)
      break;
  }
  report.converged = report.residual < options.tol;
  report.status = report.converged ? "converged" : "NonConvergence";

  std::vector<AlphaVector> alphas;
  alphas.reserve(num_actions);
  for (int a = t_min; a <= t_max; ++a)
    alphas.push_back({a, std::move(q[static_cast<std::size_t>(a - t_min)]), std::nullopt});
  Policy policy(PolicyKind::qmdp, model.config(), std::move(alphas));
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {std::move(policy), report};
}

} // namespace announce
