#pragma once

#include "announce/model.hpp"
#include "announce/policy.hpp"

#include <functional>
#include <limits>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace announce {

struct SolveReport {
  std::size_t iterations = 0;
  double residual = 0.0; // max Bellman change (QMDP) or bound gap (point-based)
  double wall_time = 0.0;
  std::optional<std::pair<double, double>> bounds; // (lower, upper) at the initial belief
  bool converged = true;
  std::string status = "converged"; // converged | NonConvergence | TimeBudgetExceeded | TrialLimit
};

nlohmann::json report_to_json(const SolveReport &report);

struct Solution {
  Policy policy;
  SolveReport report;
};

struct QmdpOptions {
  double tol = 1e-6;
  std::size_t max_iter = 10000;
  unsigned workers = 1;
  /// Called after each sweep with the current value function over states.
  std::function<void(std::size_t sweep, std::span<const double> values)> on_sweep;
};

/// Jacobi value iteration on the fully observable MDP. Emits one alpha vector
/// per announcement with alpha_a(s) = Q(s, a). Non-convergence within
/// max_iter is reported, not thrown.
Solution solve_qmdp(const Model &model, const QmdpOptions &options = {});

struct PointBasedOptions {
  double precision = 1e-3;
  double time_budget = 600.0; // seconds
  std::size_t max_trials = std::numeric_limits<std::size_t>::max();
  QmdpOptions qmdp;
  /// Called after each trial with (lower, upper) at the initial belief.
  std::function<void(std::size_t trial, double lower, double upper)> on_trial;
};

/// Point-based solver on the factored (observable state, belief over the
/// completion time) representation. Trials sample beliefs forward from the
/// initial belief, steering toward the largest weighted bound gap, and back
/// up both bounds along the way. Lower bound: per-observable alpha vectors.
/// Upper bound: the QMDP value capped by sawtooth interpolation over
/// backed-up belief points.
Solution solve_point_based(const Model &model, const PointBasedOptions &options = {});

} // namespace announce
