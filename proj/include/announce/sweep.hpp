#pragma once

#include "announce/model.hpp"

#include <cstdint>
#include <nlohmann/json.hpp>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace announce {

struct SweepPoint {
  double lambda_e = 0.0;
  double lambda_c = 0.0;
  double mean_error = 0.0;            // per pre-completion step, averaged over episodes
  double mean_cumulative_error = 0.0; // per episode
  double mean_changes = 0.0;
  bool converged = true;

  bool operator==(const SweepPoint &) const = default;
};

struct BaselinePoint {
  std::string policy;
  double mean_error = 0.0;
  double mean_cumulative_error = 0.0;
  double mean_changes = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points; // grid order: lambda_e outer, lambda_c inner
  std::vector<BaselinePoint> baselines;
};

struct SweepOptions {
  std::size_t n_runs = 100;
  std::uint64_t master_seed = 1;
  unsigned workers = 1;
  double tol = 1e-6;
  std::size_t max_iter = 10000;
};

/// QMDP policy per (lambda_e, lambda_c) in grid x grid, lambda_f held at the
/// base value, each evaluated on the same common-random-number batch. The
/// two baselines are evaluated on that batch as reference points.
SweepResult pareto_sweep(const ProblemConfig &base, std::span<const double> grid,
                         const SweepOptions &options);

/// True if p is no worse than q on both axes and better on one.
bool dominates(const SweepPoint &p, const SweepPoint &q);

/// Non-dominated subset in (mean_error, mean_changes), sorted by error.
/// Points equal on both axes collapse to the lexicographically smallest
/// (lambda_e, lambda_c).
std::vector<SweepPoint> pareto_frontier(std::span<const SweepPoint> points);

/// Columns: lambda_e, lambda_c, mean_error, mean_changes, on_frontier.
void write_sweep_csv(std::ostream &out, const SweepResult &result);
nlohmann::json sweep_to_json(const SweepResult &result);

} // namespace announce
