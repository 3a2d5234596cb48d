#pragma once

#include "announce/belief.hpp"
#include "announce/model.hpp"
#include "announce/policy.hpp"

#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace announce {

/// Per-episode randomness shared by every policy under comparison. Policies
/// consume the same quantiles, so identical announcements give identical
/// trajectories even when the hidden states of different policies diverge.
struct ReplayStream {
  std::uint64_t seed = 0;
  double initial_draw = 0.5;
  std::vector<double> observation_quantiles; // indexed by week, in (0, 1)
  std::vector<double> delay_quantiles;       // indexed by week, in (0, 1)

  static ReplayStream generate(std::uint64_t master_seed, std::uint64_t episode,
                               int t_max);
};

struct EpisodeStep {
  int t = 0;
  int true_completion = 0;
  int observation = 0;
  int action = 0;
  double reward = 0.0;
};

struct EpisodeRecord {
  std::uint64_t seed = 0;
  std::vector<EpisodeStep> steps;
  int initial_completion = 0;
  int final_completion = 0;
  double total_reward = 0.0;        // discounted
  double undiscounted_reward = 0.0;
  int num_changes = 0;
  int completion_increase = 0;
  int cumulative_error = 0;         // sum of |announce - truth| before completion
  int pre_completion_steps = 0;

  /// cumulative_error per pre-completion step.
  double mean_step_error() const;
};

struct MetricsSummary {
  std::string policy;
  std::size_t n_episodes = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0; // sample standard deviation
  double mean_undiscounted_reward = 0.0;
  double mean_changes = 0.0;
  double mean_completion_increase = 0.0;
  double mean_cumulative_error = 0.0;
  double mean_step_error = 0.0;

  double reward_standard_error() const;
};

/// Simulates one episode. Each week: the estimate is drawn by inverse CDF at
/// the week's observation quantile, the belief is filtered, the policy
/// announces, the reward is accrued and the hidden completion advances by
/// inverse CDF at the week's delay quantile. Ends after the announcement made
/// in the completion week. `pinned_initial` overrides the initial draw.
/// Belief snapshots (one per week, after filtering) go to `beliefs` if given.
EpisodeRecord run_episode(const Model &model, const Policy &policy,
                          const ReplayStream &replay,
                          std::optional<int> pinned_initial = std::nullopt,
                          std::vector<Belief> *beliefs = nullptr);

MetricsSummary summarize(std::string name, std::span<const EpisodeRecord> episodes);

struct BatchResult {
  std::vector<std::string> labels;
  std::vector<std::vector<EpisodeRecord>> episodes; // [policy][episode]
  std::vector<MetricsSummary> summaries;
};

/// Episode i uses ReplayStream(master_seed, i) for every policy. Results do
/// not depend on `workers`.
BatchResult run_batch(const Model &model, std::span<const Policy> policies,
                      std::span<const std::string> labels, std::size_t n,
                      std::uint64_t master_seed, unsigned workers = 1);

/// Columns: seed, policy, initial_completion, final_completion, total_reward,
/// num_changes, completion_increase, cumulative_error.
void write_episodes_csv(std::ostream &out, const BatchResult &batch);
nlohmann::json summary_to_json(const MetricsSummary &summary);

struct ScenarioTrace {
  std::string policy;
  EpisodeRecord record;
  std::vector<Belief> beliefs;
};

/// run_episode with the initial completion pinned and beliefs captured.
ScenarioTrace scenario_trace(const Model &model, const Policy &policy,
                             int fixed_initial_completion, std::uint64_t seed);

nlohmann::json scenario_to_json(const ScenarioTrace &trace);

/// Shortest round-trip decimal form of v.
std::string format_number(double v);

} // namespace announce
