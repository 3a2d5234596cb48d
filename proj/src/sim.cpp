#include "announce/sim.hpp"

#include "announce/error.hpp"
#include "announce/parallel.hpp"
#include "announce/policies.hpp"
#include "announce/truncated_normal.hpp"

#include <charconv>
#include <cmath>
#include <random>

namespace announce {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Uniform in the open interval (0, 1) with 53-bit resolution.
double open_unit(std::mt19937_64 &rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

} // namespace

std::string format_number(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

ReplayStream ReplayStream::generate(std::uint64_t master_seed, std::uint64_t episode,
                                    int t_max) {
  ReplayStream r;
  r.seed = splitmix64(master_seed ^ splitmix64(episode));
  std::mt19937_64 rng(r.seed);
  r.initial_draw = open_unit(rng);
  const auto weeks = static_cast<std::size_t>(t_max + 1);
  r.observation_quantiles.resize(weeks);
  r.delay_quantiles.resize(weeks);
  for (std::size_t t = 0; t < weeks; ++t) {
    r.observation_quantiles[t] = open_unit(rng);
    r.delay_quantiles[t] = open_unit(rng);
  }
  return r;
}

double EpisodeRecord::mean_step_error() const {
  return pre_completion_steps > 0
             ? static_cast<double>(cumulative_error) / pre_completion_steps
             : 0.0;
}

double MetricsSummary::reward_standard_error() const {
  return n_episodes > 0 ? std_reward / std::sqrt(static_cast<double>(n_episodes)) : 0.0;
}

EpisodeRecord run_episode(const Model &model, const Policy &policy,
                          const ReplayStream &replay, std::optional<int> pinned_initial,
                          std::vector<Belief> *beliefs) {
  if (policy.fingerprint() != config_fingerprint(model.config()))
    throw ConfigMismatch("policy fingerprint " + policy.fingerprint() +
                         " does not match the simulated config");
  const int n = model.num_completions();
  if (replay.observation_quantiles.size() < static_cast<std::size_t>(model.t_max() + 1) ||
      replay.delay_quantiles.size() < static_cast<std::size_t>(model.t_max() + 1))
    throw InvalidArgument("replay stream shorter than the horizon");

  EpisodeRecord rec;
  rec.seed = replay.seed;
  int y = pinned_initial.value_or(
      model.t_min() + std::min(n - 1, static_cast<int>(replay.initial_draw * n)));
  if (!model.valid_completion(y))
    throw InvalidArgument("initial completion outside [t_min, t_max]");
  rec.initial_completion = y;

  ObservableState x{0, model.t_min()};
  Belief belief = initial_belief(model);
  std::vector<int> history;
  int previous_action = 0;
  double discount = 1.0;

  for (int t = 0;; ++t) {
    const auto u = replay.observation_quantiles[static_cast<std::size_t>(t)];
    const int o = model.t_min() + static_cast<int>(inverse_cdf_index(model.observation_row(x.t, y), u));
    const bool completed = x.t >= y;
    if (t == 0)
      belief = condition_on_observation(model, belief, {o});
    else
      belief = update_or_predict(model, belief, {previous_action}, {o}, completed);
    history.push_back(o);
    if (beliefs)
      beliefs->push_back(belief);

    const int a = evaluate(policy, x, belief, history).announce;
    const double r = model.reward_of(x.t, x.prev_announce, y, a);
    rec.steps.push_back({x.t, y, o, a, r});
    rec.total_reward += discount * r;
    rec.undiscounted_reward += r;
    discount *= model.discount();
    if (t > 0 && a != previous_action)
      ++rec.num_changes;
    if (x.t < y) {
      rec.cumulative_error += std::abs(a - y);
      ++rec.pre_completion_steps;
    }
    previous_action = a;

    if (completed || x.t == model.t_max())
      break;
    const ObservableState next = model.transition_observable(x, {y}, {a});
    const HiddenTransition k = model.hidden_kernel(x.t, x.prev_announce, y, a);
    const double v = replay.delay_quantiles[static_cast<std::size_t>(t)];
    std::array<double, 3> mass{};
    for (int i = 0; i < k.size; ++i)
      mass[static_cast<std::size_t>(i)] = k.probability[static_cast<std::size_t>(i)];
    y = k.completion[inverse_cdf_index(std::span<const double>(mass.data(), static_cast<std::size_t>(k.size)), v)];
    x = next;
  }
  rec.final_completion = y;
  rec.completion_increase = rec.final_completion - rec.initial_completion;
  return rec;
}

MetricsSummary summarize(std::string name, std::span<const EpisodeRecord> episodes) {
  MetricsSummary s;
  s.policy = std::move(name);
  s.n_episodes = episodes.size();
  if (episodes.empty())
    return s;
  const double count = static_cast<double>(episodes.size());
  for (const auto &e : episodes) {
    s.mean_reward += e.total_reward;
    s.mean_undiscounted_reward += e.undiscounted_reward;
    s.mean_changes += e.num_changes;
    s.mean_completion_increase += e.completion_increase;
    s.mean_cumulative_error += e.cumulative_error;
    s.mean_step_error += e.mean_step_error();
  }
  s.mean_reward /= count;
  s.mean_undiscounted_reward /= count;
  s.mean_changes /= count;
  s.mean_completion_increase /= count;
  s.mean_cumulative_error /= count;
  s.mean_step_error /= count;
  if (episodes.size() > 1) {
    double ss = 0.0;
    for (const auto &e : episodes)
      ss += (e.total_reward - s.mean_reward) * (e.total_reward - s.mean_reward);
    s.std_reward = std::sqrt(ss / (count - 1.0));
  }
  return s;
}

BatchResult run_batch(const Model &model, std::span<const Policy> policies,
                      std::span<const std::string> labels, std::size_t n,
                      std::uint64_t master_seed, unsigned workers) {
  if (n == 0)
    throw InvalidArgument("a batch needs at least one episode");
  if (labels.size() != policies.size())
    throw InvalidArgument("one label per policy required");
  for (const auto &p : policies)
    if (p.fingerprint() != config_fingerprint(model.config()))
      throw ConfigMismatch("policy '" + std::string(cli_name(p.kind())) +
                           "' was solved for a different config");
  BatchResult out;
  out.labels.assign(labels.begin(), labels.end());
  out.episodes.assign(policies.size(), std::vector<EpisodeRecord>(n));
  parallel_for(n, resolve_workers(workers), [&](std::size_t i) {
    const ReplayStream replay = ReplayStream::generate(master_seed, i, model.t_max());
    for (std::size_t p = 0; p < policies.size(); ++p)
      out.episodes[p][i] = run_episode(model, policies[p], replay);
  });
  for (std::size_t p = 0; p < policies.size(); ++p)
    out.summaries.push_back(summarize(out.labels[p], out.episodes[p]));
  return out;
}

void write_episodes_csv(std::ostream &out, const BatchResult &batch) {
  out << "seed,policy,initial_completion,final_completion,total_reward,"
         "num_changes,completion_increase,cumulative_error\n";
  for (std::size_t p = 0; p < batch.episodes.size(); ++p)
    for (const auto &e : batch.episodes[p])
      out << e.seed << ',' << batch.labels[p] << ',' << e.initial_completion << ','
          << e.final_completion << ',' << format_number(e.total_reward) << ','
          << e.num_changes << ',' << e.completion_increase << ','
          << e.cumulative_error << '\n';
}

nlohmann::json summary_to_json(const MetricsSummary &s) {
  return {{"policy", s.policy},
          {"n_episodes", s.n_episodes},
          {"mean_reward", s.mean_reward},
          {"std_reward", s.std_reward},
          {"reward_standard_error", s.reward_standard_error()},
          {"mean_undiscounted_reward", s.mean_undiscounted_reward},
          {"mean_changes", s.mean_changes},
          {"mean_completion_increase", s.mean_completion_increase},
          {"mean_cumulative_error", s.mean_cumulative_error},
          {"mean_step_error", s.mean_step_error}};
}

ScenarioTrace scenario_trace(const Model &model, const Policy &policy,
                             int fixed_initial_completion, std::uint64_t seed) {
  if (!model.valid_completion(fixed_initial_completion))
    throw InvalidArgument("pinned completion outside [t_min, t_max]");
  ScenarioTrace trace;
  trace.policy = std::string(cli_name(policy.kind()));
  const ReplayStream replay = ReplayStream::generate(seed, 0, model.t_max());
  trace.record = run_episode(model, policy, replay, fixed_initial_completion, &trace.beliefs);
  return trace;
}

nlohmann::json scenario_to_json(const ScenarioTrace &trace) {
  const auto &r = trace.record;
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const auto &s = r.steps[i];
    steps.push_back({{"t", s.t},
                     {"true_completion", s.true_completion},
                     {"observation", s.observation},
                     {"action", s.action},
                     {"reward", s.reward},
                     {"belief_mode", most_likely_completion(trace.beliefs[i]).true_completion},
                     {"belief", belief_to_json(trace.beliefs[i])}});
  }
  return {{"type", "scenario"},
          {"policy", trace.policy},
          {"seed", r.seed},
          {"initial_completion", r.initial_completion},
          {"final_completion", r.final_completion},
          {"total_reward", r.total_reward},
          {"undiscounted_reward", r.undiscounted_reward},
          {"num_changes", r.num_changes},
          {"completion_increase", r.completion_increase},
          {"cumulative_error", r.cumulative_error},
          {"steps", std::move(steps)}};
}

} // namespace announce
