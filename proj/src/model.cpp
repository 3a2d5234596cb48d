#include "announce/model.hpp"

#include "announce/error.hpp"
#include "announce/truncated_normal.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>

namespace announce {

void ProblemConfig::validate() const {
  auto fail = [](const std::string &what) { throw InvalidConfig(what); };
  if (t_min < 2 || t_min >= t_max)
    fail("require 2 <= t_min < t_max");
  if (!(discount >= 0.0 && discount < 1.0))
    fail("require 0 <= discount < 1");
  if (!(lambda_e >= 0.0) || !(lambda_c >= 0.0) || !(lambda_f >= 0.0))
    fail("reward weights must be non-negative");
  if (!(p_none >= 0.0) || !(p_small >= 0.0) || !(p_large >= 0.0))
    fail("delay probabilities must be non-negative");
  if (std::abs(p_none + p_small + p_large - 1.0) > 1e-12)
    fail("delay probabilities must sum to 1");
  if (delta_small < 1 || delta_small >= delta_large)
    fail("require 0 < delta_small < delta_large");
}

ProblemConfig ProblemConfig::preset(std::string_view name) {
  ProblemConfig c;
  if (name == "small")
    c.t_max = 13;
  else if (name == "medium")
    c.t_max = 26;
  else if (name == "large")
    c.t_max = 39;
  else if (name == "extra-large" || name == "xl")
    c.t_max = 52;
  else
    throw InvalidConfig("unknown preset '" + std::string(name) + "'");
  return c;
}

std::string config_fingerprint(const ProblemConfig &c) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "t_min=%d;t_max=%d;discount=%.17g;lambda_e=%.17g;"
                "lambda_c=%.17g;lambda_f=%.17g;p_none=%.17g;p_small=%.17g;"
                "p_large=%.17g;delta_small=%d;delta_large=%d",
                c.t_min, c.t_max, c.discount, c.lambda_e, c.lambda_c,
                c.lambda_f, c.p_none, c.p_small, c.p_large, c.delta_small,
                c.delta_large);
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char *p = buf; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 0x100000001b3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

void HiddenTransition::add(int value, double p) {
  for (int i = 0; i < size; ++i) {
    if (completion[i] == value) {
      probability[i] += p;
      return;
    }
  }
  completion[size] = value;
  probability[size] = p;
  ++size;
}

double HiddenTransition::probability_of(int value) const {
  for (int i = 0; i < size; ++i)
    if (completion[i] == value)
      return probability[i];
  return 0.0;
}

Model::Model(ProblemConfig config)
    : config_(config), n_(config.num_completions()) {
  config_.validate();
  const std::size_t n = static_cast<std::size_t>(n_);
  observation_table_.assign(static_cast<std::size_t>(config_.t_max + 1) * n * n,
                            0.0);
  for (int t = 0; t <= config_.t_max; ++t) {
    for (int y = config_.t_min; y <= config_.t_max; ++y) {
      auto row = observation_distribution({t, config_.t_min}, {y});
      std::copy(row.begin(), row.end(),
                observation_table_.begin() +
                    static_cast<std::ptrdiff_t>(
                        (static_cast<std::size_t>(t) * n + (y - config_.t_min)) * n));
    }
  }
}

double Model::observation_sigma(int t, int true_completion) {
  return (true_completion - t) / 3.0;
}

std::vector<double> Model::observation_distribution(ObservableState next,
                                                    HiddenState y) const {
  require(next);
  require_completion(y.true_completion, "true completion");
  const double sigma = observation_sigma(next.t, y.true_completion);
  if (sigma <= kSigmaFloor) {
    std::vector<double> mass(static_cast<std::size_t>(n_), 0.0);
    mass[static_cast<std::size_t>(y.true_completion - config_.t_min)] = 1.0;
    return mass;
  }
  return discretized_truncated_normal(y.true_completion, sigma, config_.t_min,
                                      config_.t_max);
}

std::span<const double> Model::observation_row(int t, int true_completion) const {
  const std::size_t n = static_cast<std::size_t>(n_);
  const std::size_t offset =
      (static_cast<std::size_t>(t) * n + (true_completion - config_.t_min)) * n;
  return {observation_table_.data() + offset, n};
}

ObservableState Model::transition_observable(ObservableState x, HiddenState y,
                                             Action a) const {
  require(x);
  require_completion(y.true_completion, "true completion");
  require_completion(a.announce, "announcement");
  if (x.t >= y.true_completion)
    return {x.t, a.announce};
  return {x.t + 1, a.announce};
}

HiddenTransition Model::transition_hidden(ObservableState x, HiddenState y,
                                          Action a, ObservableState next) const {
  require(x);
  require(next);
  require_completion(y.true_completion, "true completion");
  require_completion(a.announce, "announcement");
  return hidden_kernel(x.t, x.prev_announce, y.true_completion, a.announce);
}

HiddenTransition Model::hidden_kernel(int t, int prev, int y, int a) const {
  HiddenTransition out;
  if (a == prev || t == 0 || t >= y) {
    out.add(y, 1.0);
    return out;
  }
  out.add(y, config_.p_none);
  out.add(std::min(y + config_.delta_small, config_.t_max), config_.p_small);
  out.add(std::min(y + config_.delta_large, config_.t_max), config_.p_large);
  return out;
}

double Model::reward(ObservableState x, HiddenState y, Action a) const {
  require(x);
  require_completion(y.true_completion, "true completion");
  require_completion(a.announce, "announcement");
  return reward_of(x.t, x.prev_announce, y.true_completion, a.announce);
}

double Model::reward_of(int t, int prev, int y, int a) const {
  if (t == config_.t_max - 1 || t > y)
    return 0.0;
  double cost = config_.lambda_e * std::abs(a - y);
  if (a != prev && a != y)
    cost += config_.lambda_c;
  if (t == y && a != y)
    cost += config_.lambda_f;
  return 0.0 - cost;
}

std::size_t Model::num_states() const {
  return num_observables() * static_cast<std::size_t>(n_);
}

std::size_t Model::num_observables() const {
  return static_cast<std::size_t>(config_.t_max + 1) * static_cast<std::size_t>(n_);
}

std::size_t Model::index_of(const State &s) const {
  require(s.observable);
  require_completion(s.hidden.true_completion, "true completion");
  return slice_offset(s.observable.t, s.observable.prev_announce) +
         static_cast<std::size_t>(s.hidden.true_completion - config_.t_min);
}

State Model::state_of(std::size_t index) const {
  if (index >= num_states())
    throw InvalidArgument("state index out of range");
  const std::size_t n = static_cast<std::size_t>(n_);
  const int y = static_cast<int>(index % n) + config_.t_min;
  return {observable_of(index / n), {y}};
}

std::size_t Model::observable_index(ObservableState x) const {
  require(x);
  return static_cast<std::size_t>(x.t) * static_cast<std::size_t>(n_) +
         static_cast<std::size_t>(x.prev_announce - config_.t_min);
}

ObservableState Model::observable_of(std::size_t index) const {
  if (index >= num_observables())
    throw InvalidArgument("observable index out of range");
  const std::size_t n = static_cast<std::size_t>(n_);
  return {static_cast<int>(index / n), static_cast<int>(index % n) + config_.t_min};
}

bool Model::valid(ObservableState x) const {
  return x.t >= 0 && x.t <= config_.t_max && valid_completion(x.prev_announce);
}

void Model::require(ObservableState x) const {
  if (!valid(x))
    throw InvalidArgument("observable state (" + std::to_string(x.t) + ", " +
                          std::to_string(x.prev_announce) + ") out of range");
}

void Model::require_completion(int weeks, const char *what) const {
  if (!valid_completion(weeks))
    throw InvalidArgument(std::string(what) + " " + std::to_string(weeks) +
                          " outside [t_min, t_max]");
}

} // namespace announce
