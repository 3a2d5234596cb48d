#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace announce {

/// Parameters of the announcement-control problem. Times are integer weeks.
struct ProblemConfig {
  int t_min = 2;
  int t_max = 13;
  double discount = 0.98;
  double lambda_e = 8.0;    // per-week announcement error
  double lambda_c = 2.0;    // changing to a wrong announcement
  double lambda_f = 1000.0; // wrong announcement at completion
  double p_none = 0.5;
  double p_small = 0.4;
  double p_large = 0.1;
  int delta_small = 1;
  int delta_large = 3;

  /// Throws InvalidConfig when an invariant does not hold.
  void validate() const;

  int num_completions() const { return t_max - t_min + 1; }

  /// small | medium | large | extra-large (alias xl).
  static ProblemConfig preset(std::string_view name);

  bool operator==(const ProblemConfig &) const = default;
};

/// Hex digest identifying a config; stored in policy files.
std::string config_fingerprint(const ProblemConfig &config);

struct ObservableState {
  int t = 0;
  int prev_announce = 0;
  auto operator<=>(const ObservableState &) const = default;
};

struct HiddenState {
  int true_completion = 0;
  auto operator<=>(const HiddenState &) const = default;
};

struct Action {
  int announce = 0;
  auto operator<=>(const Action &) const = default;
};

struct Observation {
  int estimate = 0;
  auto operator<=>(const Observation &) const = default;
};

struct State {
  ObservableState observable;
  HiddenState hidden;
  auto operator<=>(const State &) const = default;
};

/// Categorical successor distribution of the true completion time. At most
/// three support points; coinciding capped targets are merged.
struct HiddenTransition {
  std::array<int, 3> completion{};
  std::array<double, 3> probability{};
  int size = 0;

  void add(int value, double p);
  double probability_of(int value) const;
};

/// The announcement-control MOMDP. Immutable after construction; the
/// observation table is precomputed for every (t, true completion) pair.
class Model {
public:
  static constexpr double kSigmaFloor = 1e-6;

  explicit Model(ProblemConfig config);

  const ProblemConfig &config() const { return config_; }
  int t_min() const { return config_.t_min; }
  int t_max() const { return config_.t_max; }
  int num_completions() const { return n_; }
  double discount() const { return config_.discount; }

  /// Distribution of the estimate over [t_min, t_max] (index o - t_min).
  std::vector<double> observation_distribution(ObservableState next,
                                               HiddenState y) const;
  /// Same values as observation_distribution, served from the table.
  std::span<const double> observation_row(int t, int true_completion) const;
  /// Scale of the untruncated Gaussian; <= kSigmaFloor means point mass.
  static double observation_sigma(int t, int true_completion);

  ObservableState transition_observable(ObservableState x, HiddenState y,
                                        Action a) const;
  HiddenTransition transition_hidden(ObservableState x, HiddenState y,
                                     Action a, ObservableState next) const;
  double reward(ObservableState x, HiddenState y, Action a) const;

  // Unchecked integer forms used on hot paths.
  HiddenTransition hidden_kernel(int t, int prev, int y, int a) const;
  double reward_of(int t, int prev, int y, int a) const;

  // Row-major (t, prev_announce, true_completion) enumeration.
  std::size_t num_states() const;
  std::size_t num_observables() const;
  std::size_t index_of(const State &s) const;
  State state_of(std::size_t index) const;
  std::size_t observable_index(ObservableState x) const;
  ObservableState observable_of(std::size_t index) const;
  /// Index of (t, prev, t_min); the true-completion slice follows contiguously.
  std::size_t slice_offset(int t, int prev) const {
    return (static_cast<std::size_t>(t) * n_ + (prev - config_.t_min)) * n_;
  }

  bool valid(ObservableState x) const;
  bool valid_completion(int weeks) const {
    return weeks >= config_.t_min && weeks <= config_.t_max;
  }

private:
  void require(ObservableState x) const;
  void require_completion(int weeks, const char *what) const;

  ProblemConfig config_;
  int n_;
  std::vector<double> observation_table_; // [t][y][o]
};

} // namespace announce
