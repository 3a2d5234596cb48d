#pragma once

#include "announce/belief.hpp"
#include "announce/model.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace announce {

enum class PolicyKind { qmdp, point_based, last_observed, most_likely };

/// Name used inside policy files: qmdp | point_based | last_observed | most_likely.
std::string_view to_string(PolicyKind kind);
/// Command-line name: qmdp | sarsop | mostlikely | observedtime.
std::string_view cli_name(PolicyKind kind);
/// Accepts either spelling. Throws InvalidArgument otherwise.
PolicyKind parse_policy_kind(std::string_view name);

/// Linear value function tagged with the announcement it recommends.
/// QMDP vectors span every enumerated state; point-based vectors span the
/// completion times of one observable state.
struct AlphaVector {
  int action = 0;
  std::vector<double> values;
  std::optional<ObservableState> observable;

  bool operator==(const AlphaVector &) const = default;
};

class Policy {
public:
  /// Alpha-free policy for the two baselines.
  static Policy baseline(PolicyKind kind, const ProblemConfig &config);

  /// Validates vector shapes against `config` and indexes factored vectors.
  Policy(PolicyKind kind, const ProblemConfig &config,
         std::vector<AlphaVector> alphas);

  PolicyKind kind() const { return kind_; }
  const std::string &fingerprint() const { return fingerprint_; }
  int t_min() const { return t_min_; }
  int t_max() const { return t_max_; }
  std::span<const AlphaVector> alphas() const { return alphas_; }
  bool uses_alphas() const {
    return kind_ == PolicyKind::qmdp || kind_ == PolicyKind::point_based;
  }

  /// Entry k is the best value sum_y b(y) alpha(y) over vectors recommending
  /// announcement t_min + k at x; empty when no vector recommends it.
  std::vector<std::optional<double>> action_values(ObservableState x,
                                                   const Belief &b) const;

  /// Argmax of action_values. Ties (1e-9 relative) prefer keeping the
  /// previous announcement, then the earliest announcement.
  int best_action(ObservableState x, const Belief &b) const;

private:
  PolicyKind kind_;
  std::string fingerprint_;
  int t_min_;
  int t_max_;
  std::vector<AlphaVector> alphas_;
  std::vector<std::vector<std::size_t>> by_observable_; // point-based only
};

/// The value the policy assigns to the initial situation: uniform prior at
/// week 0, averaged over the first estimate received before announcing.
double initial_belief_value(const Model &model, const Policy &policy);

inline constexpr int kPolicyFormatVersion = 1;

/// JSON envelope {version, kind, config_fingerprint, alphas:[{action, values}]}.
/// Factored vectors carry an extra "observable": {t, prev_announce}.
void save_policy(const Policy &policy, const std::filesystem::path &path);

/// Throws FormatError on malformed content, ConfigMismatch when the stored
/// fingerprint differs from config_fingerprint(config).
Policy load_policy(const std::filesystem::path &path, const ProblemConfig &config);

/// Reads only the envelope header: (kind, fingerprint).
std::pair<PolicyKind, std::string> peek_policy(const std::filesystem::path &path);

} // namespace announce
