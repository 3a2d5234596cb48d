#pragma once

#include "announce/belief.hpp"
#include "announce/error.hpp"
#include "announce/model.hpp"
#include "announce/policy.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace httplib {
class Server;
}

namespace announce {

#define ANNOUNCE_SERVICE_ERROR(Name)                                           \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string &message) : Error(#Name, message) {}       \
  }

ANNOUNCE_SERVICE_ERROR(SessionNotFound);
ANNOUNCE_SERVICE_ERROR(SessionCompleted);
ANNOUNCE_SERVICE_ERROR(OutOfRange);
ANNOUNCE_SERVICE_ERROR(WrongPhase);
ANNOUNCE_SERVICE_ERROR(UnknownPolicy);
ANNOUNCE_SERVICE_ERROR(SolveUnavailable);

#undef ANNOUNCE_SERVICE_ERROR

/// Limits for solving a policy when no precomputed one matches the config.
struct OnDemandLimits {
  std::size_t qmdp_max_states = 20000;     // covers the medium preset
  std::size_t point_based_max_states = 2100; // covers the small preset
  double point_based_time_budget = 30.0;
  std::size_t point_based_max_trials = 200;
};

/// Weekly advisor: each session tracks the belief over the completion time
/// for one project, recommends announcements and records what the human
/// actually announced. Sessions are independent; calls on one session are
/// serialized.
class AdvisorService {
public:
  explicit AdvisorService(std::filesystem::path policies_dir = {},
                          OnDemandLimits limits = {});

  /// Returns the new session id.
  std::string create_session(const ProblemConfig &config, std::string_view policy_kind);

  nlohmann::json session_view(const std::string &id) const;

  /// Filters the week's estimate and returns the recommendation payload.
  nlohmann::json submit_observation(const std::string &id, int estimate, bool completed);

  /// Records the announcement and advances the week (or closes the session
  /// when completion was reported). Returns the session view.
  nlohmann::json submit_announcement(const std::string &id, int announce);

  nlohmann::json list_policies() const;

  /// Writes every session view to `path` as a JSON array.
  void snapshot(const std::filesystem::path &path) const;

private:
  struct Session;
  struct PolicyEntry {
    PolicyKind kind;
    std::string fingerprint;
    std::filesystem::path path;
  };

  std::shared_ptr<Session> find(const std::string &id) const;
  std::shared_ptr<const Policy> obtain_policy(const ProblemConfig &config, PolicyKind kind);
  static nlohmann::json view_locked(const Session &s);

  OnDemandLimits limits_;
  std::vector<PolicyEntry> precomputed_;
  mutable std::mutex policy_mutex_;
  std::map<std::pair<PolicyKind, std::string>, std::shared_ptr<const Policy>> policy_cache_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

/// Registers the HTTP+JSON endpoints on `server`.
void install_routes(httplib::Server &server, AdvisorService &service);

} // namespace announce
