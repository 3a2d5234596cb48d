#include "announce/service.hpp"

#include "announce/config_io.hpp"
#include "announce/policies.hpp"
#include "announce/solvers.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <random>

namespace announce {

struct AdvisorService::Session {
  std::string id;
  ProblemConfig config;
  std::shared_ptr<const Model> model;
  std::shared_ptr<const Policy> policy;
  Belief belief;
  ObservableState observable;
  std::vector<int> observations;
  std::vector<int> announcements;
  std::vector<int> recommendations;
  bool pending_completion = false;
  bool awaiting_announcement = false;
  bool completed = false;
  mutable std::mutex mutex;

  Session(std::string id_, const ProblemConfig &cfg, std::shared_ptr<const Model> m,
          std::shared_ptr<const Policy> p)
      : id(std::move(id_)), config(cfg), model(std::move(m)), policy(std::move(p)),
        belief(initial_belief(*model)), observable(belief.observable()) {}
};

namespace {

std::string new_session_id() {
  static std::mutex m;
  static std::random_device device;
  static std::mt19937_64 rng(device());
  std::lock_guard lock(m);
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                static_cast<unsigned long long>(rng()));
  return buf;
}

// Five announcements around the mode, shifted inward at the edges.
std::vector<int> candidate_actions(const Belief &b, int prev) {
  const int mode = most_likely_completion(b).true_completion;
  const int width = std::min(5, b.t_max() - b.t_min() + 1);
  int first = std::clamp(mode - 2, b.t_min(), b.t_max() - width + 1);
  std::vector<int> out;
  for (int a = first; a < first + width; ++a)
    out.push_back(a);
  if (std::find(out.begin(), out.end(), prev) == out.end())
    out.push_back(prev);
  return out;
}

} // namespace

AdvisorService::AdvisorService(std::filesystem::path policies_dir, OnDemandLimits limits)
    : limits_(limits) {
  if (policies_dir.empty())
    return;
  if (!std::filesystem::is_directory(policies_dir))
    throw IoError("policies directory not found: " + policies_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto &entry : std::filesystem::directory_iterator(policies_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto &path : files) {
    try {
      auto [kind, fingerprint] = peek_policy(path);
      precomputed_.push_back({kind, fingerprint, path});
    } catch (const Error &e) {
      std::clog << "warning: skipping " << path << ": " << e.what() << '\n';
    }
  }
}

std::shared_ptr<const Policy> AdvisorService::obtain_policy(const ProblemConfig &config,
                                                            PolicyKind kind) {
  const std::string fingerprint = config_fingerprint(config);
  std::lock_guard lock(policy_mutex_);
  const auto key = std::make_pair(kind, fingerprint);
  if (auto it = policy_cache_.find(key); it != policy_cache_.end())
    return it->second;

  std::shared_ptr<const Policy> policy;
  if (kind == PolicyKind::last_observed || kind == PolicyKind::most_likely) {
    policy = std::make_shared<const Policy>(Policy::baseline(kind, config));
  } else {
    for (const auto &entry : precomputed_)
      if (entry.kind == kind && entry.fingerprint == fingerprint)
        policy = std::make_shared<const Policy>(load_policy(entry.path, config));
    if (!policy) {
      const Model model(config);
      const std::size_t states = model.num_states();
      if (kind == PolicyKind::qmdp && states <= limits_.qmdp_max_states) {
        policy = std::make_shared<const Policy>(solve_qmdp(model).policy);
      } else if (kind == PolicyKind::point_based && states <= limits_.point_based_max_states) {
        PointBasedOptions options;
        options.time_budget = limits_.point_based_time_budget;
        options.max_trials = limits_.point_based_max_trials;
        policy = std::make_shared<const Policy>(solve_point_based(model, options).policy);
      } else {
        throw SolveUnavailable(
            "no precomputed " + std::string(cli_name(kind)) + " policy for this config (" +
            std::to_string(states) + " states is too large to solve on demand); run "
            "`announce-planner solve --config <file> --solver " + std::string(cli_name(kind)) +
            " --out <policies-dir>/<name>.json` and restart the service");
      }
    }
  }
  policy_cache_.emplace(key, policy);
  return policy;
}

std::string AdvisorService::create_session(const ProblemConfig &config,
                                           std::string_view policy_kind) {
  PolicyKind kind;
  try {
    kind = parse_policy_kind(policy_kind);
  } catch (const InvalidArgument &) {
    throw UnknownPolicy("unknown policy '" + std::string(policy_kind) +
                        "'; expected qmdp, sarsop, mostlikely or observedtime");
  }
  config.validate();
  auto policy = obtain_policy(config, kind);
  auto model = std::make_shared<const Model>(config);
  auto session = std::make_shared<Session>(new_session_id(), config, std::move(model),
                                           std::move(policy));
  std::unique_lock lock(sessions_mutex_);
  sessions_.emplace(session->id, session);
  return session->id;
}

std::shared_ptr<AdvisorService::Session> AdvisorService::find(const std::string &id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end())
    throw SessionNotFound("no session '" + id + "'");
  return it->second;
}

nlohmann::json AdvisorService::view_locked(const Session &s) {
  return {{"id", s.id},
          {"status", s.completed ? "completed" : "active"},
          {"phase", s.completed                ? "closed"
                    : s.awaiting_announcement ? "awaiting_announcement"
                                              : "awaiting_observation"},
          {"t", s.observable.t},
          {"prev_announce", s.observable.prev_announce},
          {"policy", cli_name(s.policy->kind())},
          {"config", config_to_json(s.config)},
          {"belief", belief_to_json(s.belief)},
          {"belief_mode", most_likely_completion(s.belief).true_completion},
          {"observations", s.observations},
          {"announcements", s.announcements},
          {"recommendations", s.recommendations}};
}

nlohmann::json AdvisorService::session_view(const std::string &id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return view_locked(*s);
}

nlohmann::json AdvisorService::submit_observation(const std::string &id, int estimate,
                                                  bool completed) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (s->completed)
    throw SessionCompleted("session '" + id + "' is completed");
  if (s->awaiting_announcement)
    throw WrongPhase("an announcement is due before the next estimate");
  const Model &model = *s->model;
  if (!model.valid_completion(estimate))
    throw OutOfRange("estimate " + std::to_string(estimate) + " outside [" +
                     std::to_string(model.t_min()) + ", " + std::to_string(model.t_max()) + "]");

  if (s->observations.empty()) {
    if (completed)
      throw OutOfRange("completion cannot be reported before the first announcement");
    s->belief = condition_on_observation(model, s->belief, {estimate});
  } else {
    s->belief = update_or_predict(model, s->belief, {s->announcements.back()}, {estimate},
                                  completed);
  }
  s->observable = {s->belief.observable().t, s->observable.prev_announce};
  s->observations.push_back(estimate);
  s->pending_completion = completed;
  s->awaiting_announcement = true;

  const int recommended = evaluate(*s->policy, s->observable, s->belief, s->observations).announce;
  s->recommendations.push_back(recommended);

  const auto values = s->policy->action_values(s->observable, s->belief);
  nlohmann::json action_values = nlohmann::json::array();
  for (int a : candidate_actions(s->belief, s->observable.prev_announce)) {
    const auto &v = values[static_cast<std::size_t>(a - model.t_min())];
    action_values.push_back({{"announce", a},
                             {"value", v ? nlohmann::json(*v) : nlohmann::json(nullptr)},
                             {"keep_previous", a == s->observable.prev_announce}});
  }
  return {{"id", s->id},
          {"t", s->observable.t},
          {"recommended", recommended},
          {"completed", completed},
          {"belief", belief_to_json(s->belief)},
          {"belief_mode", most_likely_completion(s->belief).true_completion},
          {"action_values", std::move(action_values)}};
}

nlohmann::json AdvisorService::submit_announcement(const std::string &id, int announce) {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  if (s->completed)
    throw SessionCompleted("session '" + id + "' is completed");
  if (!s->awaiting_announcement)
    throw WrongPhase("submit this week's estimate before announcing");
  const Model &model = *s->model;
  if (!model.valid_completion(announce))
    throw OutOfRange("announcement " + std::to_string(announce) + " outside [" +
                     std::to_string(model.t_min()) + ", " + std::to_string(model.t_max()) + "]");
  s->announcements.push_back(announce);
  s->awaiting_announcement = false;
  // The belief stays at this week; the next estimate moves it forward and
  // discards completion times already passed.
  s->observable.prev_announce = announce;
  if (s->pending_completion || s->observable.t >= model.t_max())
    s->completed = true;
  else
    s->observable.t += 1;
  return view_locked(*s);
}

nlohmann::json AdvisorService::list_policies() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto &entry : precomputed_) {
    nlohmann::json item = {{"kind", cli_name(entry.kind)},
                           {"config_fingerprint", entry.fingerprint},
                           {"file", entry.path.filename().string()},
                           {"source", "precomputed"}};
    for (const char *name : {"small", "medium", "large", "extra-large"})
      if (config_fingerprint(ProblemConfig::preset(name)) == entry.fingerprint)
        item["config_name"] = name;
    out.push_back(std::move(item));
  }
  for (const char *kind : {"mostlikely", "observedtime"})
    out.push_back({{"kind", kind}, {"source", "builtin"}});
  return out;
}

void AdvisorService::snapshot(const std::filesystem::path &path) const {
  nlohmann::json all = nlohmann::json::array();
  {
    std::shared_lock lock(sessions_mutex_);
    for (const auto &[id, s] : sessions_) {
      std::lock_guard session_lock(s->mutex);
      all.push_back(view_locked(*s));
    }
  }
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write snapshot: " + path.string());
  out << all.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// HTTP

namespace {

int status_for(const Error &e) {
  const std::string &k = e.kind();
  if (k == "SessionNotFound")
    return 404;
  if (k == "SessionCompleted" || k == "WrongPhase")
    return 409;
  if (k == "OutOfRange")
    return 422;
  if (k == "SolveUnavailable")
    return 503;
  if (k == "IoError")
    return 500;
  return 400;
}

void send_json(httplib::Response &res, int status, const nlohmann::json &body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class Fn> void guarded(httplib::Response &res, Fn &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    send_json(res, status_for(e), {{"error", e.kind()}, {"message", e.what()}});
  } catch (const nlohmann::json::exception &e) {
    send_json(res, 400, {{"error", "BadRequest"}, {"message", e.what()}});
  }
}

nlohmann::json parse_body(const httplib::Request &req) {
  auto j = nlohmann::json::parse(req.body);
  if (!j.is_object())
    throw InvalidArgument("request body must be a JSON object");
  return j;
}

} // namespace

void install_routes(httplib::Server &server, AdvisorService &service) {
  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Headers", "Content-Type"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  server.Options(R"(.*)", [](const httplib::Request &, httplib::Response &res) {
    res.status = 204;
  });
  server.Get("/healthz", [](const httplib::Request &, httplib::Response &res) {
    send_json(res, 200, {{"status", "ok"}});
  });
  server.Get("/policies", [&service](const httplib::Request &, httplib::Response &res) {
    guarded(res, [&] { send_json(res, 200, service.list_policies()); });
  });
  server.Post("/sessions", [&service](const httplib::Request &req, httplib::Response &res) {
    guarded(res, [&] {
      const auto body = parse_body(req);
      ProblemConfig config;
      if (body.contains("config"))
        config = config_from_json(body.at("config"));
      else if (body.contains("config_name"))
        config = ProblemConfig::preset(body.at("config_name").get<std::string>());
      else
        throw InvalidArgument("provide either 'config' or 'config_name'");
      const auto id = service.create_session(config, body.at("policy").get<std::string>());
      send_json(res, 201, {{"id", id}});
    });
  });
  server.Get(R"(/sessions/([0-9a-f]+))",
             [&service](const httplib::Request &req, httplib::Response &res) {
               guarded(res, [&] { send_json(res, 200, service.session_view(req.matches[1])); });
             });
  server.Post(R"(/sessions/([0-9a-f]+)/observe)",
              [&service](const httplib::Request &req, httplib::Response &res) {
                guarded(res, [&] {
                  const auto body = parse_body(req);
                  send_json(res, 200,
                            service.submit_observation(req.matches[1],
                                                       body.at("estimate").get<int>(),
                                                       body.value("completed", false)));
                });
              });
  server.Post(R"(/sessions/([0-9a-f]+)/announce)",
              [&service](const httplib::Request &req, httplib::Response &res) {
                guarded(res, [&] {
                  const auto body = parse_body(req);
                  send_json(res, 200,
                            service.submit_announcement(req.matches[1],
                                                        body.at("announce").get<int>()));
                });
              });
}

} // namespace announce
