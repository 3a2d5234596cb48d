#include "announce/policy.hpp"

#include "announce/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

namespace announce {

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
  case PolicyKind::qmdp:
    return "qmdp";
  case PolicyKind::point_based:
    return "point_based";
  case PolicyKind::last_observed:
    return "last_observed";
  case PolicyKind::most_likely:
    return "most_likely";
  }
  return "unknown";
}

std::string_view cli_name(PolicyKind kind) {
  switch (kind) {
  case PolicyKind::qmdp:
    return "qmdp";
  case PolicyKind::point_based:
    return "sarsop";
  case PolicyKind::last_observed:
    return "observedtime";
  case PolicyKind::most_likely:
    return "mostlikely";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "qmdp")
    return PolicyKind::qmdp;
  if (name == "sarsop" || name == "point_based")
    return PolicyKind::point_based;
  if (name == "observedtime" || name == "last_observed")
    return PolicyKind::last_observed;
  if (name == "mostlikely" || name == "most_likely")
    return PolicyKind::most_likely;
  throw InvalidArgument("unknown policy kind '" + std::string(name) + "'");
}

Policy Policy::baseline(PolicyKind kind, const ProblemConfig &config) {
  if (kind != PolicyKind::last_observed && kind != PolicyKind::most_likely)
    throw InvalidArgument("baseline() takes last_observed or most_likely");
  return Policy(kind, config, {});
}

Policy::Policy(PolicyKind kind, const ProblemConfig &config,
               std::vector<AlphaVector> alphas)
    : kind_(kind), fingerprint_(config_fingerprint(config)),
      t_min_(config.t_min), t_max_(config.t_max), alphas_(std::move(alphas)) {
  const auto n = static_cast<std::size_t>(config.num_completions());
  const std::size_t num_observables = static_cast<std::size_t>(t_max_ + 1) * n;
  if (!uses_alphas()) {
    if (!alphas_.empty())
      throw InvalidArgument("baseline policies carry no alpha vectors");
    return;
  }
  if (alphas_.empty())
    throw InvalidArgument("planner policy needs alpha vectors");
  if (kind_ == PolicyKind::point_based)
    by_observable_.resize(num_observables);
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    const auto &alpha = alphas_[i];
    if (alpha.action < t_min_ || alpha.action > t_max_)
      throw InvalidArgument("alpha vector action out of range");
    for (double v : alpha.values)
      if (!std::isfinite(v))
        throw InvalidArgument("alpha vector has non-finite entries");
    if (kind_ == PolicyKind::qmdp) {
      if (alpha.values.size() != num_observables * n)
        throw InvalidArgument("QMDP alpha vector must span all states");
    } else {
      if (!alpha.observable || alpha.values.size() != n)
        throw InvalidArgument("point-based alpha vector must span completions of one observable state");
      const auto &x = *alpha.observable;
      if (x.t < 0 || x.t > t_max_ || x.prev_announce < t_min_ || x.prev_announce > t_max_)
        throw InvalidArgument("alpha vector observable state out of range");
      by_observable_[static_cast<std::size_t>(x.t) * n +
                     static_cast<std::size_t>(x.prev_announce - t_min_)]
          .push_back(i);
    }
  }
}

std::vector<std::optional<double>> Policy::action_values(ObservableState x,
                                                         const Belief &b) const {
  const int n = t_max_ - t_min_ + 1;
  std::vector<std::optional<double>> out(static_cast<std::size_t>(n));
  if (!uses_alphas())
    return out;
  if (x.t < 0 || x.t > t_max_ || x.prev_announce < t_min_ || x.prev_announce > t_max_)
    throw InvalidArgument("observable state out of range for policy");
  if (b.t_min() != t_min_ || b.t_max() != t_max_)
    throw InvalidArgument("belief does not match policy dimensions");
  const auto mass = b.mass();

  auto dot = [&](const double *values) {
    double s = 0.0;
    for (int k = 0; k < n; ++k)
      if (mass[static_cast<std::size_t>(k)] != 0.0)
        s += mass[static_cast<std::size_t>(k)] * values[k];
    return s;
  };

  if (kind_ == PolicyKind::qmdp) {
    const std::size_t offset =
        (static_cast<std::size_t>(x.t) * static_cast<std::size_t>(n) +
         static_cast<std::size_t>(x.prev_announce - t_min_)) *
        static_cast<std::size_t>(n);
    for (const auto &alpha : alphas_) {
      const double v = dot(alpha.values.data() + offset);
      auto &slot = out[static_cast<std::size_t>(alpha.action - t_min_)];
      if (!slot || v > *slot)
        slot = v;
    }
    return out;
  }
  const auto &indices =
      by_observable_[static_cast<std::size_t>(x.t) * static_cast<std::size_t>(n) +
                     static_cast<std::size_t>(x.prev_announce - t_min_)];
  for (std::size_t i : indices) {
    const auto &alpha = alphas_[i];
    const double v = dot(alpha.values.data());
    auto &slot = out[static_cast<std::size_t>(alpha.action - t_min_)];
    if (!slot || v > *slot)
      slot = v;
  }
  return out;
}

int Policy::best_action(ObservableState x, const Belief &b) const {
  const auto values = action_values(x, b);
  double best = -std::numeric_limits<double>::infinity();
  for (const auto &v : values)
    if (v && *v > best)
      best = *v;
  if (!std::isfinite(best))
    throw InvalidArgument("policy has no alpha vector for observable state (" +
                          std::to_string(x.t) + ", " +
                          std::to_string(x.prev_announce) + ")");
  const double tol = 1e-9 * std::max(1.0, std::abs(best));
  auto near_best = [&](int a) {
    const auto &v = values[static_cast<std::size_t>(a - t_min_)];
    return v && *v >= best - tol;
  };
  if (near_best(x.prev_announce))
    return x.prev_announce;
  for (int a = t_min_; a <= t_max_; ++a)
    if (near_best(a))
      return a;
  return x.prev_announce; // unreachable
}

double initial_belief_value(const Model &model, const Policy &policy) {
  const Belief prior = initial_belief(model);
  double total = 0.0;
  for (int o = model.t_min(); o <= model.t_max(); ++o) {
    double p_o = 0.0;
    for (int y = model.t_min(); y <= model.t_max(); ++y)
      p_o += prior.probability(y) *
             model.observation_row(0, y)[static_cast<std::size_t>(o - model.t_min())];
    if (p_o <= 0.0)
      continue;
    const Belief b = condition_on_observation(model, prior, {o});
    const auto values = policy.action_values(b.observable(), b);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto &v : values)
      if (v)
        best = std::max(best, *v);
    total += p_o * best;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

void write_number(std::ostream &out, double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, end - buf);
}

PolicyKind kind_from_file(const std::string &name) {
  for (auto k : {PolicyKind::qmdp, PolicyKind::point_based,
                 PolicyKind::last_observed, PolicyKind::most_likely})
    if (to_string(k) == name)
      return k;
  throw FormatError("unknown policy kind '" + name + "'");
}

// Stops parsing once the top-level header fields have been seen.
class HeaderSax : public nlohmann::json_sax<nlohmann::json> {
public:
  std::optional<std::string> kind, fingerprint;

  bool null() override { return scalar(); }
  bool boolean(bool) override { return scalar(); }
  bool number_integer(number_integer_t) override { return scalar(); }
  bool number_unsigned(number_unsigned_t) override { return scalar(); }
  bool number_float(number_float_t, const string_t &) override { return scalar(); }
  bool string(string_t &val) override {
    if (depth_ == 1 && key_ == "kind")
      kind = val;
    if (depth_ == 1 && key_ == "config_fingerprint")
      fingerprint = val;
    return scalar();
  }
  bool binary(binary_t &) override { return scalar(); }
  bool start_object(std::size_t) override { return ++depth_, true; }
  bool key(string_t &val) override {
    if (depth_ == 1)
      key_ = val;
    return true;
  }
  bool end_object() override { return --depth_, true; }
  bool start_array(std::size_t) override { return ++depth_, !done(); }
  bool end_array() override { return --depth_, true; }
  bool parse_error(std::size_t, const std::string &,
                   const nlohmann::detail::exception &) override {
    return false;
  }

private:
  bool scalar() { return !done(); }
  bool done() const { return kind && fingerprint; }

  int depth_ = 0;
  std::string key_;
};

} // namespace

void save_policy(const Policy &policy, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write policy file: " + path.string());
  out << "{\"version\":" << kPolicyFormatVersion << ",\"kind\":\""
      << to_string(policy.kind()) << "\",\"config_fingerprint\":\""
      << policy.fingerprint() << "\",\"alphas\":[";
  bool first = true;
  for (const auto &alpha : policy.alphas()) {
    out << (first ? "" : ",") << "\n{\"action\":" << alpha.action;
    first = false;
    if (alpha.observable)
      out << ",\"observable\":{\"t\":" << alpha.observable->t
          << ",\"prev_announce\":" << alpha.observable->prev_announce << "}";
    out << ",\"values\":[";
    for (std::size_t i = 0; i < alpha.values.size(); ++i) {
      if (i)
        out << ',';
      write_number(out, alpha.values[i]);
    }
    out << "]}";
  }
  out << "]}\n";
  if (!out)
    throw IoError("failed writing policy file: " + path.string());
}

Policy load_policy(const std::filesystem::path &path, const ProblemConfig &config) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read policy file: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw FormatError("policy file is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (!j.is_object())
      throw FormatError("policy file must hold a JSON object");
    if (j.at("version").get<int>() != kPolicyFormatVersion)
      throw FormatError("unsupported policy format version");
    const PolicyKind kind = kind_from_file(j.at("kind").get<std::string>());
    const auto fingerprint = j.at("config_fingerprint").get<std::string>();
    if (fingerprint != config_fingerprint(config))
      throw ConfigMismatch("policy was solved for config " + fingerprint +
                           ", not " + config_fingerprint(config));
    std::vector<AlphaVector> alphas;
    for (const auto &a : j.at("alphas")) {
      AlphaVector alpha;
      alpha.action = a.at("action").get<int>();
      alpha.values = a.at("values").get<std::vector<double>>();
      if (a.contains("observable"))
        alpha.observable = ObservableState{a["observable"].at("t").get<int>(),
                                           a["observable"].at("prev_announce").get<int>()};
      alphas.push_back(std::move(alpha));
    }
    return Policy(kind, config, std::move(alphas));
  } catch (const nlohmann::json::exception &e) {
    throw FormatError("malformed policy file: " + std::string(e.what()));
  } catch (const InvalidArgument &e) {
    throw FormatError("inconsistent policy file: " + std::string(e.what()));
  }
}

std::pair<PolicyKind, std::string> peek_policy(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot read policy file: " + path.string());
  HeaderSax sax;
  nlohmann::json::sax_parse(in, &sax);
  if (!sax.kind || !sax.fingerprint)
    throw FormatError("policy file header incomplete: " + path.string());
  return {kind_from_file(*sax.kind), *sax.fingerprint};
}

} // namespace announce
