#include "announce/config_io.hpp"

#include "announce/error.hpp"

#include <fstream>
#include <set>

namespace announce {

namespace {

const std::set<std::string> &field_names() {
  static const std::set<std::string> names = {
      "t_min",  "t_max",   "discount", "lambda_e",    "lambda_c",   "lambda_f",
      "p_none", "p_small", "p_large",  "delta_small", "delta_large"};
  return names;
}

int read_int(const nlohmann::json &j, const char *key) {
  const auto &v = j.at(key);
  if (!v.is_number_integer())
    throw InvalidConfig(std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

double read_real(const nlohmann::json &j, const char *key) {
  const auto &v = j.at(key);
  if (!v.is_number())
    throw InvalidConfig(std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

} // namespace

ProblemConfig config_from_json(const nlohmann::json &j) {
  if (!j.is_object())
    throw InvalidConfig("config must be a JSON object");
  for (const auto &[key, _] : j.items())
    if (!field_names().contains(key))
      throw InvalidConfig("unknown config field '" + key + "'");
  for (const auto &key : field_names())
    if (!j.contains(key))
      throw InvalidConfig("missing config field '" + key + "'");

  ProblemConfig c;
  c.t_min = read_int(j, "t_min");
  c.t_max = read_int(j, "t_max");
  c.discount = read_real(j, "discount");
  c.lambda_e = read_real(j, "lambda_e");
  c.lambda_c = read_real(j, "lambda_c");
  c.lambda_f = read_real(j, "lambda_f");
  c.p_none = read_real(j, "p_none");
  c.p_small = read_real(j, "p_small");
  c.p_large = read_real(j, "p_large");
  c.delta_small = read_int(j, "delta_small");
  c.delta_large = read_int(j, "delta_large");
  c.validate();
  return c;
}

nlohmann::json config_to_json(const ProblemConfig &c) {
  return {{"t_min", c.t_min},          {"t_max", c.t_max},
          {"discount", c.discount},    {"lambda_e", c.lambda_e},
          {"lambda_c", c.lambda_c},    {"lambda_f", c.lambda_f},
          {"p_none", c.p_none},        {"p_small", c.p_small},
          {"p_large", c.p_large},      {"delta_small", c.delta_small},
          {"delta_large", c.delta_large}};
}

ProblemConfig load_config(const std::filesystem::path &path_or_preset) {
  const std::string s = path_or_preset.string();
  if (!std::filesystem::exists(path_or_preset)) {
    if (s == "small" || s == "medium" || s == "large" || s == "extra-large" ||
        s == "xl")
      return ProblemConfig::preset(s);
    throw IoError("config file not found: " + s);
  }
  std::ifstream in(path_or_preset);
  if (!in)
    throw IoError("cannot read config: " + s);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception &e) {
    throw InvalidConfig("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

} // namespace announce
