#pragma once

#include "announce/model.hpp"
#include "announce/policy.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

namespace testing {

inline announce::ProblemConfig tiny(int t_min = 2, int t_max = 4) {
  announce::ProblemConfig c;
  c.t_min = t_min;
  c.t_max = t_max;
  return c;
}

/// QMDP-form policy with a single vector: always announces `week`.
inline announce::Policy constant_policy(const announce::ProblemConfig &c, int week) {
  const announce::Model m(c);
  return announce::Policy(announce::PolicyKind::qmdp, c,
                          {{week, std::vector<double>(m.num_states(), 0.0), std::nullopt}});
}

/// Random valid config with a short horizon.
inline announce::ProblemConfig random_config(std::mt19937_64 &rng) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto unit = [&] { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); };
  announce::ProblemConfig c;
  c.t_min = pick(2, 5);
  c.t_max = c.t_min + pick(1, 8);
  c.discount = 0.5 + 0.49 * unit();
  c.lambda_e = 10 * unit();
  c.lambda_c = 10 * unit();
  c.lambda_f = 1000 * unit();
  const double a = unit(), b = unit() * (1 - a);
  c.p_none = a;
  c.p_small = b;
  c.p_large = 1 - a - b;
  c.delta_small = pick(1, 3);
  c.delta_large = c.delta_small + pick(1, 3);
  return c;
}

class TempDir {
public:
  TempDir() {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("announce-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path &path() const { return path_; }
  std::filesystem::path operator/(const std::string &name) const { return path_ / name; }

private:
  std::filesystem::path path_;
};

} // namespace testing
