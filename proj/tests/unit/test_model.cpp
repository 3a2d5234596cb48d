#include "announce/config_io.hpp"
#include "announce/error.hpp"
#include "announce/model.hpp"

#include "../oracle/oracle.hpp"
#include "helpers.hpp"

#include <doctest.h>
#include <fstream>
#include <numeric>

using namespace announce;

namespace {

ProblemConfig xl() { return ProblemConfig::preset("extra-large"); }

double mass_at(const HiddenTransition &k, int y) { return k.probability_of(y); }

} // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(ProblemConfig{}.validate());
  auto bad = [](auto mutate) {
    ProblemConfig c;
    mutate(c);
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
  };
  bad([](ProblemConfig &c) { c.t_min = 1; });
  bad([](ProblemConfig &c) { c.t_min = 13; });
  bad([](ProblemConfig &c) { c.p_none = 0.6; });
  bad([](ProblemConfig &c) { c.p_large = -0.1; c.p_none = 0.7; });
  bad([](ProblemConfig &c) { c.delta_small = 3; });
  bad([](ProblemConfig &c) { c.delta_small = 0; });
  bad([](ProblemConfig &c) { c.discount = 1.0; });
  bad([](ProblemConfig &c) { c.discount = -0.1; });
  bad([](ProblemConfig &c) { c.lambda_c = -1.0; });
  CHECK_THROWS_AS(Model(ProblemConfig{.t_min = 5, .t_max = 4}), InvalidConfig);
}

TEST_CASE("presets") {
  CHECK(ProblemConfig::preset("small").t_max == 13);
  CHECK(ProblemConfig::preset("medium").t_max == 26);
  CHECK(ProblemConfig::preset("large").t_max == 39);
  CHECK(ProblemConfig::preset("extra-large").t_max == 52);
  CHECK(ProblemConfig::preset("xl") == xl());
  for (const char *name : {"small", "medium", "large", "extra-large"}) {
    const auto c = ProblemConfig::preset(name);
    CHECK(c.t_min == 2);
    CHECK(c.discount == 0.98);
    CHECK(c.lambda_e == 8.0);
    CHECK(c.lambda_c == 2.0);
    CHECK(c.lambda_f == 1000.0);
    CHECK(c.delta_small == 1);
    CHECK(c.delta_large == 3);
  }
  CHECK_THROWS_AS(ProblemConfig::preset("huge"), InvalidConfig);
}

TEST_CASE("fingerprint is stable and sensitive to every field") {
  const ProblemConfig base;
  CHECK(config_fingerprint(base) == config_fingerprint(ProblemConfig{}));
  CHECK(config_fingerprint(base).size() == 16);
  ProblemConfig c = base;
  c.lambda_c = 2.0000000001;
  CHECK(config_fingerprint(c) != config_fingerprint(base));
  c = base;
  c.delta_large = 4;
  CHECK(config_fingerprint(c) != config_fingerprint(base));
}

TEST_CASE("observation distribution") {
  const Model m(xl());
  SUBCASE("t=19, Ts=22: unimodal at 22, symmetric, sigma 1") {
    CHECK(Model::observation_sigma(19, 22) == doctest::Approx(1.0));
    const auto d = m.observation_distribution({19, 2}, {22});
    CHECK(std::max_element(d.begin(), d.end()) - d.begin() == 20);
    for (int k = 1; k <= 5; ++k)
      CHECK(d[static_cast<std::size_t>(20 - k)] == doctest::Approx(d[static_cast<std::size_t>(20 + k)]).epsilon(1e-12));
    for (std::size_t i = 1; i <= 20; ++i)
      CHECK(d[i] >= d[i - 1]);
  }
  SUBCASE("t=22, Ts=22: point mass") {
    const auto d = m.observation_distribution({22, 22}, {22});
    CHECK(d[20] == 1.0);
    CHECK(std::accumulate(d.begin(), d.end(), 0.0) == 1.0);
  }
  SUBCASE("past completion is also a point mass") {
    CHECK(m.observation_distribution({30, 22}, {22})[20] == 1.0);
  }
  SUBCASE("t=16, Ts=22 matches the erf reference") {
    const auto d = m.observation_distribution({16, 2}, {22});
    const auto expected = oracle::observation(oracle::params(xl()), 16, 22);
    for (std::size_t i = 0; i < d.size(); ++i)
      CHECK(std::abs(d[i] - static_cast<double>(expected[i])) <= 1e-9);
  }
  SUBCASE("table rows equal direct evaluation") {
    for (int t : {0, 5, 21})
      for (int y : {2, 22, 52}) {
        const auto d = m.observation_distribution({t, 2}, {y});
        const auto row = m.observation_row(t, y);
        CHECK(std::equal(d.begin(), d.end(), row.begin(), row.end()));
      }
  }
  CHECK_THROWS_AS(m.observation_distribution({53, 2}, {22}), InvalidArgument);
  CHECK_THROWS_AS(m.observation_distribution({5, 2}, {1}), InvalidArgument);
}

TEST_CASE("observable transition") {
  const Model m(xl());
  CHECK(m.transition_observable({5, 20}, {22}, {24}) == ObservableState{6, 24});
  CHECK(m.transition_observable({22, 22}, {22}, {22}) == ObservableState{22, 22});
  CHECK(m.transition_observable({0, 10}, {10}, {10}) == ObservableState{1, 10});
}

TEST_CASE("hidden transition") {
  const Model m(xl());
  SUBCASE("announcement change triggers the delay kernel") {
    const auto k = m.transition_hidden({5, 20}, {22}, {24}, {6, 24});
    CHECK(k.size == 3);
    CHECK(mass_at(k, 22) == 0.5);
    CHECK(mass_at(k, 23) == 0.4);
    CHECK(mass_at(k, 25) == 0.1);
  }
  SUBCASE("delay applies even when announcing the truth") {
    CHECK(m.transition_hidden({5, 20}, {22}, {22}, {6, 22}).size == 3);
  }
  SUBCASE("keeping the announcement is identity") {
    const auto k = m.transition_hidden({5, 22}, {22}, {22}, {6, 22});
    CHECK(k.size == 1);
    CHECK(mass_at(k, 22) == 1.0);
  }
  SUBCASE("no delay at t = 0 or at completion") {
    CHECK(m.transition_hidden({0, 2}, {22}, {30}, {1, 30}).size == 1);
    CHECK(m.transition_hidden({22, 2}, {22}, {30}, {22, 30}).size == 1);
  }
  SUBCASE("capped targets merge") {
    const auto k = m.transition_hidden({10, 20}, {51}, {24}, {11, 24});
    CHECK(k.size == 2);
    CHECK(mass_at(k, 51) == 0.5);
    CHECK(mass_at(k, 52) == doctest::Approx(0.5).epsilon(1e-15));
    const auto k2 = m.transition_hidden({10, 20}, {52}, {24}, {11, 24});
    CHECK(k2.size == 1);
    CHECK(mass_at(k2, 52) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("reward") {
  const Model m(xl());
  CHECK(m.reward({5, 24}, {22}, {20}) == -18.0);
  CHECK(m.reward({5, 22}, {22}, {22}) == 0.0);
  CHECK(m.reward({22, 20}, {22}, {20}) == -1016.0);
  CHECK(m.reward({23, 20}, {22}, {30}) == 0.0);
  CHECK(m.reward({51, 20}, {52}, {30}) == 0.0);
  CHECK(m.reward({5, 20}, {22}, {22}) == 0.0);
  CHECK(m.reward({22, 22}, {22}, {22}) == 0.0);
  CHECK_FALSE(std::signbit(m.reward({5, 22}, {22}, {22})));
}

TEST_CASE("state enumeration") {
  const Model m(testing::tiny());
  CHECK(m.num_states() == 45);
  CHECK(m.num_observables() == 15);
  CHECK(m.index_of({{0, 2}, {2}}) == 0);
  CHECK(m.index_of({{0, 2}, {3}}) == 1);
  CHECK(m.index_of({{0, 3}, {2}}) == 3);
  CHECK(m.index_of({{1, 2}, {2}}) == 9);
  for (std::size_t i = 0; i < m.num_states(); ++i)
    CHECK(m.index_of(m.state_of(i)) == i);
  for (std::size_t i = 0; i < m.num_observables(); ++i)
    CHECK(m.observable_index(m.observable_of(i)) == i);
  CHECK(Model(ProblemConfig::preset("small")).num_states() == 14u * 12u * 12u);
  CHECK_THROWS_AS(m.state_of(45), InvalidArgument);
}

TEST_CASE("config json") {
  const auto c = ProblemConfig::preset("medium");
  const auto j = config_to_json(c);
  CHECK(config_from_json(j) == c);
  CHECK(j.size() == 11);

  auto with = [&](const char *key, nlohmann::json v) {
    auto copy = j;
    copy[key] = v;
    return copy;
  };
  CHECK_THROWS_AS(config_from_json(with("extra", 1)), InvalidConfig);
  CHECK_THROWS_AS(config_from_json(with("t_min", 2.5)), InvalidConfig);
  CHECK_THROWS_AS(config_from_json(with("discount", "high")), InvalidConfig);
  CHECK_THROWS_AS(config_from_json(with("p_none", 0.9)), InvalidConfig);
  auto missing = j;
  missing.erase("lambda_f");
  CHECK_THROWS_AS(config_from_json(missing), InvalidConfig);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), InvalidConfig);
  CHECK_THROWS_AS(config_from_json(with("t_min", 2.0)), InvalidConfig);
}

TEST_CASE("load_config reads files and preset names") {
  testing::TempDir dir;
  const auto c = ProblemConfig::preset("large");
  {
    std::ofstream out(dir / "large.json");
    out << config_to_json(c).dump();
  }
  CHECK(load_config(dir / "large.json") == c);
  CHECK(load_config("large") == c);
  {
    std::ofstream out(dir / "broken.json");
    out << "{\"t_min\": ";
  }
  CHECK_THROWS_AS(load_config(dir / "broken.json"), InvalidConfig);
  CHECK_THROWS(load_config(dir / "absent.json"));
}
