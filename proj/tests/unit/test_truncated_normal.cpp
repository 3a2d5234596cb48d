#include "announce/truncated_normal.hpp"

#include "../oracle/oracle.hpp"

#include <doctest.h>
#include <numeric>

using namespace announce;

TEST_CASE("standard normal mass matches the long double erf reference") {
  for (double lo : {-8.0, -3.0, -1.0, -0.25, 0.0, 0.5, 2.0, 6.0})
    for (double width : {0.01, 0.5, 1.0, 4.0}) {
      const double hi = lo + width;
      const auto expected = oracle::normal_cdf(hi) - oracle::normal_cdf(lo);
      CHECK(standard_normal_mass(lo, hi) == doctest::Approx(static_cast<double>(expected)).epsilon(1e-12));
    }
}

TEST_CASE("far tail bins keep relative precision") {
  const double m = standard_normal_mass(9.0, 9.5);
  const auto expected = oracle::normal_cdf(-9.0L) - oracle::normal_cdf(-9.5L);
  CHECK(m > 0.0);
  CHECK(m == doctest::Approx(static_cast<double>(expected)).epsilon(1e-9));
}

TEST_CASE("discretized truncated normal sums to one and peaks at the mean") {
  const auto mass = discretized_truncated_normal(22.0, 2.0, 2, 52);
  REQUIRE(mass.size() == 51);
  CHECK(std::accumulate(mass.begin(), mass.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::max_element(mass.begin(), mass.end()) - mass.begin() == 20);
  CHECK(mass[19] == doctest::Approx(mass[21]).epsilon(1e-14));
}

TEST_CASE("inverse CDF lookup") {
  const std::vector<double> mass = {0.25, 0.0, 0.5, 0.25};
  CHECK(inverse_cdf_index(mass, 1e-9) == 0);
  CHECK(inverse_cdf_index(mass, 0.25) == 0);
  CHECK(inverse_cdf_index(mass, 0.2500001) == 2);
  CHECK(inverse_cdf_index(mass, 0.75) == 2);
  CHECK(inverse_cdf_index(mass, 0.9) == 3);
  CHECK(inverse_cdf_index(mass, 1.0) == 3);

  SUBCASE("rounding shortfall falls back to the last positive entry") {
    const std::vector<double> short_mass = {0.3, 0.3, 0.3999999, 0.0};
    CHECK(inverse_cdf_index(short_mass, 0.99999999) == 2);
  }
}
