#include "announce/truncated_normal.hpp"

#include <cassert>
#include <cmath>
#include <numbers>

namespace announce {

namespace {

// Upper tail Q(z) = P(Z > z).
double upper_tail(double z) {
  return 0.5 * std::erfc(z / std::numbers::sqrt2);
}

} // namespace

double standard_normal_mass(double lo, double hi) {
  if (hi <= lo)
    return 0.0;
  if (lo >= 0.0)
    return upper_tail(lo) - upper_tail(hi);
  if (hi <= 0.0)
    return upper_tail(-hi) - upper_tail(-lo);
  return 1.0 - upper_tail(-lo) - upper_tail(hi);
}

std::vector<double> discretized_truncated_normal(double mean, double sigma,
                                                 int first, int last) {
  assert(sigma > 0.0 && first <= last);
  std::vector<double> mass(static_cast<std::size_t>(last - first + 1));
  double total = 0.0;
  for (int k = first; k <= last; ++k) {
    const double lo = (k - 0.5 - mean) / sigma;
    const double hi = (k + 0.5 - mean) / sigma;
    const double m = standard_normal_mass(lo, hi);
    mass[static_cast<std::size_t>(k - first)] = m;
    total += m;
  }
  for (double &m : mass)
    m /= total;
  return mass;
}

std::size_t inverse_cdf_index(std::span<const double> mass, double u) {
  double cumulative = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < mass.size(); ++k) {
    if (mass[k] <= 0.0)
      continue;
    last_positive = k;
    cumulative += mass[k];
    if (cumulative >= u)
      return k;
  }
  // Rounding left the total marginally below u.
  return last_positive;
}

} // namespace announce
