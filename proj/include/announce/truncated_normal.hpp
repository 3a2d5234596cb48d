#pragma once

#include <span>
#include <vector>

namespace announce {

/// P(lo < Z < hi) for a standard normal Z. Evaluated on the tail side of
/// zero so that narrow bins far from the mean keep their relative precision.
double standard_normal_mass(double lo, double hi);

/// Gaussian N(mean, sigma^2) truncated to [first - 0.5, last + 0.5] and
/// integrated over unit bins centred on the integers first..last. The result
/// has last - first + 1 entries and sums to one.
std::vector<double> discretized_truncated_normal(double mean, double sigma,
                                                 int first, int last);

/// Inverse-CDF lookup: smallest index whose cumulative mass reaches `u`.
/// Never returns an index carrying zero mass.
std::size_t inverse_cdf_index(std::span<const double> mass, double u);

} // namespace announce
