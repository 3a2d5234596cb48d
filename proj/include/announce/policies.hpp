#pragma once

#include "announce/belief.hpp"
#include "announce/policy.hpp"

#include <span>

namespace announce {

/// Announce the latest estimate. Throws NoObservation on an empty history.
Action last_observed_action(std::span<const int> history);

/// Announce the most likely completion time under the belief.
Action most_likely_action(const Belief &b);

/// Uniform dispatch over the four policy kinds. Pure: reads its inputs only.
Action evaluate(const Policy &policy, ObservableState x, const Belief &b,
                std::span<const int> history);

} // namespace announce
