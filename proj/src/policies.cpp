#include "announce/policies.hpp"

#include "announce/error.hpp"

namespace announce {

Action last_observed_action(std::span<const int> history) {
  if (history.empty())
    throw NoObservation("no estimate has been received yet");
  return {history.back()};
}

Action most_likely_action(const Belief &b) {
  return {most_likely_completion(b).true_completion};
}

Action evaluate(const Policy &policy, ObservableState x, const Belief &b,
                std::span<const int> history) {
  switch (policy.kind()) {
  case PolicyKind::last_observed:
    return last_observed_action(history);
  case PolicyKind::most_likely:
    return most_likely_action(b);
  case PolicyKind::qmdp:
  case PolicyKind::point_based:
    return {policy.best_action(x, b)};
  }
  throw InvalidArgument("unknown policy kind");
}

} // namespace announce
