#include "announce/belief.hpp"

#include "announce/error.hpp"

#include <cmath>
#include <iostream>
#include <numeric>

namespace announce {

namespace {

ObservableState successor(const Belief &b, Action a) {
  const int t = b.observable().t;
  for (int y = std::max(t + 1, b.t_min()); y <= b.t_max(); ++y)
    if (b.probability(y) > 0.0)
      return {t + 1, a.announce};
  return {t, a.announce};
}

// Predicted mass at `next`, restricted to hypotheses consistent with the
// observed time step and the completion flag.
std::vector<double> predicted_mass(const Model &model, const Belief &b,
                                   Action a, ObservableState next,
                                   bool completed, bool apply_flag) {
  const ObservableState x = b.observable();
  const bool advanced = next.t > x.t;
  std::vector<double> out(b.mass().size(), 0.0);
  for (int y = b.t_min(); y <= b.t_max(); ++y) {
    const double p = b.probability(y);
    if (p <= 0.0)
      continue;
    if (advanced != (x.t < y))
      continue;
    const HiddenTransition k = model.hidden_kernel(x.t, x.prev_announce, y, a.announce);
    for (int i = 0; i < k.size; ++i)
      out[static_cast<std::size_t>(k.completion[i] - b.t_min())] += p * k.probability[i];
  }
  if (apply_flag) {
    for (int y = b.t_min(); y <= b.t_max(); ++y) {
      const bool done = y <= next.t;
      if (done != completed)
        out[static_cast<std::size_t>(y - b.t_min())] = 0.0;
    }
  }
  return out;
}

double normalize(std::vector<double> &mass) {
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  if (total > kLikelihoodFloor)
    for (double &m : mass)
      m /= total;
  return total;
}

void require_estimate(const Model &model, Observation o) {
  if (!model.valid_completion(o.estimate))
    throw InvalidArgument("estimate " + std::to_string(o.estimate) +
                          " outside [t_min, t_max]");
}

} // namespace

Belief::Belief(ObservableState observable, int t_min, std::vector<double> mass)
    : observable_(observable), t_min_(t_min), mass_(std::move(mass)) {
  if (mass_.empty())
    throw InvalidArgument("belief needs at least one completion time");
  double total = 0.0;
  for (double m : mass_) {
    if (!(m >= 0.0) || !std::isfinite(m))
      throw InvalidArgument("belief mass must be finite and nonnegative");
    total += m;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw InvalidArgument("belief mass must sum to one");
}

double Belief::probability(int completion) const {
  const int k = completion - t_min_;
  if (k < 0 || k >= static_cast<int>(mass_.size()))
    return 0.0;
  return mass_[static_cast<std::size_t>(k)];
}

bool Belief::completed() const {
  for (int y = std::max(observable_.t + 1, t_min_); y <= t_max(); ++y)
    if (probability(y) > 0.0)
      return false;
  return true;
}

Belief initial_belief(const Model &model) {
  const auto n = static_cast<std::size_t>(model.num_completions());
  return Belief({0, model.t_min()}, model.t_min(),
                std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

Belief condition_on_observation(const Model &model, const Belief &b,
                                Observation o) {
  require_estimate(model, o);
  const int t = b.observable().t;
  std::vector<double> mass(b.mass().begin(), b.mass().end());
  for (int y = b.t_min(); y <= b.t_max(); ++y) {
    auto &m = mass[static_cast<std::size_t>(y - b.t_min())];
    if (m > 0.0)
      m *= model.observation_row(t, y)[static_cast<std::size_t>(o.estimate - model.t_min())];
  }
  if (normalize(mass) <= kLikelihoodFloor)
    throw ZeroLikelihood("estimate " + std::to_string(o.estimate) +
                         " has zero likelihood under the belief");
  return Belief(b.observable(), b.t_min(), std::move(mass));
}

Belief predict(const Model &model, const Belief &b, Action a, bool completed) {
  const ObservableState next = successor(b, a);
  auto mass = predicted_mass(model, b, a, next, completed, true);
  if (normalize(mass) <= kLikelihoodFloor) {
    // The flag contradicts every hypothesis; keep the unconditioned prediction.
    mass = predicted_mass(model, b, a, next, completed, false);
    normalize(mass);
  }
  return Belief(next, b.t_min(), std::move(mass));
}

Belief update(const Model &model, const Belief &b, Action a, Observation o,
              bool completed) {
  require_estimate(model, o);
  if (!model.valid_completion(a.announce))
    throw InvalidArgument("announcement outside [t_min, t_max]");
  const ObservableState next = successor(b, a);
  auto mass = predicted_mass(model, b, a, next, completed, true);
  const auto column = static_cast<std::size_t>(o.estimate - model.t_min());
  for (int y = b.t_min(); y <= b.t_max(); ++y) {
    auto &m = mass[static_cast<std::size_t>(y - b.t_min())];
    if (m > 0.0)
      m *= model.observation_row(next.t, y)[column];
  }
  if (normalize(mass) <= kLikelihoodFloor)
    throw ZeroLikelihood("no completion hypothesis explains estimate " +
                         std::to_string(o.estimate) + " at week " +
                         std::to_string(next.t));
  return Belief(next, b.t_min(), std::move(mass));
}

Belief update_or_predict(const Model &model, const Belief &b, Action a,
                         Observation o, bool completed) {
  try {
    return update(model, b, a, o, completed);
  } catch (const ZeroLikelihood &e) {
    std::clog << "warning: " << e.what() << "; using predicted belief\n";
    return predict(model, b, a, completed);
  }
}

HiddenState most_likely_completion(const Belief &b) {
  int best = b.t_min();
  double best_p = b.probability(best);
  for (int y = b.t_min() + 1; y <= b.t_max(); ++y) {
    const double p = b.probability(y);
    if (p > best_p + 1e-12) {
      best = y;
      best_p = p;
    }
  }
  return {best};
}

nlohmann::json belief_to_json(const Belief &b) {
  auto out = nlohmann::json::array();
  for (int y = b.t_min(); y <= b.t_max(); ++y)
    out.push_back({{"completion", y}, {"probability", b.probability(y)}});
  return out;
}

} // namespace announce
