#pragma once

#include "announce/model.hpp"

#include <nlohmann/json.hpp>
#include <span>
#include <vector>

namespace announce {

/// Distribution over the true completion time, attached to the observable
/// state it was computed for. Entry k holds P(true completion = t_min + k).
class Belief {
public:
  Belief(ObservableState observable, int t_min, std::vector<double> mass);

  const ObservableState &observable() const { return observable_; }
  std::span<const double> mass() const { return mass_; }
  int t_min() const { return t_min_; }
  int t_max() const { return t_min_ + static_cast<int>(mass_.size()) - 1; }
  double probability(int completion) const;

  /// True when all mass sits on completion times <= t.
  bool completed() const;

  bool operator==(const Belief &) const = default;

private:
  ObservableState observable_;
  int t_min_;
  std::vector<double> mass_;
};

/// Floor on the unnormalized posterior below which update() gives up.
inline constexpr double kLikelihoodFloor = 1e-300;

/// Uniform prior at t = 0; the placeholder previous announcement is t_min.
Belief initial_belief(const Model &model);

/// Bayes rule on an observation made at b.observable(), no transition.
/// Used for the estimate received before the first announcement.
Belief condition_on_observation(const Model &model, const Belief &b,
                                Observation o);

/// Transition-predicted belief at the next observable state, with the
/// completion flag applied but no observation likelihood.
Belief predict(const Model &model, const Belief &b, Action a, bool completed);

/// One filter step: announce `a` at b.observable(), then receive `o` and the
/// completion flag at the successor observable state. If `completed` is false
/// the hypotheses already past (completion <= t') are discarded; if true only
/// completion == t' survives. Throws ZeroLikelihood when nothing survives.
Belief update(const Model &model, const Belief &b, Action a, Observation o,
              bool completed);

/// update(), falling back to predict() with a logged warning on ZeroLikelihood.
Belief update_or_predict(const Model &model, const Belief &b, Action a,
                         Observation o, bool completed);

/// Argmax of the mass; ties within 1e-12 go to the earliest completion.
HiddenState most_likely_completion(const Belief &b);

/// [{"completion": w, "probability": p}, ...]
nlohmann::json belief_to_json(const Belief &b);

} // namespace announce
