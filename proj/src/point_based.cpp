#include "announce/solvers.hpp"

#include "announce/belief.hpp"
#include "announce/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace announce {

namespace {

using Clock = std::chrono::steady_clock;

struct LowerAlpha {
  int action;
  std::vector<double> values;
};

struct UpperPoint {
  std::vector<double> belief;
  double value;
  double corner_value; // corner interpolation at `belief` when inserted
};

/// One outcome of announcing at (x, b): the successor observable time, the
/// completion flag, the estimate and the posterior it leads to.
struct Branch {
  int t_next;
  bool completed;
  double probability;
  std::vector<double> belief;
};

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != 0.0)
      s += a[i] * b[i];
  return s;
}

class PointBasedSolver {
public:
  PointBasedSolver(const Model &model, const Policy &qmdp, const PointBasedOptions &options)
      : model_(model), options_(options), n_(model.num_completions()),
        t_min_(model.t_min()), t_max_(model.t_max()), gamma_(model.discount()) {
    const std::size_t num_x = model.num_observables();
    const auto n = static_cast<std::size_t>(n_);
    qmdp_q_.assign(num_x, std::vector<double>(n * n));
    corner_.assign(num_x, std::vector<double>(n));
    for (std::size_t xi = 0; xi < num_x; ++xi) {
      const ObservableState x = model.observable_of(xi);
      const std::size_t offset = model.slice_offset(x.t, x.prev_announce);
      for (const auto &alpha : qmdp.alphas()) {
        const auto a = static_cast<std::size_t>(alpha.action - t_min_);
        for (std::size_t k = 0; k < n; ++k)
          qmdp_q_[xi][a * n + k] = alpha.values[offset + k];
      }
      for (std::size_t k = 0; k < n; ++k) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < n; ++a)
          best = std::max(best, qmdp_q_[xi][a * n + k]);
        corner_[xi][k] = best;
      }
    }
    points_.resize(num_x);
    init_lower_bound();
  }


  std::pair<double, double> root_bounds() const {
    double lo = 0.0, hi = 0.0;
    for (const auto &[p, b] : root_branches_) {
      lo += p * lower(root_x_, b);
      hi += p * upper(root_x_, b);
    }
    return {lo, hi};
  }

  void build_root() {
    const Belief prior = initial_belief(model_);
    root_x_ = model_.observable_index(prior.observable());
    for (int o = t_min_; o <= t_max_; ++o) {
      double p = 0.0;
      for (int y = t_min_; y <= t_max_; ++y)
        p += prior.probability(y) * z(0, y, o);
      if (p <= 0.0)
        continue;
      const Belief b = condition_on_observation(model_, prior, {o});
      root_branches_.emplace_back(p, std::vector<double>(b.mass().begin(), b.mass().end()));
    }
  }

  /// One trial from the root. Returns false when the deadline stopped it.
  bool trial(double precision) {
    std::size_t pick = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < root_branches_.size(); ++i) {
      const auto &[p, b] = root_branches_[i];
      const double excess = p * (upper(root_x_, b) - lower(root_x_, b) - precision);
      if (excess > best) {
        best = excess;
        pick = i;
      }
    }
    explore(root_x_, root_branches_[pick].second, 0, precision);
    return !expired();
  }

  std::vector<AlphaVector> policy_alphas() const {
    std::vector<AlphaVector> out;
    for (std::size_t xi = 0; xi < lower_.size(); ++xi) {
      const ObservableState x = model_.observable_of(xi);
      for (const auto &alpha : lower_[xi])
        out.push_back({alpha.action, alpha.values, x});
    }
    return out;
  }

  void set_deadline(Clock::time_point deadline) { deadline_ = deadline; }
  bool expired() const { return Clock::now() >= deadline_; }

private:
  double z(int t, int y, int o) const {
    return model_.observation_row(t, y)[static_cast<std::size_t>(o - t_min_)];
  }
  std::size_t xindex(int t, int prev) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(prev - t_min_);
  }

  // "Announce a now, then keep it until completion, then announce the true
  // completion" for every (x, a). Each continuation is itself one of these
  // vectors at the successor state, so greedy execution attains the bound.
  void init_lower_bound() {
    const auto n = static_cast<std::size_t>(n_);
    const auto T = static_cast<std::size_t>(t_max_ + 1);
    std::vector<double> keep(T * n * n, 0.0); // [t][p][y]
    auto K = [&](int t, int p, int y) -> double & {
      return keep[(static_cast<std::size_t>(t) * n + static_cast<std::size_t>(p - t_min_)) * n +
                  static_cast<std::size_t>(y - t_min_)];
    };
    for (int t = t_max_; t >= 0; --t)
      for (int p = t_min_; p <= t_max_; ++p)
        for (int y = t_min_; y <= t_max_; ++y)
          K(t, p, y) = t >= y ? 0.0 : model_.reward_of(t, p, y, p) + gamma_ * K(t + 1, p, y);

    lower_.assign(model_.num_observables(), {});
    for (std::size_t xi = 0; xi < lower_.size(); ++xi) {
      const ObservableState x = model_.observable_of(xi);
      for (int a = t_min_; a <= t_max_; ++a) {
        LowerAlpha alpha{a, std::vector<double>(n)};
        for (int y = t_min_; y <= t_max_; ++y) {
          const int t_next = x.t >= y ? x.t : x.t + 1;
          const HiddenTransition k = model_.hidden_kernel(x.t, x.prev_announce, y, a);
          double future = 0.0;
          for (int i = 0; i < k.size; ++i)
            future += k.probability[i] * K(t_next, a, k.completion[i]);
          alpha.values[static_cast<std::size_t>(y - t_min_)] =
              model_.reward_of(x.t, x.prev_announce, y, a) + gamma_ * future;
        }
        lower_[xi].push_back(std::move(alpha));
      }
    }
  }

  double lower(std::size_t xi, std::span<const double> b) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto &alpha : lower_[xi])
      best = std::max(best, dot(b, alpha.values));
    return best;
  }

  double upper(std::size_t xi, std::span<const double> b) const {
    const auto n = static_cast<std::size_t>(n_);
    const auto &q = qmdp_q_[xi];
    double qmdp = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < n; ++a)
      qmdp = std::max(qmdp, dot(b, std::span<const double>(q.data() + a * n, n)));
    const double corner = dot(b, corner_[xi]);
    double sawtooth = corner;
    for (const auto &point : points_[xi]) {
      double ratio = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < n; ++k)
        if (point.belief[k] > 0.0)
          ratio = std::min(ratio, b[k] / point.belief[k]);
      sawtooth = std::min(sawtooth, corner + ratio * (point.value - point.corner_value));
    }
    return std::min(qmdp, sawtooth);
  }

  // Predicted successor mass for the hypotheses y whose successor time is
  // t_next (y > t advances, y <= t stays).
  std::vector<double> predicted(int t, int prev, std::span<const double> b, int a,
                                bool advancing) const {
    std::vector<double> pred(static_cast<std::size_t>(n_), 0.0);
    for (int y = t_min_; y <= t_max_; ++y) {
      const double p = b[static_cast<std::size_t>(y - t_min_)];
      if (p <= 0.0 || (t < y) != advancing)
        continue;
      const HiddenTransition k = model_.hidden_kernel(t, prev, y, a);
      for (int i = 0; i < k.size; ++i)
        pred[static_cast<std::size_t>(k.completion[i] - t_min_)] += p * k.probability[i];
    }
    return pred;
  }

  std::vector<Branch> branches(int t, int prev, std::span<const double> b, int a) const {
    std::vector<Branch> out;
    for (bool advancing : {true, false}) {
      const int t_next = advancing ? t + 1 : t;
      if (t_next > t_max_)
        continue;
      const auto pred = predicted(t, prev, b, a, advancing);
      // Completion observed: the estimate is exact, one branch per week.
      for (int y = t_min_; y <= std::min(t_next, t_max_); ++y) {
        const double p = pred[static_cast<std::size_t>(y - t_min_)];
        if (p <= 0.0)
          continue;
        std::vector<double> belief(static_cast<std::size_t>(n_), 0.0);
        belief[static_cast<std::size_t>(y - t_min_)] = 1.0;
        out.push_back({t_next, true, p, std::move(belief)});
      }
      for (int o = t_min_; o <= t_max_; ++o) {
        std::vector<double> w(static_cast<std::size_t>(n_), 0.0);
        double total = 0.0;
        for (int y = std::max(t_next + 1, t_min_); y <= t_max_; ++y) {
          const double p = pred[static_cast<std::size_t>(y - t_min_)];
          if (p <= 0.0)
            continue;
          w[static_cast<std::size_t>(y - t_min_)] = p * z(t_next, y, o);
          total += w[static_cast<std::size_t>(y - t_min_)];
        }
        if (total <= kLikelihoodFloor)
          continue;
        for (double &v : w)
          v /= total;
        out.push_back({t_next, false, total, std::move(w)});
      }
    }
    return out;
  }

  double expected_reward(int t, int prev, std::span<const double> b, int a) const {
    double r = 0.0;
    for (int y = t_min_; y <= t_max_; ++y) {
      const double p = b[static_cast<std::size_t>(y - t_min_)];
      if (p > 0.0)
        r += p * model_.reward_of(t, prev, y, a);
    }
    return r;
  }

  double upper_q(int t, int prev, std::span<const double> b, int a,
                 const std::vector<Branch> &outs) const {
    double future = 0.0;
    for (const auto &br : outs)
      future += br.probability * upper(xindex(br.t_next, a), br.belief);
    return expected_reward(t, prev, b, a) + gamma_ * future;
  }

  // Exact point-based backup of the lower bound for announcement a.
  LowerAlpha backup_lower(int t, int prev, std::span<const double> b, int a) const {
    const auto n = static_cast<std::size_t>(n_);
    LowerAlpha out{a, std::vector<double>(n, 0.0)};
    for (bool advancing : {true, false}) {
      const int t_next = advancing ? t + 1 : t;
      if (t_next > t_max_)
        continue;
      const auto &gamma_set = lower_[xindex(t_next, a)];
      const auto pred = predicted(t, prev, b, a, advancing);
      // continuation[y'] = sum over observations of Z * chosen alpha(y').
      std::vector<double> continuation(n, 0.0);
      for (int y = t_min_; y <= std::min(t_next, t_max_); ++y) {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto &alpha : gamma_set)
          best = std::max(best, alpha.values[static_cast<std::size_t>(y - t_min_)]);
        continuation[static_cast<std::size_t>(y - t_min_)] = best;
      }
      const int first_open = std::max(t_next + 1, t_min_);
      if (first_open <= t_max_) {
        bool any_mass = false;
        for (int y = first_open; y <= t_max_; ++y)
          any_mass = any_mass || pred[static_cast<std::size_t>(y - t_min_)] > 0.0;
        std::vector<double> w(n);
        for (int o = t_min_; o <= t_max_; ++o) {
          std::fill(w.begin(), w.end(), 0.0);
          for (int y = first_open; y <= t_max_; ++y)
            w[static_cast<std::size_t>(y - t_min_)] =
                (any_mass ? pred[static_cast<std::size_t>(y - t_min_)] : 1.0) * z(t_next, y, o);
          const LowerAlpha *chosen = &gamma_set.front();
          double best = -std::numeric_limits<double>::infinity();
          for (const auto &alpha : gamma_set) {
            const double v = dot(w, alpha.values);
            if (v > best) {
              best = v;
              chosen = &alpha;
            }
          }
          for (int y = first_open; y <= t_max_; ++y) {
            const auto k = static_cast<std::size_t>(y - t_min_);
            continuation[k] += z(t_next, y, o) * chosen->values[k];
          }
        }
      }
      for (int y = t_min_; y <= t_max_; ++y) {
        if ((t < y) != advancing)
          continue;
        const HiddenTransition k = model_.hidden_kernel(t, prev, y, a);
        double future = 0.0;
        for (int i = 0; i < k.size; ++i)
          future += k.probability[i] * continuation[static_cast<std::size_t>(k.completion[i] - t_min_)];
        out.values[static_cast<std::size_t>(y - t_min_)] =
            model_.reward_of(t, prev, y, a) + gamma_ * future;
      }
    }
    return out;
  }

  void backup(std::size_t xi, std::span<const double> b) {
    const ObservableState x = model_.observable_of(xi);

    // Lower bound: keep the best backed-up vector if it improves at b.
    const double current_lower = lower(xi, b);
    std::optional<LowerAlpha> best_alpha;
    double best_value = current_lower;
    for (int a = t_min_; a <= t_max_; ++a) {
      LowerAlpha alpha = backup_lower(x.t, x.prev_announce, b, a);
      const double v = dot(b, alpha.values);
      if (v > best_value + 1e-12) {
        best_value = v;
        best_alpha = std::move(alpha);
      }
    }
    if (best_alpha)
      insert_lower(xi, std::move(*best_alpha));

    // Upper bound: add a sawtooth point if the backup tightens it at b.
    double best_upper = -std::numeric_limits<double>::infinity();
    for (int a = t_min_; a <= t_max_; ++a)
      best_upper = std::max(best_upper, upper_q(x.t, x.prev_announce, b, a,
                                                branches(x.t, x.prev_announce, b, a)));
    if (best_upper < upper(xi, b) - 1e-12) {
      std::vector<double> belief(b.begin(), b.end());
      const double corner = dot(belief, corner_[xi]);
      bool is_corner = false;
      for (std::size_t k = 0; k < belief.size(); ++k) {
        if (belief[k] == 1.0) {
          corner_[xi][k] = std::min(corner_[xi][k], best_upper);
          is_corner = true;
        }
      }
      if (!is_corner)
        points_[xi].push_back({std::move(belief), best_upper, corner});
    }
  }

  void insert_lower(std::size_t xi, LowerAlpha alpha) {
    auto &set = lower_[xi];
    std::erase_if(set, [&](const LowerAlpha &old) {
      for (std::size_t k = 0; k < old.values.size(); ++k)
        if (old.values[k] > alpha.values[k])
          return false;
      return true;
    });
    set.push_back(std::move(alpha));
  }

  void explore(std::size_t xi, std::span<const double> b, int depth, double precision) {
    if (expired())
      return;
    const double threshold = precision * std::pow(gamma_, -depth);
    if (upper(xi, b) - lower(xi, b) <= threshold)
      return;
    const ObservableState x = model_.observable_of(xi);

    int best_action = t_min_;
    double best_q = -std::numeric_limits<double>::infinity();
    std::vector<Branch> best_branches;
    for (int a = t_min_; a <= t_max_; ++a) {
      auto outs = branches(x.t, x.prev_announce, b, a);
      const double q = upper_q(x.t, x.prev_announce, b, a, outs);
      if (q > best_q) {
        best_q = q;
        best_action = a;
        best_branches = std::move(outs);
      }
    }

    const double child_threshold = precision * std::pow(gamma_, -(depth + 1));
    const Branch *next = nullptr;
    double best_excess = 0.0;
    for (const auto &br : best_branches) {
      const std::size_t child = xindex(br.t_next, best_action);
      const double excess =
          br.probability * (upper(child, br.belief) - lower(child, br.belief) - child_threshold);
      if (excess > best_excess) {
        best_excess = excess;
        next = &br;
      }
    }
    if (next)
      explore(xindex(next->t_next, best_action), next->belief, depth + 1, precision);
    backup(xi, b);
  }

  const Model &model_;
  const PointBasedOptions &options_;
  int n_, t_min_, t_max_;
  double gamma_;
  std::vector<std::vector<double>> qmdp_q_; // [x][a * n + k]
  std::vector<std::vector<double>> corner_; // [x][k]
  std::vector<std::vector<UpperPoint>> points_;
  std::vector<std::vector<LowerAlpha>> lower_;
  std::size_t root_x_ = 0;
  std::vector<std::pair<double, std::vector<double>>> root_branches_;
  Clock::time_point deadline_ = Clock::time_point::max();
};

} // namespace

Solution solve_point_based(const Model &model, const PointBasedOptions &options) {
  if (!(options.precision > 0.0))
    throw InvalidArgument("precision must be positive");
  const auto start = Clock::now();
  const Solution qmdp = solve_qmdp(model, options.qmdp);

  PointBasedSolver solver(model, qmdp.policy, options);
  solver.build_root();
  if (std::isfinite(options.time_budget)) {
    const auto budget = std::chrono::duration_cast<Clock::duration>(
        std::chrono::duration<double>(std::max(0.0, options.time_budget)));
    solver.set_deadline(start + budget);
  }

  SolveReport report;
  auto [lower, upper] = solver.root_bounds();
  report.status = "converged";
  while (upper - lower >= options.precision) {
    if (report.iterations >= options.max_trials) {
      report.status = "TrialLimit";
      break;
    }
    if (solver.expired()) {
      report.status = "TimeBudgetExceeded";
      break;
    }
    solver.trial(options.precision);
    ++report.iterations;
    std::tie(lower, upper) = solver.root_bounds();
    if (options.on_trial)
      options.on_trial(report.iterations, lower, upper);
  }
  report.converged = upper - lower < options.precision;
  if (report.converged)
    report.status = "converged";
  report.residual = std::max(0.0, upper - lower);
  report.bounds = std::make_pair(lower, upper);

  Policy policy(PolicyKind::point_based, model.config(), solver.policy_alphas());
  report.wall_time = std::chrono::duration<double>(Clock::now() - start).count();
  return {std::move(policy), report};
}

} // namespace announce
