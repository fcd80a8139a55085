#pragma once

// One-step tabular Q-learning with a linearly decaying epsilon-greedy policy,
// generic over any episodic environment with discrete states and actions.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace monoland::agent {

using Rng = std::mt19937_64;

struct QLearningParams {
  double alpha = 0.1;
  double gamma = 0.99;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double decay_fraction = 0.6;  // share of episodes over which epsilon decays
  std::size_t max_steps = 600;  // per-episode cap

  bool operator==(const QLearningParams&) const = default;
};

/// Dense state x action table of reals.
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t states, std::size_t actions, double init = 0.0)
      : states_(states), actions_(actions), values_(states * actions, init) {}

  std::size_t state_count() const { return states_; }
  std::size_t action_count() const { return actions_; }

  std::span<double> row(std::size_t s) { return {values_.data() + s * actions_, actions_}; }
  std::span<const double> row(std::size_t s) const { return {values_.data() + s * actions_, actions_}; }
  double& at(std::size_t s, std::size_t a) { return values_[s * actions_ + a]; }
  double at(std::size_t s, std::size_t a) const { return values_[s * actions_ + a]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool all_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  bool operator==(const QTable&) const = default;

 private:
  std::size_t states_ = 0;
  std::size_t actions_ = 0;
  std::vector<double> values_;
};

/// Lowest-index argmax.
inline std::size_t greedy_action(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

/// True once any entry of the row has been updated away from zero.
inline bool visited(std::span<const double> row) {
  return std::any_of(row.begin(), row.end(), [](double v) { return v != 0.0; });
}

inline double max_value(std::span<const double> row) { return *std::max_element(row.begin(), row.end()); }

inline std::size_t act(const QTable& q, std::size_t state, bool greedy, double epsilon, Rng& rng) {
  if (state >= q.state_count()) throw std::out_of_range("state index out of range");
  if (!greedy) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < epsilon) {
      std::uniform_int_distribution<std::size_t> pick(0, q.action_count() - 1);
      return pick(rng);
    }
  }
  return greedy_action(q.row(state));
}

inline double epsilon_at(const QLearningParams& p, std::size_t episode, std::size_t episodes) {
  const double span = p.decay_fraction * static_cast<double>(episodes);
  if (span <= 0.0) return p.epsilon_end;
  const double t = static_cast<double>(episode) / span;
  if (t >= 1.0) return p.epsilon_end;
  return p.epsilon_start + (p.epsilon_end - p.epsilon_start) * t;
}

struct Transition {
  std::size_t next_state = 0;
  double reward = 0.0;
  bool terminal = false;
  bool truncated = false;  // episode cut short; the update still bootstraps
};

template <typename E>
concept QEnvironment = requires(E env, Rng& rng, std::size_t action) {
  { env.state_count() } -> std::convertible_to<std::size_t>;
  { env.action_count() } -> std::convertible_to<std::size_t>;
  { env.reset(rng) } -> std::convertible_to<std::size_t>;
  { env.step(action) } -> std::same_as<Transition>;
};

struct EpisodeStat {
  std::size_t episode = 0;
  double episode_return = 0.0;
  double epsilon = 0.0;
  std::size_t steps = 0;
};

struct TrainResult {
  QTable q;
  std::vector<EpisodeStat> curve;
};

/// Trains from a zero-initialized table (or `initial` when given). Episodes
/// that hit the step cap or report truncation end without a terminal update.
template <QEnvironment Env>
TrainResult train(Env& env, const QLearningParams& params, std::size_t episodes, std::uint64_t seed,
                  const QTable* initial = nullptr) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  TrainResult out;
  out.q = initial ? *initial : QTable(env.state_count(), env.action_count());
  out.curve.reserve(episodes);
  Rng rng(seed);
  for (std::size_t ep = 0; ep < episodes; ++ep) {
    const double eps = epsilon_at(params, ep, episodes);
    std::size_t s = env.reset(rng);
    double ret = 0.0;
    std::size_t steps = 0;
    while (steps < params.max_steps) {
      const std::size_t a = act(out.q, s, false, eps, rng);
      const Transition tr = env.step(a);
      ++steps;
      ret += tr.reward;
      const double target = tr.terminal ? tr.reward : tr.reward + params.gamma * max_value(out.q.row(tr.next_state));
      double& qsa = out.q.at(s, a);
      qsa += params.alpha * (target - qsa);
      if (tr.terminal || tr.truncated) break;
      s = tr.next_state;
    }
    out.curve.push_back({ep, ret, eps, steps});
  }
  return out;
}

}  // namespace monoland::agent
