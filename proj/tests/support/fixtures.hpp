#pragma once

// Fitted models shared by the tests of one binary. Built lazily, once.

#include "oracles.hpp"

#include <monoland/config.hpp>
#include <monoland/workflow.hpp>

#include <random>

namespace fixture {

using namespace monoland;

// The oracle chain wrapped as a training environment; episodes start in a
// uniformly drawn state.
class ChainEnv {
 public:
  explicit ChainEnv(oracle::ChainMdp mdp = {}) : mdp_(mdp) {}
  std::size_t state_count() const { return mdp_.n; }
  std::size_t action_count() const { return 2; }
  std::size_t reset(agent::Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, mdp_.n - 1);
    s_ = pick(rng);
    return s_;
  }
  agent::Transition step(std::size_t a) {
    const auto o = mdp_.transition(s_, a);
    s_ = o.next;
    agent::Transition t;
    t.next_state = o.next;
    t.reward = o.reward;
    t.terminal = o.terminal;
    return t;
  }
  const oracle::ChainMdp& mdp() const { return mdp_; }

 private:
  oracle::ChainMdp mdp_;
  std::size_t s_ = 0;
};

inline const Config& config() {
  static const Config c;
  return c;
}

inline const EstimatorModel& estimator() {
  static const EstimatorModel m = workflow::fit_estimator(config());
  return m;
}

// Short training run: enough for a policy that lands from some cases, not a
// tuned one. Only used where any fixed policy will do.
inline const agent::TrainedPolicy& quick_training() {
  static const agent::TrainedPolicy t = [] {
    Config c = config();
    c.training.episodes = 10000;
    return workflow::train_one(c, estimator(), 1);
  }();
  return t;
}

inline const agent::PolicySnapshot& quick_policy() { return quick_training().policy; }

inline harness::ScenarioConfig static_case(std::size_t id) {
  return scenarios_for(config(), harness::SuiteKind::static_pad).at(id - 1);
}

}  // namespace fixture
