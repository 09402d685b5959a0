#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "epw/mdp.hpp"
#include "epw/policy.hpp"

namespace epw::testutil {

inline double chi_square_pvalue(double statistic, int dof) {
  if (dof <= 0) return 1.0;
  boost::math::chi_squared dist(static_cast<double>(dof));
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

// One ordinary state per level, both actions advance the chain: a game
// with no reachable failure.
inline Enumeration safe_chain(int horizon, int actions = 2) {
  Enumeration e;
  e.horizon = horizon;
  e.action_count = actions;
  e.feature_dim = 2;
  e.level_ids.resize(static_cast<std::size_t>(horizon));
  for (int h = 0; h < horizon; ++h) {
    State s;
    s.id = h;
    s.level = h;
    s.kind = StateKind::kOrdinary;
    s.features = {1.0, static_cast<double>(h)};
    e.states.push_back(s);
    e.level_ids[static_cast<std::size_t>(h)].push_back(h);
    e.transitions.emplace_back();
    if (h + 1 < horizon)
      e.transitions.back().assign(static_cast<std::size_t>(actions),
                                  {TransitionEntry{h + 1, 1.0}});
  }
  e.initial_id = 0;
  return e;
}

// Three levels, two actions, stochastic with a failure state on each of
// levels 1 and 2; small enough for exact path enumeration.
inline Enumeration tiny_risky() {
  Enumeration e;
  e.horizon = 3;
  e.action_count = 2;
  e.feature_dim = 2;
  e.level_ids.resize(3);
  auto add = [&](int level, StateKind kind, double f0) {
    State s;
    s.id = static_cast<int>(e.states.size());
    s.level = level;
    s.kind = kind;
    s.features = {f0, static_cast<double>(level)};
    e.states.push_back(s);
    e.level_ids[static_cast<std::size_t>(level)].push_back(s.id);
    e.transitions.emplace_back();
    return s.id;
  };
  const int s0 = add(0, StateKind::kOrdinary, 1.0);
  const int good1 = add(1, StateKind::kOrdinary, 1.0);
  const int shaky1 = add(1, StateKind::kOrdinary, -1.0);
  const int fail1 = add(1, StateKind::kFailure, 0.0);
  const int win2 = add(2, StateKind::kOrdinary, 1.0);
  const int win2b = add(2, StateKind::kOrdinary, 2.0);
  const int fail2 = add(2, StateKind::kFailure, 0.0);
  const int sink2 = add(2, StateKind::kAbsorbed, -1.0);

  e.transitions[static_cast<std::size_t>(s0)] = {
      {TransitionEntry{good1, 0.7}, TransitionEntry{shaky1, 0.3}},
      {TransitionEntry{shaky1, 0.5}, TransitionEntry{fail1, 0.5}}};
  e.transitions[static_cast<std::size_t>(good1)] = {
      {TransitionEntry{win2, 1.0}},
      {TransitionEntry{win2b, 0.8}, TransitionEntry{fail2, 0.2}}};
  e.transitions[static_cast<std::size_t>(shaky1)] = {
      {TransitionEntry{win2, 0.4}, TransitionEntry{fail2, 0.6}},
      {TransitionEntry{fail2, 1.0}}};
  e.transitions[static_cast<std::size_t>(fail1)] = {
      {TransitionEntry{sink2, 1.0}}, {TransitionEntry{sink2, 1.0}}};
  e.initial_id = s0;
  return e;
}

// Exact expectation of a trajectory functional under the sampler's measure:
// ordinary and failure states act through the level slot, absorbed states
// record uniform actions. The functional sees (state ids, actions).
inline double exact_expectation(
    const Enumeration& e, const PolicyFamily& family, const PolicyVector& thetas,
    const std::function<double(const std::vector<int>&, const std::vector<int>&)>& f) {
  std::vector<int> ids, acts;
  std::vector<double> probs(static_cast<std::size_t>(e.action_count));
  double total = 0.0;
  std::function<void(int, double)> walk = [&](int id, double p) {
    ids.push_back(id);
    const int h = static_cast<int>(ids.size()) - 1;
    const State& s = e.state(id);
    for (int a = 0; a < e.action_count; ++a) {
      double pa;
      if (s.kind == StateKind::kAbsorbed) {
        pa = 1.0 / e.action_count;
      } else {
        family.action_probs(thetas.slots[static_cast<std::size_t>(h)], s, probs);
        pa = probs[static_cast<std::size_t>(a)];
      }
      if (pa == 0.0) continue;
      acts.push_back(a);
      if (h == e.horizon - 1) {
        total += p * pa * f(ids, acts);
      } else {
        for (const TransitionEntry& tr : e.successors(id, a))
          if (tr.prob > 0.0) walk(tr.next_id, p * pa * tr.prob);
      }
      acts.pop_back();
    }
    ids.pop_back();
  };
  walk(e.initial_id, 1.0);
  return total;
}

// Test-only family that always plays one fixed action per level.
class ForcedActionFamily final : public PolicyFamily {
 public:
  ForcedActionFamily(int actions, int fdim, std::vector<int> plan)
      : actions_(actions), fdim_(fdim), plan_(std::move(plan)) {}

  int param_dim() const override { return 1; }
  int action_count() const override { return actions_; }
  int feature_dim() const override { return fdim_; }
  double norm_bound() const override { return 1.0; }
  std::string tag() const override { return "forced"; }

  void action_probs(const PolicyParams&, const State& s,
                    std::span<double> out) const override {
    for (double& v : out) v = 0.0;
    const int a = plan_[static_cast<std::size_t>(s.level) % plan_.size()];
    out[static_cast<std::size_t>(a)] = 1.0;
  }
  double prob_and_grad(const PolicyParams&, const State& s, int action,
                       std::span<double> grad) const override {
    grad[0] = 0.0;
    const int a = plan_[static_cast<std::size_t>(s.level) % plan_.size()];
    return action == a ? 1.0 : 0.0;
  }
  double certified_lipschitz(double) const override { return 0.0; }

 private:
  int actions_;
  int fdim_;
  std::vector<int> plan_;
};

}  // namespace epw::testutil
