#include "epw/mdp.hpp"

#include <cmath>
#include <string>

#include "epw/errors.hpp"

namespace epw {

double State::norm() const {
  double acc = 0.0;
  for (double v : features) acc += v * v;
  return std::sqrt(acc);
}

int Enumeration::count_kind(StateKind k) const {
  int n = 0;
  for (const State& s : states) n += (s.kind == k) ? 1 : 0;
  return n;
}

int Enumeration::count_kind_at_level(int level, StateKind k) const {
  int n = 0;
  for (int id : level_ids[static_cast<std::size_t>(level)])
    n += (state(id).kind == k) ? 1 : 0;
  return n;
}

double Enumeration::max_state_norm() const {
  double best = 0.0;
  for (const State& s : states) best = std::max(best, s.norm());
  return best;
}

void Enumeration::validate() const {
  if (horizon < 1) throw ConfigError("enumeration: horizon must be >= 1");
  if (action_count < 2) throw ConfigError("enumeration: need at least 2 actions");
  if (static_cast<int>(level_ids.size()) != horizon)
    throw ConfigError("enumeration: level table size != horizon");
  if (states.empty()) throw ConfigError("enumeration: no states");
  if (transitions.size() != states.size())
    throw ConfigError("enumeration: transition table size != state count");

  std::vector<char> seen(states.size(), 0);
  for (int h = 0; h < horizon; ++h) {
    for (int id : level_ids[static_cast<std::size_t>(h)]) {
      if (id < 0 || id >= state_count())
        throw ConfigError("enumeration: state id out of range");
      if (seen[static_cast<std::size_t>(id)])
        throw ConfigError("enumeration: state listed on two levels");
      seen[static_cast<std::size_t>(id)] = 1;
      const State& s = state(id);
      if (s.level != h) throw ConfigError("enumeration: state level mismatch");
      if (s.id != id) throw ConfigError("enumeration: state id mismatch");
      if (static_cast<int>(s.features.size()) != feature_dim)
        throw ConfigError("enumeration: feature dimension mismatch");
    }
  }
  for (char c : seen)
    if (!c) throw ConfigError("enumeration: state missing from level table");

  if (initial_id < 0 || initial_id >= state_count() ||
      state(initial_id).level != 0)
    throw ConfigError("enumeration: initial state must sit on level 0");

  for (int id = 0; id < state_count(); ++id) {
    const State& s = state(id);
    const auto& rows = transitions[static_cast<std::size_t>(id)];
    if (s.level == horizon - 1) {
      if (!rows.empty())
        throw ConfigError("enumeration: last-level state has transitions");
      continue;
    }
    if (static_cast<int>(rows.size()) != action_count)
      throw ConfigError("enumeration: state is missing action rows");
    for (const auto& row : rows) {
      if (row.empty())
        throw ConfigError("enumeration: empty successor distribution");
      double sum = 0.0;
      for (const TransitionEntry& e : row) {
        if (e.next_id < 0 || e.next_id >= state_count())
          throw ConfigError("enumeration: successor id out of range");
        if (e.prob < 0.0)
          throw ConfigError("enumeration: negative transition probability");
        if (state(e.next_id).level != s.level + 1)
          throw ConfigError("enumeration: successor not one level down");
        sum += e.prob;
      }
      if (std::abs(sum - 1.0) > 1e-12)
        throw ConfigError("enumeration: probabilities for (state " +
                          std::to_string(id) + ") do not sum to 1");
    }
  }
}

TabularMdp::TabularMdp(std::string name, Enumeration data)
    : name_(std::move(name)), data_(std::move(data)) {
  data_.validate();
  norm_bound_ = data_.max_state_norm();
}

State TabularMdp::sample_transition(const State& s, int action, RngStream& rng) const {
  const auto row = data_.successors(s.id, action);
  const double u = rng.next_double();
  double acc = 0.0;
  int chosen = row.back().next_id;
  for (const TransitionEntry& e : row) {
    acc += e.prob;
    if (u < acc) {
      chosen = e.next_id;
      break;
    }
  }
  return data_.state(chosen);
}

}  // namespace epw
