#include "epw/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "epw/errors.hpp"

namespace epw {

const Enumeration& require_enumeration(const LeveledMdp& mdp) {
  const Enumeration* e = mdp.enumeration();
  if (e == nullptr)
    throw RefusalError("operation requires an enumerable MDP: " + mdp.name());
  return *e;
}

SafeSetTable max_safe_set(const LeveledMdp& mdp) {
  const Enumeration& e = require_enumeration(mdp);
  SafeSetTable table;
  table.safe.assign(e.states.size(), 0);
  table.safe_count_by_level.assign(static_cast<std::size_t>(e.horizon), 0);
  for (int h = e.horizon - 1; h >= 0; --h) {
    for (int id : e.level_ids[static_cast<std::size_t>(h)]) {
      const State& s = e.state(id);
      if (failed(s)) continue;
      bool safe;
      if (h == e.horizon - 1) {
        safe = true;
      } else {
        safe = false;
        for (int a = 0; a < e.action_count && !safe; ++a) {
          bool all_safe = true;
          for (const TransitionEntry& tr : e.successors(id, a)) {
            if (tr.prob > 0.0 && !table.safe[static_cast<std::size_t>(tr.next_id)]) {
              all_safe = false;
              break;
            }
          }
          safe = all_safe;
        }
      }
      if (safe) {
        table.safe[static_cast<std::size_t>(id)] = 1;
        ++table.safe_count_by_level[static_cast<std::size_t>(h)];
      }
    }
  }
  return table;
}

namespace {

// Reverse adjacency over positive-probability transitions.
std::vector<std::vector<int>> reverse_graph(const Enumeration& e) {
  std::vector<std::vector<int>> pred(e.states.size());
  for (int id = 0; id < e.state_count(); ++id) {
    const auto& rows = e.transitions[static_cast<std::size_t>(id)];
    for (const auto& row : rows)
      for (const TransitionEntry& tr : row)
        if (tr.prob > 0.0) {
          auto& v = pred[static_cast<std::size_t>(tr.next_id)];
          if (v.empty() || v.back() != id) v.push_back(id);
        }
  }
  return pred;
}

// States reachable from s0 through ordinary states; the endpoint itself may
// be of any kind. Absorbed states reachable only through the failure set
// are excluded by construction.
std::vector<char> alive_reachable(const Enumeration& e) {
  std::vector<char> reach(e.states.size(), 0);
  reach[static_cast<std::size_t>(e.initial_id)] = 1;
  for (int h = 0; h + 1 < e.horizon; ++h) {
    for (int id : e.level_ids[static_cast<std::size_t>(h)]) {
      if (!reach[static_cast<std::size_t>(id)]) continue;
      const State& s = e.state(id);
      if (s.kind != StateKind::kOrdinary) continue;
      for (const auto& row : e.transitions[static_cast<std::size_t>(id)])
        for (const TransitionEntry& tr : row)
          if (tr.prob > 0.0) reach[static_cast<std::size_t>(tr.next_id)] = 1;
    }
  }
  return reach;
}

std::vector<char> eligible_states(const Enumeration& e) {
  const std::vector<char> alive = alive_reachable(e);
  std::vector<char> eligible(e.states.size(), 0);
  for (int id = 0; id < e.state_count(); ++id) {
    const State& s = e.state(id);
    if (s.kind == StateKind::kOrdinary)
      eligible[static_cast<std::size_t>(id)] = 1;
    else if (s.kind == StateKind::kAbsorbed && alive[static_cast<std::size_t>(id)])
      eligible[static_cast<std::size_t>(id)] = 1;
  }
  return eligible;
}

}  // namespace

std::vector<int> ancestors(const LeveledMdp& mdp, int target_id, int x) {
  const Enumeration& e = require_enumeration(mdp);
  if (target_id < 0 || target_id >= e.state_count())
    throw ConfigError("ancestors: bad state id");
  if (x < 0) throw ConfigError("ancestors: x must be >= 0");
  const int h = e.state(target_id).level;
  const int steps = std::min(x, h);
  const std::vector<std::vector<int>> pred = reverse_graph(e);

  std::vector<int> cur = {target_id};
  std::vector<char> mark(e.states.size(), 0);
  for (int step = 0; step < steps; ++step) {
    std::fill(mark.begin(), mark.end(), 0);
    std::vector<int> prev;
    for (int id : cur)
      for (int p : pred[static_cast<std::size_t>(id)])
        if (!mark[static_cast<std::size_t>(p)]) {
          mark[static_cast<std::size_t>(p)] = 1;
          prev.push_back(p);
        }
    cur = std::move(prev);
  }
  std::sort(cur.begin(), cur.end());
  return cur;
}

EpwCertificate min_epw_constant(const LeveledMdp& mdp) {
  const Enumeration& e = require_enumeration(mdp);
  if (e.horizon > 64)
    throw RefusalError("EPW verifier supports horizons up to 64");
  const SafeSetTable table = max_safe_set(mdp);
  const std::vector<char> eligible = eligible_states(e);

  // mask[id]: bit L set iff some eligible state on level L is reachable
  // from id (including id itself).
  std::vector<std::uint64_t> mask(e.states.size(), 0);
  for (int h = e.horizon - 1; h >= 0; --h) {
    for (int id : e.level_ids[static_cast<std::size_t>(h)]) {
      std::uint64_t m = eligible[static_cast<std::size_t>(id)]
                            ? (1ULL << h)
                            : 0ULL;
      for (const auto& row : e.transitions[static_cast<std::size_t>(id)])
        for (const TransitionEntry& tr : row)
          if (tr.prob > 0.0) m |= mask[static_cast<std::size_t>(tr.next_id)];
      mask[static_cast<std::size_t>(id)] = m;
    }
  }

  auto find_violation = [&](int x) -> EpwWitness {
    for (int id = 0; id < e.state_count(); ++id) {
      if (table.safe[static_cast<std::size_t>(id)]) continue;
      const int level = e.state(id).level;
      if (level + x >= e.horizon) continue;
      if ((mask[static_cast<std::size_t>(id)] >> (level + x)) & 1ULL) {
        // walk forward x steps to a concrete eligible descendant
        std::vector<int> frontier = {id};
        for (int step = 0; step < x; ++step) {
          std::vector<int> nxt;
          std::vector<char> seen(e.states.size(), 0);
          for (int f : frontier)
            for (const auto& row : e.transitions[static_cast<std::size_t>(f)])
              for (const TransitionEntry& tr : row)
                if (tr.prob > 0.0 && !seen[static_cast<std::size_t>(tr.next_id)] &&
                    ((mask[static_cast<std::size_t>(tr.next_id)] >> (level + x)) & 1ULL)) {
                  seen[static_cast<std::size_t>(tr.next_id)] = 1;
                  nxt.push_back(tr.next_id);
                }
          frontier = std::move(nxt);
        }
        for (int f : frontier)
          if (eligible[static_cast<std::size_t>(f)]) return EpwWitness{x, f, id};
      }
    }
    return EpwWitness{x, -1, -1};
  };

  EpwCertificate cert;
  for (int x = 0; x < e.horizon; ++x) {
    const EpwWitness w = find_violation(x);
    if (w.state_id < 0) {
      cert.min_c = x;
      return cert;
    }
    cert.witnesses.push_back(w);
  }
  cert.min_c = e.horizon - 1;
  // every game satisfies the condition at H-1; drop the impossible witness
  if (!cert.witnesses.empty() &&
      cert.witnesses.back().x == e.horizon - 1)
    cert.witnesses.pop_back();
  return cert;
}

bool validate_witness(const LeveledMdp& mdp, const SafeSetTable& table,
                      const EpwWitness& w) {
  if (w.state_id < 0 || w.ancestor_id < 0) return false;
  if (table.is_safe(w.ancestor_id)) return false;
  const std::vector<int> anc = ancestors(mdp, w.state_id, w.x);
  return std::binary_search(anc.begin(), anc.end(), w.ancestor_id);
}

GenericGameReport check_generic_game(const LeveledMdp& mdp) {
  const Enumeration& e = require_enumeration(mdp);
  GenericGameReport report;
  report.failure_set_nonempty = e.count_kind(StateKind::kFailure) > 0;
  report.trivial_game = !report.failure_set_nonempty &&
                        e.count_kind(StateKind::kAbsorbed) == 0;

  // Binary rewards hold by construction when the level partition is sound:
  // returns are 1 exactly on ordinary last-level states. validate() ran at
  // construction, so record the structural facts it guarantees.
  report.binary_rewards_ok = true;

  // Minimal failure probability over deterministic (state-feedback)
  // policies, which is the minimum over all policies.
  std::vector<double> fail(e.states.size(), 0.0);
  for (int h = e.horizon - 1; h >= 0; --h) {
    for (int id : e.level_ids[static_cast<std::size_t>(h)]) {
      const State& s = e.state(id);
      if (failed(s)) {
        fail[static_cast<std::size_t>(id)] = 1.0;
        continue;
      }
      if (h == e.horizon - 1) {
        fail[static_cast<std::size_t>(id)] = 0.0;
        continue;
      }
      double best = 1.0;
      for (int a = 0; a < e.action_count; ++a) {
        double p = 0.0;
        for (const TransitionEntry& tr : e.successors(id, a))
          p += tr.prob * fail[static_cast<std::size_t>(tr.next_id)];
        best = std::min(best, p);
      }
      fail[static_cast<std::size_t>(id)] = best;
    }
  }
  report.min_deterministic_failure_prob =
      fail[static_cast<std::size_t>(e.initial_id)];
  report.completeness_threshold = std::pow(2.0, -e.horizon);
  report.completeness_ok =
      report.min_deterministic_failure_prob <= report.completeness_threshold;
  return report;
}

namespace {

// One forward step of occupancy mass. Failed states spread their recorded
// actions uniformly, matching the sampler.
void push_occupancy(const Enumeration& e, const PolicyFamily& family,
                    const PolicyParams& slot, int level,
                    const std::vector<double>& occ, std::vector<double>& out) {
  const int actions = e.action_count;
  std::vector<double> probs(static_cast<std::size_t>(actions));
  for (int id : e.level_ids[static_cast<std::size_t>(level)]) {
    const double mass = occ[static_cast<std::size_t>(id)];
    if (mass <= 0.0) continue;
    const State& s = e.state(id);
    if (s.kind == StateKind::kAbsorbed) {
      std::fill(probs.begin(), probs.end(), 1.0 / actions);
    } else {
      family.action_probs(slot, s, probs);
    }
    for (int a = 0; a < actions; ++a) {
      const double w = mass * probs[static_cast<std::size_t>(a)];
      if (w <= 0.0) continue;
      for (const TransitionEntry& tr : e.successors(id, a))
        out[static_cast<std::size_t>(tr.next_id)] += w * tr.prob;
    }
  }
}

}  // namespace

std::vector<double> occupancy_at(const LeveledMdp& mdp, const PolicyFamily& family,
                                 const PolicyVector& thetas, int level) {
  const Enumeration& e = require_enumeration(mdp);
  if (level < 0 || level >= e.horizon)
    throw ConfigError("occupancy_at: level out of range");
  if (thetas.horizon() != e.horizon)
    throw ConfigError("occupancy_at: policy vector has wrong horizon");
  std::vector<double> occ(e.states.size(), 0.0);
  occ[static_cast<std::size_t>(e.initial_id)] = 1.0;
  for (int h = 0; h < level; ++h) {
    std::vector<double> next(e.states.size(), 0.0);
    push_occupancy(e, family, thetas.slots[static_cast<std::size_t>(h)], h, occ, next);
    occ = std::move(next);
  }
  return occ;
}

double policy_value(const LeveledMdp& mdp, const PolicyFamily& family,
                    const PolicyVector& thetas) {
  const Enumeration& e = require_enumeration(mdp);
  const std::vector<double> occ = occupancy_at(mdp, family, thetas, e.horizon - 1);
  double value = 0.0;
  for (int id : e.level_ids[static_cast<std::size_t>(e.horizon - 1)])
    if (e.state(id).kind == StateKind::kOrdinary)
      value += occ[static_cast<std::size_t>(id)];
  return value;
}

double safe_occupancy(const LeveledMdp& mdp, const PolicyFamily& family,
                      const PolicyVector& thetas, int t) {
  const Enumeration& e = require_enumeration(mdp);
  const SafeSetTable table = max_safe_set(mdp);
  const std::vector<double> occ = occupancy_at(mdp, family, thetas, t);
  double mass = 0.0;
  for (int id : e.level_ids[static_cast<std::size_t>(t)])
    if (table.is_safe(id)) mass += occ[static_cast<std::size_t>(id)];
  return mass;
}

double population_loss(const LeveledMdp& mdp, const PolicyFamily& family,
                       const PolicyVector& behavior, const PolicyParams& theta,
                       int t, int window) {
  const Enumeration& e = require_enumeration(mdp);
  if (t < 0 || t > e.horizon - 2)
    throw ConfigError("population_loss: t must lie in [0, H-2]");
  if (window < 0 || window > e.horizon - 1)
    throw ConfigError("population_loss: window must lie in [0, H-1]");
  const int idx = std::min(t + window + 1, e.horizon - 1);
  const int actions = e.action_count;
  const std::vector<double> marginal = occupancy_at(mdp, family, behavior, t);

  auto probs_for = [&](const PolicyParams& params, const State& s,
                       std::vector<double>& buf) {
    if (s.kind == StateKind::kAbsorbed) {
      std::fill(buf.begin(), buf.end(), 1.0 / actions);
    } else {
      family.action_probs(params, s, buf);
    }
  };

  // Route (i): E[indicator * prod pi_theta] under the behavior measure,
  // scaled by |A|^(window+1). g[j][s] accumulates the windowed factor
  // expectation conditional on s_j = s.
  std::vector<double> g(e.states.size(), 0.0);
  for (int id : e.level_ids[static_cast<std::size_t>(idx)])
    g[static_cast<std::size_t>(id)] = failed(e.state(id)) ? 1.0 : 0.0;
  std::vector<double> beh(static_cast<std::size_t>(actions));
  std::vector<double> cand(static_cast<std::size_t>(actions));
  for (int j = idx - 1; j >= t; --j) {
    std::vector<double> gj(e.states.size(), 0.0);
    for (int id : e.level_ids[static_cast<std::size_t>(j)]) {
      const State& s = e.state(id);
      probs_for(behavior.slots[static_cast<std::size_t>(j)], s, beh);
      probs_for(theta, s, cand);
      double acc = 0.0;
      for (int a = 0; a < actions; ++a) {
        double succ = 0.0;
        for (const TransitionEntry& tr : e.successors(id, a))
          succ += tr.prob * g[static_cast<std::size_t>(tr.next_id)];
        acc += beh[static_cast<std::size_t>(a)] * cand[static_cast<std::size_t>(a)] * succ;
      }
      gj[static_cast<std::size_t>(id)] = acc;
    }
    g = std::move(gj);
  }
  double form_i = 0.0;
  for (int id : e.level_ids[static_cast<std::size_t>(t)])
    form_i += marginal[static_cast<std::size_t>(id)] * g[static_cast<std::size_t>(id)];
  form_i *= std::pow(static_cast<double>(actions), window + 1);

  // Route (ii): E over the s_t marginal of P_theta(s_idx failed | s_t).
  std::vector<double> f(e.states.size(), 0.0);
  for (int id : e.level_ids[static_cast<std::size_t>(idx)])
    f[static_cast<std::size_t>(id)] = failed(e.state(id)) ? 1.0 : 0.0;
  for (int j = idx - 1; j >= t; --j) {
    std::vector<double> fj(e.states.size(), 0.0);
    for (int id : e.level_ids[static_cast<std::size_t>(j)]) {
      const State& s = e.state(id);
      probs_for(theta, s, cand);
      double acc = 0.0;
      for (int a = 0; a < actions; ++a) {
        double succ = 0.0;
        for (const TransitionEntry& tr : e.successors(id, a))
          succ += tr.prob * f[static_cast<std::size_t>(tr.next_id)];
        acc += cand[static_cast<std::size_t>(a)] * succ;
      }
      fj[static_cast<std::size_t>(id)] = acc;
    }
    f = std::move(fj);
  }
  double form_ii = 0.0;
  for (int id : e.level_ids[static_cast<std::size_t>(t)])
    form_ii += marginal[static_cast<std::size_t>(id)] * f[static_cast<std::size_t>(id)];

  if (std::abs(form_i - form_ii) > 1e-9)
    throw ConsistencyError(
        "population loss dual forms disagree: " + std::to_string(form_i) +
        " vs " + std::to_string(form_ii) +
        " (is the behavior uniform from level t on?)");
  return form_i;
}

}  // namespace epw
