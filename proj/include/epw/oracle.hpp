#pragma once

#include <vector>

#include "epw/mdp.hpp"
#include "epw/policy.hpp"

namespace epw {

// Throws RefusalError when the MDP carries no enumeration.
const Enumeration& require_enumeration(const LeveledMdp& mdp);

// Maximal safe set: a state is safe iff it is ordinary and either sits on
// the last level or some action keeps every positive-probability successor
// safe (deterministic failure avoidance through level H-1).
struct SafeSetTable {
  std::vector<char> safe;  // by global id
  std::vector<int> safe_count_by_level;

  bool is_safe(int id) const { return safe[static_cast<std::size_t>(id)] != 0; }
};

SafeSetTable max_safe_set(const LeveledMdp& mdp);

// All states at level max{0, level(target) - x} that reach `target` with
// positive probability (reachability on the raw transition graph).
std::vector<int> ancestors(const LeveledMdp& mdp, int target_id, int x);

struct EpwWitness {
  int x = 0;
  int state_id = -1;     // the non-failure state s'
  int ancestor_id = -1;  // its unsafe x-ancestor
};

// min_c is the smallest window for which every x-ancestor of every
// eligible state is safe; eligible means kind != failure, where absorbed
// sink states only count when they are reachable through ordinary states
// (those stand in for real lost-terminal states of the underlying game,
// not for post-failure padding).
struct EpwCertificate {
  int min_c = 0;
  std::vector<EpwWitness> witnesses;  // one per x < min_c
};

EpwCertificate min_epw_constant(const LeveledMdp& mdp);

// Re-checks a witness through the standalone ancestors() operation and the
// safe-set table; used to validate certificates independently.
bool validate_witness(const LeveledMdp& mdp, const SafeSetTable& table,
                      const EpwWitness& w);

struct GenericGameReport {
  bool failure_set_nonempty = false;
  bool trivial_game = false;  // empty failure set: pass with a warning
  bool binary_rewards_ok = false;
  double min_deterministic_failure_prob = 0.0;
  double completeness_threshold = 0.0;  // 2^-H
  bool completeness_ok = false;

  bool pass() const {
    return binary_rewards_ok && (trivial_game || completeness_ok);
  }
};

GenericGameReport check_generic_game(const LeveledMdp& mdp);

// Occupancy over states of the given level under the level-indexed policy,
// as a dense by-id vector. Failed states recorded along the way hold their
// mass in the absorbed chain.
std::vector<double> occupancy_at(const LeveledMdp& mdp, const PolicyFamily& family,
                                 const PolicyVector& thetas, int level);

// P(s_{H-1} is an ordinary last-level state) = V(s0) under binary rewards.
double policy_value(const LeveledMdp& mdp, const PolicyFamily& family,
                    const PolicyVector& thetas);

// P(s_t lies in the maximal safe set) under the policy vector.
double safe_occupancy(const LeveledMdp& mdp, const PolicyFamily& family,
                      const PolicyVector& thetas, int t);

// Population windowed loss L_t(theta), computed two ways and cross-checked
// within 1e-9: (i) the defining expectation of the importance-weighted
// window product under the behavior policy, and (ii) the expected
// conditional failure probability at level min(t+window+1, H-1) under
// theta, averaged over the behavior marginal of s_t. Throws
// ConsistencyError on disagreement. The identity requires the behavior
// vector to act uniformly from level t on, as Algorithm 1's iterates do.
double population_loss(const LeveledMdp& mdp, const PolicyFamily& family,
                       const PolicyVector& behavior, const PolicyParams& theta,
                       int t, int window);

}  // namespace epw
