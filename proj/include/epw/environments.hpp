#pragma once

#include <cstdint>
#include <utility>

#include "epw/mdp.hpp"

namespace epw {

// Synthetic rally game: the agent's paddle chases a ball column that is
// fixed during a rally and respawns uniformly after each hit. Features are
// (paddle, ball, distance, level).
struct PaddleConfig {
  int width = 3;           // board columns, >= 1
  int spawn_distance = 2;  // ball steps from the boundary at rally start
  int horizon = 6;
  std::uint64_t seed = 0;  // picks the initial ball column
};

// Synthetic slalom: a gate is checked every gate_period levels; the next
// gate spawns uniformly within gate_period - 1 columns of the current one,
// which keeps every spawn reachable in time. Features are
// (skier, gate, steps_to_gate, level).
struct GatesConfig {
  int width = 5;
  int gate_period = 3;  // >= 2
  int horizon = 12;
  std::uint64_t seed = 0;  // picks the initial gate column
};

// Binary tree over levels 0..H-2 with a single rewarding leaf at level
// H-1. Every penultimate state off the rewarding path is a failure state;
// the wrong branch at the last fork dead-ends in the absorbed sink.
struct TreeHardConfig {
  int depth = 4;  // H >= 2
  std::uint64_t seed = 0;  // selects the rewarding root-to-leaf path
};

// Planted-structure instance for auditing the EPW verifier: a doomed chain
// of exactly planted_c ordinary states (every continuation hits the failure
// set within planted_c steps) next to an always-safe backbone.
struct RandomEpwConfig {
  int planted_c = 2;
  int states_per_level = 6;  // K >= planted_c + 2
  int horizon = 10;
  int action_count = 3;
  std::uint64_t seed = 0;
};

TabularMdp make_paddle(const PaddleConfig& cfg);
TabularMdp make_gates(const GatesConfig& cfg);
TabularMdp make_tree_hard(const TreeHardConfig& cfg);

// Returns the instance together with the planted constant (echoed from the
// config after feasibility checks).
std::pair<TabularMdp, int> generate_random_epw(const RandomEpwConfig& cfg);

}  // namespace epw
