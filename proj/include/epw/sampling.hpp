#pragma once

#include <cstdint>
#include <vector>

#include "epw/mdp.hpp"
#include "epw/policy.hpp"

namespace epw {

struct TrajStep {
  State state;
  int action = 0;
};

// Exactly H steps. After the first failed state the remaining levels hold
// absorbed padding with uniformly drawn recorded actions.
struct Trajectory {
  std::vector<TrajStep> steps;
  int first_failure_level = -1;  // -1 means Won

  bool won() const { return first_failure_level < 0; }
};

struct Batch {
  std::vector<Trajectory> trajectories;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(trajectories.size()); }
};

// One rollout under the level-indexed policy. Total for valid inputs.
Trajectory sample_trajectory(const LeveledMdp& mdp, const PolicyFamily& family,
                             const PolicyVector& thetas, RngStream& rng);

// The stream sample_batch hands to trajectory `index`.
RngStream trajectory_stream(std::uint64_t batch_seed, int index);

// n rollouts; trajectory i uses the stream derived from (seed, i), so the
// result is bit-identical under any degree of parallelism.
Batch sample_batch(const LeveledMdp& mdp, const PolicyFamily& family,
                   const PolicyVector& thetas, int n, std::uint64_t seed,
                   int jobs = 0);  // jobs 0: pick automatically

// 1 iff the trajectory ended at an ordinary last-level state.
int trajectory_return(const Trajectory& traj);

struct ValueEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

// Monte-Carlo value estimate for MDPs without an enumeration.
ValueEstimate monte_carlo_value(const LeveledMdp& mdp, const PolicyFamily& family,
                                const PolicyVector& thetas, int n,
                                std::uint64_t seed);

}  // namespace epw
