#include "epw/sampling.hpp"

#include <cmath>
#include <future>
#include <thread>

#include "epw/errors.hpp"

namespace epw {

namespace {

constexpr std::uint64_t kTrajTag = 0x74726a00ULL;  // "trj"

int sample_from_probs(std::span<const double> probs, double u) {
  double acc = 0.0;
  int chosen = static_cast<int>(probs.size()) - 1;
  for (int a = 0; a < static_cast<int>(probs.size()); ++a) {
    acc += probs[static_cast<std::size_t>(a)];
    if (u < acc) {
      chosen = a;
      break;
    }
  }
  return chosen;
}

}  // namespace

Trajectory sample_trajectory(const LeveledMdp& mdp, const PolicyFamily& family,
                             const PolicyVector& thetas, RngStream& rng) {
  const int horizon = mdp.horizon();
  if (thetas.horizon() != horizon)
    throw ConfigError("policy vector must have one slot per level");
  const int actions = mdp.action_count();

  Trajectory traj;
  traj.steps.reserve(static_cast<std::size_t>(horizon));
  std::vector<double> probs(static_cast<std::size_t>(actions));

  State s = mdp.initial_state();
  for (int h = 0; h < horizon; ++h) {
    int a;
    if (s.kind == StateKind::kAbsorbed) {
      a = rng.next_index(actions);
    } else {
      family.action_probs(thetas.slots[static_cast<std::size_t>(h)], s, probs);
      a = sample_from_probs(probs, rng.next_double());
    }
    if (failed(s) && traj.first_failure_level < 0) traj.first_failure_level = h;
    traj.steps.push_back(TrajStep{s, a});
    if (h + 1 < horizon) s = mdp.sample_transition(traj.steps.back().state, a, rng);
  }
  return traj;
}

RngStream trajectory_stream(std::uint64_t batch_seed, int index) {
  return RngStream(batch_seed, kTrajTag, static_cast<std::uint64_t>(index));
}

Batch sample_batch(const LeveledMdp& mdp, const PolicyFamily& family,
                   const PolicyVector& thetas, int n, std::uint64_t seed,
                   int jobs) {
  if (n < 1) throw ConfigError("sample_batch: n must be >= 1");
  Batch batch;
  batch.seed = seed;
  batch.trajectories.resize(static_cast<std::size_t>(n));

  auto worker = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      RngStream rng = trajectory_stream(seed, i);
      batch.trajectories[static_cast<std::size_t>(i)] =
          sample_trajectory(mdp, family, thetas, rng);
    }
  };

  if (jobs == 0) {
    jobs = n >= 256 ? static_cast<int>(std::thread::hardware_concurrency()) : 1;
    if (jobs < 1) jobs = 1;
  }
  jobs = std::min(jobs, n);
  if (jobs <= 1) {
    worker(0, n);
  } else {
    std::vector<std::future<void>> futs;
    futs.reserve(static_cast<std::size_t>(jobs));
    const int chunk = (n + jobs - 1) / jobs;
    for (int j = 0; j < jobs; ++j) {
      const int begin = j * chunk;
      const int end = std::min(n, begin + chunk);
      if (begin >= end) break;
      futs.push_back(std::async(std::launch::async, worker, begin, end));
    }
    for (auto& f : futs) f.get();
  }
  return batch;
}

int trajectory_return(const Trajectory& traj) { return traj.won() ? 1 : 0; }

ValueEstimate monte_carlo_value(const LeveledMdp& mdp, const PolicyFamily& family,
                                const PolicyVector& thetas, int n,
                                std::uint64_t seed) {
  const Batch batch = sample_batch(mdp, family, thetas, n, seed);
  double wins = 0.0;
  for (const Trajectory& t : batch.trajectories) wins += trajectory_return(t);
  ValueEstimate est;
  est.samples = n;
  est.mean = wins / n;
  est.std_error = std::sqrt(est.mean * (1.0 - est.mean) / n);
  return est;
}

}  // namespace epw
