#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "epw/mdp.hpp"
#include "epw/policy.hpp"
#include "epw/sampling.hpp"

namespace epw {

// Windowed loss at level t with working window C' (an upper bound on the
// true planning constant). The failure indicator is read at
// min(t + C' + 1, H - 1), counting absorbed padding as failed.
struct LossSpec {
  int level = 0;   // t in [0, H-2]
  int window = 0;  // C' >= 0
};

// |A|^(C'+1) * mean over the batch of
//   indicator(failed at idx) * prod_j prob(theta, s_{t+j})[a_{t+j}].
// Lies in [0, |A|^(C'+1)]. Throws on an empty batch.
double empirical_loss(const PolicyFamily& family, const PolicyParams& theta,
                      const Batch& batch, const LossSpec& spec);

// Exact gradient of empirical_loss via the product rule; trajectories with
// a zero indicator contribute nothing.
std::vector<double> empirical_loss_grad(const PolicyFamily& family,
                                        const PolicyParams& theta,
                                        const Batch& batch, const LossSpec& spec);

// Precompiled view of the loss over one (batch, spec) pair: keeps only the
// indicator-active windows so repeated ERM evaluations stay cheap.
class WindowedLoss {
 public:
  WindowedLoss(const PolicyFamily& family, const Batch& batch, const LossSpec& spec);

  double value(const PolicyParams& theta) const;
  // Returns the loss; adds the gradient into `grad` (which is zeroed here).
  double value_and_grad(const PolicyParams& theta, std::vector<double>& grad) const;

  int active_windows() const { return static_cast<int>(actions_.size()) / factors_; }
  double prefactor() const { return prefactor_; }

 private:
  const PolicyFamily& family_;
  int factors_;     // C' + 1
  int batch_size_;
  double prefactor_;  // |A|^(C'+1)
  std::vector<State> states_;  // active windows, flattened
  std::vector<int> actions_;
};

struct ErmConfig {
  int restarts = 8;
  int steps = 300;
  double step_size = 1.0;
  double bound = 16.0;  // projection radius B
  std::uint64_t seed = 0;
};

struct ErmResult {
  PolicyParams theta;
  double loss = 0.0;
  int restart = 0;
  int iterate = 0;
};

// Multi-restart projected gradient descent. Restart 0 starts at theta_rand,
// so the returned loss never exceeds the loss of the uniform policy; the
// best iterate wins, ties broken by lowest restart then earliest iterate.
ErmResult minimize_loss(const PolicyFamily& family, const Batch& batch,
                        const LossSpec& spec, const ErmConfig& erm,
                        int jobs = 0);

struct LevelRecord {
  int level = 0;
  double loss_before = 0.0;  // empirical loss at theta_rand
  double loss_after = 0.0;
  int restart_chosen = 0;
  // P(s_{t+1} in S*) under the spliced vector; -1 when no oracle.
  double safe_occupancy = -1.0;
  double wall_ms = 0.0;
};

struct RunRecord {
  std::string mdp_name;
  std::string family_tag;
  int horizon = 0;
  int action_count = 0;
  int n = 0;
  int window = 0;
  std::uint64_t seed = 0;
  ErmConfig erm;
  std::vector<LevelRecord> levels;
  PolicyVector final_thetas;
  bool oracle_exact = false;
  double final_value = 0.0;
  double final_value_se = 0.0;  // 0 when oracle_exact

  // FNV-1a digest over every deterministic field (wall times excluded).
  std::uint64_t core_digest() const;
};

using LevelCallback = std::function<void(const LevelRecord&)>;

// Algorithm: H-1 rounds of sample / fit / splice starting from the uniform
// vector. Batches at round t are sampled under the current vector with a
// stream derived from (seed, t). Safe-occupancy diagnostics are filled when
// the MDP is enumerable; the final value is left to the caller.
std::pair<PolicyVector, RunRecord> run_algorithm1(
    const LeveledMdp& mdp, const PolicyFamily& family, int n, int window,
    std::uint64_t seed, const ErmConfig& erm,
    const LevelCallback* on_level = nullptr);

}  // namespace epw
