#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "epw/rng.hpp"

namespace epw {

// Once a trajectory enters the failure set it is padded with absorbed
// states through the last level; both kinds count as "the game is lost".
enum class StateKind : std::uint8_t { kOrdinary = 0, kFailure = 1, kAbsorbed = 2 };

struct State {
  std::vector<double> features;
  int level = 0;
  StateKind kind = StateKind::kOrdinary;
  int id = -1;  // global id within the owning enumeration; -1 if none

  double norm() const;
};

inline bool failed(StateKind k) { return k != StateKind::kOrdinary; }
inline bool failed(const State& s) { return failed(s.kind); }

struct TransitionEntry {
  int next_id = -1;
  double prob = 0.0;
};

// Exact tables for an enumerable MDP. States carry global ids assigned
// level-major; transitions live on every state except those at the last
// level (episodes end there).
struct Enumeration {
  int horizon = 0;
  int action_count = 0;
  int feature_dim = 0;
  int initial_id = 0;
  std::vector<State> states;                // indexed by id
  std::vector<std::vector<int>> level_ids;  // level -> ids, ascending
  std::vector<std::vector<std::vector<TransitionEntry>>> transitions;

  const State& state(int id) const { return states[static_cast<std::size_t>(id)]; }
  std::span<const TransitionEntry> successors(int id, int action) const {
    return transitions[static_cast<std::size_t>(id)][static_cast<std::size_t>(action)];
  }
  int state_count() const { return static_cast<int>(states.size()); }
  int count_kind(StateKind k) const;
  int count_kind_at_level(int level, StateKind k) const;
  double max_state_norm() const;

  // Throws ConfigError on structural defects: per-(state, action)
  // probabilities must sum to 1 within 1e-12, successors must live one
  // level down, ids and levels must be consistent.
  void validate() const;
};

class LeveledMdp {
 public:
  virtual ~LeveledMdp() = default;

  virtual int horizon() const = 0;
  virtual int action_count() const = 0;
  virtual int feature_dim() const = 0;
  virtual const State& initial_state() const = 0;

  // Never called on last-level states.
  virtual State sample_transition(const State& s, int action, RngStream& rng) const = 0;

  // True at failure states and at absorbed padding after them.
  virtual bool failure_test(const State& s) const = 0;

  // Null for feature-only MDPs.
  virtual const Enumeration* enumeration() const { return nullptr; }

  // Finite bound on ||s||_2 over the state space, for Lipschitz certificates.
  virtual double state_norm_bound() const = 0;

  virtual std::string name() const = 0;
};

class TabularMdp final : public LeveledMdp {
 public:
  TabularMdp(std::string name, Enumeration data);

  int horizon() const override { return data_.horizon; }
  int action_count() const override { return data_.action_count; }
  int feature_dim() const override { return data_.feature_dim; }
  const State& initial_state() const override { return data_.state(data_.initial_id); }
  State sample_transition(const State& s, int action, RngStream& rng) const override;
  bool failure_test(const State& s) const override { return failed(s); }
  const Enumeration* enumeration() const override { return &data_; }
  double state_norm_bound() const override { return norm_bound_; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  Enumeration data_;
  double norm_bound_ = 0.0;
};

// Wrapper that hides the enumeration of an enumerable MDP; used to exercise
// the feature-only code paths (Monte-Carlo values, verifier refusal).
class OpaqueMdp final : public LeveledMdp {
 public:
  explicit OpaqueMdp(std::shared_ptr<const LeveledMdp> inner)
      : inner_(std::move(inner)) {}

  int horizon() const override { return inner_->horizon(); }
  int action_count() const override { return inner_->action_count(); }
  int feature_dim() const override { return inner_->feature_dim(); }
  const State& initial_state() const override { return inner_->initial_state(); }
  State sample_transition(const State& s, int action, RngStream& rng) const override {
    State next = inner_->sample_transition(s, action, rng);
    next.id = -1;
    return next;
  }
  bool failure_test(const State& s) const override { return inner_->failure_test(s); }
  double state_norm_bound() const override { return inner_->state_norm_bound(); }
  std::string name() const override { return inner_->name() + "/opaque"; }

 private:
  std::shared_ptr<const LeveledMdp> inner_;
};

}  // namespace epw
