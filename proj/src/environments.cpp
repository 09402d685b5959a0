#include "epw/environments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "epw/errors.hpp"

namespace epw {

namespace {

int clamp_col(int c, int width) { return std::clamp(c, 0, width - 1); }

// Level-by-level builder that only materializes reachable states.
class EnumBuilder {
 public:
  EnumBuilder(int horizon, int actions, int fdim) {
    e_.horizon = horizon;
    e_.action_count = actions;
    e_.feature_dim = fdim;
    e_.level_ids.resize(static_cast<std::size_t>(horizon));
  }

  int add_state(int level, std::vector<double> features, StateKind kind) {
    const int id = static_cast<int>(e_.states.size());
    State s;
    s.features = std::move(features);
    s.level = level;
    s.kind = kind;
    s.id = id;
    e_.states.push_back(std::move(s));
    e_.level_ids[static_cast<std::size_t>(level)].push_back(id);
    e_.transitions.emplace_back();
    return id;
  }

  void set_transitions(int id, std::vector<std::vector<TransitionEntry>> rows) {
    e_.transitions[static_cast<std::size_t>(id)] = std::move(rows);
  }

  void set_initial(int id) { e_.initial_id = id; }

  int absorbed_at(int level, int fdim) {
    auto it = absorbed_.find(level);
    if (it != absorbed_.end()) return it->second;
    std::vector<double> f(static_cast<std::size_t>(fdim), -1.0);
    f.back() = static_cast<double>(level);
    const int id = add_state(level, std::move(f), StateKind::kAbsorbed);
    absorbed_[level] = id;
    return id;
  }

  // Wires the absorbed chain: every failed state at levels < H-1 moves to
  // the next level's absorbed state under every action.
  void close_absorption() {
    for (int pass = 0; pass < e_.horizon; ++pass) {
      bool changed = false;
      for (int id = 0; id < static_cast<int>(e_.states.size()); ++id) {
        const State& s = e_.states[static_cast<std::size_t>(id)];
        if (!failed(s) || s.level >= e_.horizon - 1) continue;
        if (!e_.transitions[static_cast<std::size_t>(id)].empty()) continue;
        const int next = absorbed_at(s.level + 1, e_.feature_dim);
        std::vector<std::vector<TransitionEntry>> rows(
            static_cast<std::size_t>(e_.action_count),
            {TransitionEntry{next, 1.0}});
        set_transitions(id, std::move(rows));
        changed = true;
      }
      if (!changed) break;
    }
  }

  Enumeration take() { return std::move(e_); }

 private:
  Enumeration e_;
  std::map<int, int> absorbed_;
};

}  // namespace

TabularMdp make_paddle(const PaddleConfig& cfg) {
  const int W = cfg.width;
  const int D = cfg.spawn_distance;
  const int H = cfg.horizon;
  if (W < 1) throw ConfigError("paddle: width must be >= 1");
  if (D < 1) throw ConfigError("paddle: spawn distance must be >= 1");
  if (H < D + 1) throw ConfigError("paddle: horizon must be >= spawn_distance + 1");

  auto dist_at = [&](int level) { return D - (level % (D + 1)); };
  const int p0 = (W - 1) / 2;
  const int offset = static_cast<int>(mix64(cfg.seed + 1) %
                                      static_cast<std::uint64_t>(2 * D + 1)) - D;
  const int b0 = clamp_col(p0 + offset, W);

  EnumBuilder b(H, 3, 4);
  // key = p * W + ball
  std::map<int, int> cur;
  auto make_state = [&](int level, int p, int ball) {
    const int d = dist_at(level);
    const StateKind kind = (d == 0 && p != ball) ? StateKind::kFailure
                                                 : StateKind::kOrdinary;
    return b.add_state(level,
                       {static_cast<double>(p), static_cast<double>(ball),
                        static_cast<double>(d), static_cast<double>(level)},
                       kind);
  };

  cur[p0 * W + b0] = make_state(0, p0, b0);
  b.set_initial(cur.begin()->second);

  for (int level = 0; level + 1 < H; ++level) {
    std::map<int, int> next;
    auto next_id = [&](int p, int ball) {
      const int key = p * W + ball;
      auto it = next.find(key);
      if (it != next.end()) return it->second;
      const int id = make_state(level + 1, p, ball);
      next[key] = id;
      return id;
    };
    const int d = dist_at(level);
    for (const auto& [key, id] : cur) {
      const int p = key / W;
      const int ball = key % W;
      if (d == 0 && p != ball) continue;  // failure row wired by close_absorption
      std::vector<std::vector<TransitionEntry>> rows(3);
      for (int m = 0; m < 3; ++m) {
        const int pn = clamp_col(p + m - 1, W);
        if (d > 0) {
          rows[static_cast<std::size_t>(m)] = {TransitionEntry{next_id(pn, ball), 1.0}};
        } else {
          for (int spawn = 0; spawn < W; ++spawn)
            rows[static_cast<std::size_t>(m)].push_back(
                TransitionEntry{next_id(pn, spawn), 1.0 / W});
        }
      }
      b.set_transitions(id, std::move(rows));
    }
    cur = std::move(next);
  }
  b.close_absorption();
  return TabularMdp("paddle(W=" + std::to_string(W) + ",D=" + std::to_string(D) +
                        ",H=" + std::to_string(H) + ")",
                    b.take());
}

TabularMdp make_gates(const GatesConfig& cfg) {
  const int W = cfg.width;
  const int G = cfg.gate_period;
  const int H = cfg.horizon;
  if (W < 1) throw ConfigError("gates: width must be >= 1");
  if (G < 2) throw ConfigError("gates: gate period must be >= 2");
  if (H < 1) throw ConfigError("gates: horizon must be >= 1");

  auto steps_to_gate = [&](int level) {
    if (level == 0) return G;
    const int r = level % G;
    return r == 0 ? 0 : G - r;
  };
  auto spawn_window = [&](int c) {
    std::vector<int> cols;
    for (int x = std::max(0, c - (G - 1)); x <= std::min(W - 1, c + (G - 1)); ++x)
      cols.push_back(x);
    return cols;
  };

  const int center = (W - 1) / 2;
  const int offset = static_cast<int>(mix64(cfg.seed + 1) %
                                      static_cast<std::uint64_t>(2 * G - 1)) -
                     (G - 1);
  const int c0 = clamp_col(center + offset, W);

  EnumBuilder b(H, 3, 4);
  std::map<int, int> cur;
  auto make_state = [&](int level, int skier, int gate) {
    const int k = steps_to_gate(level);
    const StateKind kind = (k == 0 && skier != gate) ? StateKind::kFailure
                                                     : StateKind::kOrdinary;
    return b.add_state(level,
                       {static_cast<double>(skier), static_cast<double>(gate),
                        static_cast<double>(k), static_cast<double>(level)},
                       kind);
  };

  cur[center * W + c0] = make_state(0, center, c0);
  b.set_initial(cur.begin()->second);

  for (int level = 0; level + 1 < H; ++level) {
    std::map<int, int> next;
    auto next_id = [&](int skier, int gate) {
      const int key = skier * W + gate;
      auto it = next.find(key);
      if (it != next.end()) return it->second;
      const int id = make_state(level + 1, skier, gate);
      next[key] = id;
      return id;
    };
    const int k = steps_to_gate(level);
    for (const auto& [key, id] : cur) {
      const int skier = key / W;
      const int gate = key % W;
      if (k == 0 && skier != gate) continue;
      std::vector<std::vector<TransitionEntry>> rows(3);
      for (int m = 0; m < 3; ++m) {
        const int sn = clamp_col(skier + m - 1, W);
        if (k > 0) {
          rows[static_cast<std::size_t>(m)] = {TransitionEntry{next_id(sn, gate), 1.0}};
        } else {
          const std::vector<int> cols = spawn_window(gate);
          for (int c : cols)
            rows[static_cast<std::size_t>(m)].push_back(
                TransitionEntry{next_id(sn, c), 1.0 / static_cast<double>(cols.size())});
        }
      }
      b.set_transitions(id, std::move(rows));
    }
    cur = std::move(next);
  }
  b.close_absorption();
  return TabularMdp("gates(W=" + std::to_string(W) + ",G=" + std::to_string(G) +
                        ",H=" + std::to_string(H) + ")",
                    b.take());
}

TabularMdp make_tree_hard(const TreeHardConfig& cfg) {
  const int H = cfg.depth;
  if (H < 2) throw ConfigError("tree-hard: depth must be >= 2");
  if (H > 26) throw ConfigError("tree-hard: depth above 26 is intractable");

  const std::uint64_t bits = mix64(cfg.seed ^ 0x74726565ULL);  // path choices
  std::vector<int> path(static_cast<std::size_t>(H - 1), 0);
  std::vector<int> choice(static_cast<std::size_t>(H - 1), 0);
  for (int h = 0; h + 1 < H; ++h) {
    choice[static_cast<std::size_t>(h)] = static_cast<int>((bits >> h) & 1ULL);
    if (h + 1 < H - 1)
      path[static_cast<std::size_t>(h + 1)] =
          2 * path[static_cast<std::size_t>(h)] + choice[static_cast<std::size_t>(h)];
  }

  EnumBuilder b(H, 2, 2);
  // Full binary tree on levels 0..H-2.
  std::vector<std::vector<int>> ids(static_cast<std::size_t>(H - 1));
  for (int h = 0; h <= H - 2; ++h) {
    const std::int64_t count = 1LL << h;
    ids[static_cast<std::size_t>(h)].resize(static_cast<std::size_t>(count));
    for (std::int64_t n = 0; n < count; ++n) {
      const bool penult_off_path =
          (h == H - 2) && (n != path[static_cast<std::size_t>(h)]);
      ids[static_cast<std::size_t>(h)][static_cast<std::size_t>(n)] = b.add_state(
          h, {static_cast<double>(n), static_cast<double>(h)},
          penult_off_path ? StateKind::kFailure : StateKind::kOrdinary);
    }
  }
  const std::int64_t leaf_index =
      2LL * path[static_cast<std::size_t>(H - 2)] + choice[static_cast<std::size_t>(H - 2)];
  const int leaf = b.add_state(
      H - 1, {static_cast<double>(leaf_index), static_cast<double>(H - 1)},
      StateKind::kOrdinary);
  const int sink = b.absorbed_at(H - 1, 2);

  // Interior nodes descend to their children; the last fork sends the wrong
  // action into the sink so exactly one action sequence wins.
  for (int h = 0; h <= H - 2; ++h) {
    for (std::int64_t n = 0; n < (1LL << h); ++n) {
      const int id = ids[static_cast<std::size_t>(h)][static_cast<std::size_t>(n)];
      if (h == H - 2) {
        if (n != path[static_cast<std::size_t>(h)]) continue;  // failure: absorption
        std::vector<std::vector<TransitionEntry>> rows(2);
        for (int a = 0; a < 2; ++a)
          rows[static_cast<std::size_t>(a)] = {TransitionEntry{
              a == choice[static_cast<std::size_t>(h)] ? leaf : sink, 1.0}};
        b.set_transitions(id, std::move(rows));
      } else {
        std::vector<std::vector<TransitionEntry>> rows(2);
        for (int a = 0; a < 2; ++a)
          rows[static_cast<std::size_t>(a)] = {TransitionEntry{
              ids[static_cast<std::size_t>(h + 1)][static_cast<std::size_t>(2 * n + a)],
              1.0}};
        b.set_transitions(id, std::move(rows));
      }
    }
  }
  b.set_initial(ids[0][0]);
  b.close_absorption();
  return TabularMdp("tree-hard(H=" + std::to_string(H) + ")", b.take());
}

std::pair<TabularMdp, int> generate_random_epw(const RandomEpwConfig& cfg) {
  const int C = cfg.planted_c;
  const int K = cfg.states_per_level;
  const int H = cfg.horizon;
  const int A = cfg.action_count;
  if (C < 1)
    throw ConfigError("random-epw: planted constant must be >= 1 "
                      "(a doomed chain of length 0 would be a failure state)");
  if (K < C + 2) throw ConfigError("random-epw: need states_per_level >= planted_c + 2");
  if (H < C + 2) throw ConfigError("random-epw: need horizon >= planted_c + 2");
  if (A < 2) throw ConfigError("random-epw: need at least 2 actions");

  RngStream rng(cfg.seed, 0x72657077ULL);  // "repw"
  const int chain_start = 1 + rng.next_index(H - 1 - C);  // chain levels [start, start+C)
  const int chain_exit = chain_start + C;                 // failure level

  // Slot roles per level >= 1: 0 backbone, 1 failure-or-filler,
  // 2 chain-or-filler, 3.. fillers.
  std::vector<char> has_failure(static_cast<std::size_t>(H), 0);
  has_failure[static_cast<std::size_t>(chain_exit)] = 1;
  for (int level = 2; level < H; ++level)
    if (level != chain_exit && rng.next_index(3) == 0)
      has_failure[static_cast<std::size_t>(level)] = 1;

  EnumBuilder b(H, A, 2);
  std::vector<std::vector<int>> ids(static_cast<std::size_t>(H));
  auto is_chain_slot = [&](int level, int slot) {
    return slot == 2 && level >= chain_start && level < chain_exit;
  };
  const int s0 = b.add_state(0, {0.0, 0.0}, StateKind::kOrdinary);
  ids[0] = {s0};
  b.set_initial(s0);
  for (int level = 1; level < H; ++level) {
    for (int slot = 0; slot < K; ++slot) {
      StateKind kind = StateKind::kOrdinary;
      if (slot == 1 && has_failure[static_cast<std::size_t>(level)])
        kind = StateKind::kFailure;
      ids[static_cast<std::size_t>(level)].push_back(b.add_state(
          level, {static_cast<double>(slot), static_cast<double>(level)}, kind));
    }
  }

  for (int level = 0; level + 1 < H; ++level) {
    const auto& here = ids[static_cast<std::size_t>(level)];
    const auto& below = ids[static_cast<std::size_t>(level + 1)];
    const int n_below = static_cast<int>(below.size());
    for (int slot = 0; slot < static_cast<int>(here.size()); ++slot) {
      const int id = here[static_cast<std::size_t>(slot)];
      if (slot == 1 && has_failure[static_cast<std::size_t>(level)]) continue;
      std::vector<std::vector<TransitionEntry>> rows(static_cast<std::size_t>(A));
      if (is_chain_slot(level, slot)) {
        // forced march into the next chain state, then into the failure set
        const int target = (level + 1 < chain_exit)
                               ? below[2]
                               : below[1];
        for (int a = 0; a < A; ++a)
          rows[static_cast<std::size_t>(a)] = {TransitionEntry{target, 1.0}};
      } else {
        rows[0] = {TransitionEntry{below[0], 1.0}};  // safe backbone action
        for (int i = 0; i < n_below; ++i)
          rows[1].push_back(TransitionEntry{below[static_cast<std::size_t>(i)],
                                            1.0 / static_cast<double>(n_below)});
        for (int a = 2; a < A; ++a) {
          const int u = rng.next_index(n_below);
          int v = rng.next_index(n_below);
          if (v == u) v = (v + 1) % n_below;
          const double w = 0.25 + 0.5 * rng.next_double();
          rows[static_cast<std::size_t>(a)] = {
              TransitionEntry{below[static_cast<std::size_t>(u)], w},
              TransitionEntry{below[static_cast<std::size_t>(v)], 1.0 - w}};
        }
      }
      b.set_transitions(id, std::move(rows));
    }
  }
  b.close_absorption();
  return {TabularMdp("random-epw(C=" + std::to_string(C) + ",K=" + std::to_string(K) +
                         ",H=" + std::to_string(H) + ")",
                     b.take()),
          C};
}

}  // namespace epw
