#include <doctest.h>

#include <map>
#include <set>

#include "epw/environments.hpp"
#include "epw/errors.hpp"
#include "epw/oracle.hpp"
#include "epw/rng.hpp"
#include "epw/sampling.hpp"
#include "test_util.hpp"

using namespace epw;

namespace {

bool same_traj(const Trajectory& a, const Trajectory& b) {
  if (a.first_failure_level != b.first_failure_level) return false;
  if (a.steps.size() != b.steps.size()) return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    if (a.steps[i].action != b.steps[i].action) return false;
    if (a.steps[i].state.id != b.steps[i].state.id) return false;
    if (a.steps[i].state.kind != b.steps[i].state.kind) return false;
  }
  return true;
}

void check_invariants(const LeveledMdp& mdp, const Trajectory& t) {
  const int horizon = mdp.horizon();
  REQUIRE(static_cast<int>(t.steps.size()) == horizon);
  for (int h = 0; h < horizon; ++h) CHECK(t.steps[(std::size_t)h].state.level == h);
  if (t.won()) {
    for (const TrajStep& s : t.steps) CHECK(!failed(s.state));
    CHECK(t.steps.back().state.kind == StateKind::kOrdinary);
  } else {
    const int k = t.first_failure_level;
    REQUIRE(k >= 0);
    REQUIRE(k < horizon);
    for (int h = 0; h < k; ++h) CHECK(!failed(t.steps[(std::size_t)h].state));
    CHECK(mdp.failure_test(t.steps[(std::size_t)k].state));
    for (int h = k + 1; h < horizon; ++h)
      CHECK(t.steps[(std::size_t)h].state.kind == StateKind::kAbsorbed);
  }
}

}  // namespace

TEST_CASE("rng streams are deterministic and key-separated") {
  RngStream a(42, 7, 1);
  RngStream b(42, 7, 1);
  RngStream c(42, 7, 2);
  bool all_equal = true;
  bool any_equal_c = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    all_equal = all_equal && (x == b.next_u64());
    any_equal_c = any_equal_c || (x == c.next_u64());
  }
  CHECK(all_equal);
  CHECK(!any_equal_c);
}

TEST_CASE("rng uniforms look uniform") {
  RngStream rng(5);
  double mean = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) mean += rng.next_double();
  mean /= n;
  CHECK(std::abs(mean - 0.5) < 0.005);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[(std::size_t)rng.next_index(7)];
  double stat = 0.0;
  for (int c : counts) stat += (c - 10000.0) * (c - 10000.0) / 10000.0;
  CHECK(testutil::chi_square_pvalue(stat, 6) > 1e-3);
}

TEST_CASE("safe chain always wins, any policy") {
  const TabularMdp mdp("chain", testutil::safe_chain(5));
  const SoftmaxLinearFamily family(2, 2, 4.0);
  RngStream init(77);
  for (int trial = 0; trial < 20; ++trial) {
    PolicyVector v;
    for (int h = 0; h < 5; ++h)
      v.slots.push_back(random_in_ball(family.param_dim(), 4.0, init));
    RngStream rng(trial);
    const Trajectory t = sample_trajectory(mdp, family, v, rng);
    check_invariants(mdp, t);
    CHECK(t.won());
    CHECK(trajectory_return(t) == 1);
  }
}

TEST_CASE("wrong branch on the hard tree fails at the penultimate level") {
  const TabularMdp tree = make_tree_hard(TreeHardConfig{3, 9});
  // recover the rewarding first action, then force the other one
  const Enumeration& e = *tree.enumeration();
  int good = -1;
  for (const TransitionEntry& tr : e.successors(e.initial_id, 0))
    if (e.state(tr.next_id).kind == StateKind::kOrdinary) good = 0;
  if (good < 0) good = 1;
  const testutil::ForcedActionFamily wrong(2, 2, {1 - good});
  const PolicyVector v{std::vector<PolicyParams>(3, PolicyParams{{0.0}})};
  RngStream rng(1);
  const Trajectory t = sample_trajectory(tree, wrong, v, rng);
  check_invariants(tree, t);
  REQUIRE(!t.won());
  CHECK(t.first_failure_level == 1);
  CHECK(trajectory_return(t) == 0);
}

TEST_CASE("failed(0) returns 0") {
  Trajectory t;
  t.first_failure_level = 0;
  t.steps.resize(1);
  CHECK(trajectory_return(t) == 0);
}

TEST_CASE("batch determinism, base case and parallel equivalence") {
  const TabularMdp mdp = make_paddle(PaddleConfig{3, 2, 6, 4});
  const SoftmaxLinearFamily family(3, 4, 8.0);
  const PolicyVector uniform = uniform_policy_vector(family, 6);

  const Batch one = sample_batch(mdp, family, uniform, 1, 99);
  RngStream derived = trajectory_stream(99, 0);
  const Trajectory direct = sample_trajectory(mdp, family, uniform, derived);
  CHECK(same_traj(one.trajectories[0], direct));

  const Batch b1 = sample_batch(mdp, family, uniform, 500, 31, 1);
  const Batch b2 = sample_batch(mdp, family, uniform, 500, 31, 1);
  const Batch b4 = sample_batch(mdp, family, uniform, 500, 31, 4);
  REQUIRE(b1.size() == 500);
  for (int i = 0; i < 500; ++i) {
    CHECK(same_traj(b1.trajectories[(std::size_t)i], b2.trajectories[(std::size_t)i]));
    CHECK(same_traj(b1.trajectories[(std::size_t)i], b4.trajectories[(std::size_t)i]));
  }
  for (const Trajectory& t : b1.trajectories) check_invariants(mdp, t);
}

TEST_CASE("trajectories are distinct on a long stochastic game") {
  const TabularMdp mdp = make_gates(GatesConfig{5, 3, 12, 2});
  const SoftmaxLinearFamily family(3, 4, 8.0);
  const PolicyVector uniform = uniform_policy_vector(family, 12);
  const Batch batch = sample_batch(mdp, family, uniform, 64, 123);
  std::set<std::string> keys;
  for (const Trajectory& t : batch.trajectories) {
    std::string k;
    for (const TrajStep& s : t.steps) {
      k += std::to_string(s.state.id) + ':' + std::to_string(s.action) + ';';
    }
    keys.insert(k);
  }
  CHECK(keys.size() == 64);
}

TEST_CASE("first actions across streams are uniform (chi-square)") {
  const TabularMdp mdp = make_paddle(PaddleConfig{3, 2, 6, 4});
  const SoftmaxLinearFamily family(3, 4, 8.0);
  const PolicyVector uniform = uniform_policy_vector(family, 6);
  const int n = 30000;
  const Batch batch = sample_batch(mdp, family, uniform, n, 2024);
  std::vector<int> counts(3, 0);
  for (const Trajectory& t : batch.trajectories)
    ++counts[(std::size_t)t.steps[0].action];
  const double expect = n / 3.0;
  double stat = 0.0;
  for (int c : counts) stat += (c - expect) * (c - expect) / expect;
  CHECK(testutil::chi_square_pvalue(stat, 2) > 1e-3);
}

TEST_CASE("sampled transition frequencies match the tables (chi-square)") {
  // H = 9 sees two stochastic respawn levels, not just the first rally
  const TabularMdp mdp = make_paddle(PaddleConfig{3, 2, 9, 4});
  const Enumeration& e = *mdp.enumeration();
  const SoftmaxLinearFamily family(3, 4, 8.0);
  const PolicyVector uniform = uniform_policy_vector(family, 9);
  const Batch batch = sample_batch(mdp, family, uniform, 60000, 7);

  // (state, action) -> successor counts
  std::map<std::pair<int, int>, std::map<int, int>> tally;
  for (const Trajectory& t : batch.trajectories)
    for (std::size_t h = 0; h + 1 < t.steps.size(); ++h)
      ++tally[{t.steps[h].state.id, t.steps[h].action}]
             [t.steps[h + 1].state.id];

  int tested = 0;
  int rejections = 0;
  for (const auto& [key, successors] : tally) {
    int total = 0;
    for (const auto& [id, c] : successors) total += c;
    if (total < 500) continue;
    const auto row = e.successors(key.first, key.second);
    if (row.size() < 2) continue;  // deterministic rows cannot deviate
    double stat = 0.0;
    for (const TransitionEntry& tr : row) {
      const double expect = total * tr.prob;
      const auto it = successors.find(tr.next_id);
      const double obs = it == successors.end() ? 0.0 : it->second;
      stat += (obs - expect) * (obs - expect) / expect;
    }
    ++tested;
    if (testutil::chi_square_pvalue(stat, static_cast<int>(row.size()) - 1) < 1e-3)
      ++rejections;
  }
  CHECK(tested >= 5);
  CHECK(rejections <= 2);  // expected false-rejection allowance
}

TEST_CASE("Monte-Carlo return matches the exact value within 3 SE") {
  const TabularMdp mdp = make_paddle(PaddleConfig{3, 2, 6, 4});
  const SoftmaxLinearFamily family(3, 4, 8.0);
  const PolicyVector uniform = uniform_policy_vector(family, 6);
  const double exact = policy_value(mdp, family, uniform);
  const ValueEstimate mc = monte_carlo_value(mdp, family, uniform, 100000, 11);
  CHECK(std::abs(mc.mean - exact) <= 3.0 * mc.std_error);
}

TEST_CASE("batch sampling rejects n = 0") {
  const TabularMdp mdp("chain", testutil::safe_chain(3));
  const SoftmaxLinearFamily family(2, 2, 4.0);
  const PolicyVector uniform = uniform_policy_vector(family, 3);
  CHECK_THROWS_AS(sample_batch(mdp, family, uniform, 0, 1), ConfigError);
}
