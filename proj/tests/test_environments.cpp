#include <doctest.h>

#include <cmath>

#include "epw/environments.hpp"
#include "epw/errors.hpp"
#include "epw/oracle.hpp"
#include "test_util.hpp"

using namespace epw;

TEST_CASE("paddle config validation") {
  CHECK_THROWS_AS(make_paddle(PaddleConfig{3, 2, 2, 0}), ConfigError);  // H < D+1
  CHECK_THROWS_AS(make_paddle(PaddleConfig{0, 2, 6, 0}), ConfigError);
  CHECK_THROWS_AS(make_paddle(PaddleConfig{3, 0, 6, 0}), ConfigError);
}

TEST_CASE("single-column paddle has no reachable failure") {
  const TabularMdp mdp = make_paddle(PaddleConfig{1, 2, 6, 3});
  const SoftmaxLinearFamily family(3, 4, 4.0);
  CHECK(policy_value(mdp, family, uniform_policy_vector(family, 6)) ==
        doctest::Approx(1.0));
  const GenericGameReport rep = check_generic_game(mdp);
  CHECK(rep.trivial_game);
  CHECK(rep.pass());
  CHECK(min_epw_constant(mdp).min_c == 0);
}

TEST_CASE("paddle default instance is a generic game with a short window") {
  const TabularMdp mdp = make_paddle(PaddleConfig{3, 2, 6, 4});
  const GenericGameReport rep = check_generic_game(mdp);
  CHECK(rep.failure_set_nonempty);
  CHECK(rep.completeness_ok);
  CHECK(rep.min_deterministic_failure_prob == doctest::Approx(0.0));
  CHECK(rep.pass());
  const EpwCertificate cert = min_epw_constant(mdp);
  CHECK(cert.min_c <= 2);
}

TEST_CASE("paddle rally state is safe iff the gap is coverable") {
  const TabularMdp mdp = make_paddle(PaddleConfig{3, 2, 6, 4});
  const Enumeration& e = *mdp.enumeration();
  const SafeSetTable table = max_safe_set(mdp);
  for (const State& s : e.states) {
    if (s.kind != StateKind::kOrdinary) continue;
    const int p = static_cast<int>(s.features[0]);
    const int ball = static_cast<int>(s.features[1]);
    const int d = static_cast<int>(s.features[2]);
    CHECK(table.is_safe(s.id) == (std::abs(p - ball) <= d));
  }
}

TEST_CASE("gates config validation") {
  CHECK_THROWS_AS(make_gates(GatesConfig{5, 1, 12, 0}), ConfigError);
  CHECK_THROWS_AS(make_gates(GatesConfig{0, 3, 12, 0}), ConfigError);
}

TEST_CASE("single-column gates are trivially winnable") {
  const TabularMdp mdp = make_gates(GatesConfig{1, 3, 9, 0});
  const SoftmaxLinearFamily family(3, 4, 4.0);
  CHECK(policy_value(mdp, family, uniform_policy_vector(family, 9)) ==
        doctest::Approx(1.0));
}

TEST_CASE("gates default instance is a generic game with window G-1") {
  const TabularMdp mdp = make_gates(GatesConfig{5, 3, 12, 1});
  const GenericGameReport rep = check_generic_game(mdp);
  CHECK(rep.failure_set_nonempty);
  CHECK(rep.completeness_ok);
  CHECK(rep.pass());
  const EpwCertificate cert = min_epw_constant(mdp);
  CHECK(cert.min_c <= 2);  // G - 1
}

TEST_CASE("always-stay on gates wins exactly when every spawn stays centered") {
  // choose a seed whose initial gate sits on the skier's column
  const int W = 3, G = 3, H = 10;
  const int center = (W - 1) / 2;
  TabularMdp mdp = make_gates(GatesConfig{W, G, H, 0});
  for (std::uint64_t seed = 0; seed < 64; ++seed) {
    TabularMdp candidate = make_gates(GatesConfig{W, G, H, seed});
    if (static_cast<int>(candidate.initial_state().features[1]) == center) {
      mdp = std::move(candidate);
      break;
    }
  }
  REQUIRE(static_cast<int>(mdp.initial_state().features[1]) == center);

  const testutil::ForcedActionFamily stay(3, 4, {1});
  const PolicyVector v{std::vector<PolicyParams>(H, PolicyParams{{0.0}})};
  // gates checked at levels G, 2G, ... <= H-1; the first uses the aligned
  // initial gate, each later one needs a fresh spawn to land on center,
  // each with probability 1/3 (spawn radius G-1 = 2 covers all of W = 3).
  const int checks = (H - 1) / G;
  const double expected = std::pow(1.0 / 3.0, checks - 1);
  CHECK(policy_value(mdp, stay, v) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("hard tree structure matches the construction") {
  const TabularMdp mdp = make_tree_hard(TreeHardConfig{3, 5});
  const Enumeration& e = *mdp.enumeration();
  CHECK(e.level_ids[0].size() == 1);
  CHECK(e.level_ids[1].size() == 2);
  CHECK(e.count_kind_at_level(2, StateKind::kOrdinary) == 1);
  CHECK(e.count_kind_at_level(2, StateKind::kAbsorbed) == 1);
  CHECK(e.count_kind(StateKind::kFailure) == 1);
  CHECK_THROWS_AS(make_tree_hard(TreeHardConfig{1, 0}), ConfigError);
}

TEST_CASE("hard tree uniform value is exactly 2^{1-H}") {
  const TabularMdp mdp = make_tree_hard(TreeHardConfig{12, 21});
  const SoftmaxLinearFamily family(2, 2, 4.0);
  const double value = policy_value(mdp, family, uniform_policy_vector(family, 12));
  CHECK(value == std::pow(2.0, -11));
}

TEST_CASE("hard tree needs the full window") {
  for (std::uint64_t seed : {0ULL, 3ULL, 11ULL}) {
    const TabularMdp mdp = make_tree_hard(TreeHardConfig{4, seed});
    CHECK(min_epw_constant(mdp).min_c == 3);
    CHECK(check_generic_game(mdp).pass());
  }
  CHECK(min_epw_constant(make_tree_hard(TreeHardConfig{6, 2})).min_c == 5);
}

TEST_CASE("random generator rejects infeasible requests") {
  CHECK_THROWS_AS(generate_random_epw(RandomEpwConfig{0, 6, 10, 3, 1}), ConfigError);
  CHECK_THROWS_AS(generate_random_epw(RandomEpwConfig{3, 4, 10, 3, 1}), ConfigError);
  CHECK_THROWS_AS(generate_random_epw(RandomEpwConfig{3, 6, 4, 3, 1}), ConfigError);
  CHECK_THROWS_AS(generate_random_epw(RandomEpwConfig{2, 6, 10, 1, 1}), ConfigError);
}

TEST_CASE("random generator plants the exact window constant") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto [mdp, planted] = generate_random_epw(RandomEpwConfig{3, 6, 10, 3, seed});
    CHECK(planted == 3);
    CHECK(min_epw_constant(mdp).min_c == 3);
    CHECK(check_generic_game(mdp).pass());
  }
  const auto [mdp1, p1] = generate_random_epw(RandomEpwConfig{1, 3, 5, 2, 17});
  CHECK(min_epw_constant(mdp1).min_c == p1);
}
