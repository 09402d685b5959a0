#include <doctest.h>

#include <cmath>
#include <vector>

#include "epw/environments.hpp"
#include "epw/errors.hpp"
#include "epw/policy.hpp"
#include "test_util.hpp"

using namespace epw;

namespace {

std::vector<double> probs_of(const PolicyFamily& f, const PolicyParams& theta,
                             const State& s) {
  std::vector<double> p(static_cast<std::size_t>(f.action_count()));
  f.action_probs(theta, s, p);
  return p;
}

State make_state(std::vector<double> features, int level = 0) {
  State s;
  s.features = std::move(features);
  s.level = level;
  return s;
}

// Central finite difference of prob(theta)[action] against the analytic
// gradient; returns the relative error in the Euclidean norm.
double fd_relative_error(const PolicyFamily& f, const PolicyParams& theta,
                         const State& s, int action, double h = 1e-6) {
  std::vector<double> analytic(static_cast<std::size_t>(f.param_dim()));
  f.prob_grad(theta, s, action, analytic);
  std::vector<double> fd(analytic.size());
  PolicyParams probe = theta;
  for (std::size_t k = 0; k < fd.size(); ++k) {
    const double keep = probe.values[k];
    probe.values[k] = keep + h;
    const double up = probs_of(f, probe, s)[static_cast<std::size_t>(action)];
    probe.values[k] = keep - h;
    const double dn = probs_of(f, probe, s)[static_cast<std::size_t>(action)];
    probe.values[k] = keep;
    fd[k] = (up - dn) / (2.0 * h);
  }
  double diff2 = 0.0, ref2 = 0.0;
  for (std::size_t k = 0; k < fd.size(); ++k) {
    diff2 += (analytic[k] - fd[k]) * (analytic[k] - fd[k]);
    ref2 += fd[k] * fd[k];
  }
  return std::sqrt(diff2) / std::max(std::sqrt(ref2), 1e-10);
}

std::vector<State> paddle_states() {
  const TabularMdp mdp = make_paddle(PaddleConfig{3, 2, 6, 4});
  std::vector<State> states;
  for (const State& s : mdp.enumeration()->states)
    if (s.kind != StateKind::kAbsorbed) states.push_back(s);
  return states;
}

}  // namespace

TEST_CASE("softmax at zero parameters is uniform") {
  const SoftmaxLinearFamily f(3, 4, 8.0);
  const auto p = probs_of(f, f.theta_rand(), make_state({1.0, -2.0, 0.5, 3.0}));
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("softmax log-odds gap of ln 3 gives probabilities 3:1") {
  const SoftmaxLinearFamily f(2, 2, 8.0);
  PolicyParams theta{{std::log(3.0), 0.0, 0.0, 0.0}};
  const auto p = probs_of(f, theta, make_state({1.0, 0.0}));
  CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("probabilities form a simplex for both families") {
  const SoftmaxLinearFamily soft(3, 4, 8.0);
  const MlpFamily mlp(3, 4, 6, 8.0);
  RngStream rng(3);
  const auto states = paddle_states();
  for (int i = 0; i < 200; ++i) {
    const State& s = states[(std::size_t)rng.next_index((int)states.size())];
    for (const PolicyFamily* f :
         {static_cast<const PolicyFamily*>(&soft), static_cast<const PolicyFamily*>(&mlp)}) {
      const PolicyParams theta = random_in_ball(f->param_dim(), f->norm_bound(), rng);
      const auto p = probs_of(*f, theta, s);
      double sum = 0.0;
      for (double v : p) {
        CHECK(v >= 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("softmax stays stable for logits up to magnitude 500") {
  const SoftmaxLinearFamily f(2, 1, 800.0);
  PolicyParams theta{{500.0, -500.0}};
  const auto p = probs_of(f, theta, make_state({1.0}));
  CHECK(std::isfinite(p[0]));
  CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(p[0] + p[1] - 1.0) <= 1e-12);
}

TEST_CASE("norm violations are contract errors") {
  const SoftmaxLinearFamily f(2, 2, 1.0);
  PolicyParams theta{{5.0, 0.0, 0.0, 0.0}};
  std::vector<double> out(2);
  CHECK_THROWS_AS(f.action_probs(theta, make_state({1.0, 0.0}), out), ConfigError);
}

TEST_CASE("softmax gradient at uniform equals s/4 on two actions") {
  const SoftmaxLinearFamily f(2, 3, 8.0);
  const State s = make_state({0.7, -1.2, 2.0});
  std::vector<double> grad(static_cast<std::size_t>(f.param_dim()));
  f.prob_grad(f.theta_rand(), s, 0, grad);
  for (int k = 0; k < 3; ++k) {
    CHECK(grad[(std::size_t)k] ==
          doctest::Approx(s.features[(std::size_t)k] / 4.0).epsilon(1e-12));
    CHECK(grad[(std::size_t)(3 + k)] ==
          doctest::Approx(-s.features[(std::size_t)k] / 4.0).epsilon(1e-12));
  }
}

TEST_CASE("per-action gradients sum to the zero vector") {
  const SoftmaxLinearFamily soft(3, 4, 8.0);
  const MlpFamily mlp(3, 4, 5, 8.0);
  RngStream rng(17);
  const auto states = paddle_states();
  for (const PolicyFamily* f :
       {static_cast<const PolicyFamily*>(&soft), static_cast<const PolicyFamily*>(&mlp)}) {
    for (int i = 0; i < 25; ++i) {
      const State& s = states[(std::size_t)rng.next_index((int)states.size())];
      const PolicyParams theta = random_in_ball(f->param_dim(), f->norm_bound(), rng);
      std::vector<double> sum(static_cast<std::size_t>(f->param_dim()), 0.0);
      std::vector<double> g(sum.size());
      for (int a = 0; a < f->action_count(); ++a) {
        f->prob_grad(theta, s, a, g);
        for (std::size_t k = 0; k < g.size(); ++k) sum[k] += g[k];
      }
      for (double v : sum) CHECK(std::abs(v) <= 1e-10);
    }
  }
}

TEST_CASE("probability gradients match central finite differences") {
  // moderate parameter radius keeps probabilities off the saturated tails,
  // where the relative comparison loses conditioning
  const SoftmaxLinearFamily soft(3, 4, 8.0);
  const MlpFamily mlp(3, 4, 5, 8.0);
  RngStream rng(23);
  const auto states = paddle_states();
  int tested = 0;
  while (tested < 100) {
    const State& s = states[(std::size_t)rng.next_index((int)states.size())];
    const PolicyParams ts = random_in_ball(soft.param_dim(), 1.5, rng);
    const int a = rng.next_index(3);
    CHECK(fd_relative_error(soft, ts, s, a) <= 1e-5);

    const PolicyParams tm = random_in_ball(mlp.param_dim(), 1.5, rng);
    // keep away from rectifier kinks
    const double* w1 = tm.values.data();
    const double* b1 = w1 + 5 * 4;
    bool near_kink = false;
    for (int j = 0; j < 5; ++j) {
      double z = b1[j];
      for (int k = 0; k < 4; ++k) z += w1[j * 4 + k] * s.features[(std::size_t)k];
      near_kink = near_kink || std::abs(z) < 1e-3;
    }
    if (near_kink) continue;
    CHECK(fd_relative_error(mlp, tm, s, a) <= 1e-5);
    ++tested;
  }
}

TEST_CASE("rectifier kink uses the slope-zero subgradient") {
  const MlpFamily mlp(2, 2, 1, 8.0);
  // W1 = 0, b1 = 0 puts the single hidden unit exactly at the kink.
  PolicyParams theta{{0.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0}};
  std::vector<double> grad(static_cast<std::size_t>(mlp.param_dim()));
  mlp.prob_grad(theta, make_state({1.0, 1.0}), 0, grad);
  CHECK(grad[0] == 0.0);  // W1 row
  CHECK(grad[1] == 0.0);
  CHECK(grad[2] == 0.0);  // b1
}

TEST_CASE("certified constants and the randomized audit") {
  const auto states = paddle_states();
  SUBCASE("softmax certificate equals the state-norm bound") {
    const SoftmaxLinearFamily f(3, 4, 8.0);
    CHECK(f.certified_lipschitz(2.0) == doctest::Approx(2.0));
    const LipschitzAuditResult res = audit_lipschitz(f, states, 10000, 5);
    CHECK(res.max_ratio <= res.certified_rho);
    CHECK(res.max_ratio > 0.0);
  }
  SUBCASE("mlp certificate holds empirically") {
    const MlpFamily f(3, 4, 6, 8.0);
    const LipschitzAuditResult res = audit_lipschitz(f, states, 10000, 6);
    CHECK(res.max_ratio <= res.certified_rho);
  }
  SUBCASE("zero state makes probabilities constant") {
    const SoftmaxLinearFamily f(2, 2, 8.0);
    CHECK(f.certified_lipschitz(0.0) == 0.0);
    const State z = make_state({0.0, 0.0});
    RngStream rng(9);
    for (int i = 0; i < 50; ++i) {
      const auto p = probs_of(f, random_in_ball(4, 8.0, rng), z);
      CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
    }
  }
}

TEST_CASE("projection to the ball") {
  PolicyParams inside{{1.0, 2.0}};
  CHECK(project_to_ball(inside, 4.0).values == inside.values);
  const PolicyParams out = project_to_ball(PolicyParams{{8.0, 0.0}}, 4.0);
  CHECK(out.values[0] == doctest::Approx(4.0));
  CHECK(out.values[1] == 0.0);
  RngStream rng(2);
  for (int i = 0; i < 50; ++i) {
    PolicyParams p = random_in_ball(6, 10.0, rng);
    for (double& v : p.values) v *= 3.0;
    const PolicyParams once = project_to_ball(p, 2.5);
    const PolicyParams twice = project_to_ball(once, 2.5);
    CHECK(once.values == twice.values);
    CHECK(once.norm() <= 2.5 * (1.0 + 1e-12));
  }
}

TEST_CASE("theta_rand is exactly uniform everywhere for both families") {
  const SoftmaxLinearFamily soft(3, 4, 8.0);
  const MlpFamily mlp(3, 4, 6, 8.0);
  for (const State& s : paddle_states()) {
    for (const PolicyFamily* f :
         {static_cast<const PolicyFamily*>(&soft), static_cast<const PolicyFamily*>(&mlp)}) {
      const auto p = probs_of(*f, f->theta_rand(), s);
      for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    }
  }
}

TEST_CASE("softmax probabilities are invariant to common logit shifts") {
  const SoftmaxLinearFamily f(3, 4, 50.0);
  RngStream rng(31);
  const auto states = paddle_states();
  for (int i = 0; i < 50; ++i) {
    const State& s = states[(std::size_t)rng.next_index((int)states.size())];
    const PolicyParams theta = random_in_ball(f.param_dim(), 8.0, rng);
    PolicyParams shifted = theta;
    const std::vector<double> common = {0.3, -0.7, 1.1, 0.4};
    for (int b = 0; b < 3; ++b)
      for (int k = 0; k < 4; ++k)
        shifted.values[(std::size_t)(b * 4 + k)] += common[(std::size_t)k];
    const auto p0 = probs_of(f, theta, s);
    const auto p1 = probs_of(f, shifted, s);
    for (int a = 0; a < 3; ++a)
      CHECK(p0[(std::size_t)a] == doctest::Approx(p1[(std::size_t)a]).epsilon(1e-10));
  }
}
