#include "epw/learner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

#include "epw/errors.hpp"
#include "epw/oracle.hpp"

namespace epw {

namespace {

constexpr std::uint64_t kBatchTag = 0x62617463ULL;  // "batc"
constexpr std::uint64_t kErmTag = 0x65726d00ULL;    // "erm"

void check_spec(const Batch& batch, const LossSpec& spec) {
  if (batch.size() == 0) throw ConfigError("empirical loss needs a nonempty batch");
  const int horizon = static_cast<int>(batch.trajectories.front().steps.size());
  if (spec.level < 0 || spec.level > horizon - 2)
    throw ConfigError("loss level must lie in [0, H-2]");
  if (spec.window < 0 || spec.window > horizon - 1)
    throw ConfigError("loss window must lie in [0, H-1]");
}

}  // namespace

WindowedLoss::WindowedLoss(const PolicyFamily& family, const Batch& batch,
                           const LossSpec& spec)
    : family_(family), factors_(spec.window + 1), batch_size_(batch.size()) {
  check_spec(batch, spec);
  const int horizon = static_cast<int>(batch.trajectories.front().steps.size());
  const int idx = std::min(spec.level + spec.window + 1, horizon - 1);
  prefactor_ = std::pow(static_cast<double>(family.action_count()), factors_);
  for (const Trajectory& traj : batch.trajectories) {
    if (static_cast<int>(traj.steps.size()) != horizon)
      throw ConfigError("batch trajectories have mixed lengths");
    if (!failed(traj.steps[static_cast<std::size_t>(idx)].state)) continue;
    for (int j = 0; j < factors_; ++j) {
      const TrajStep& step = traj.steps[static_cast<std::size_t>(spec.level + j)];
      states_.push_back(step.state);
      actions_.push_back(step.action);
    }
  }
}

double WindowedLoss::value(const PolicyParams& theta) const {
  const int actions = family_.action_count();
  std::vector<double> probs(static_cast<std::size_t>(actions));
  double total = 0.0;
  const int windows = active_windows();
  for (int w = 0; w < windows; ++w) {
    double prod = 1.0;
    for (int j = 0; j < factors_; ++j) {
      const std::size_t pos = static_cast<std::size_t>(w * factors_ + j);
      family_.action_probs(theta, states_[pos], probs);
      prod *= probs[static_cast<std::size_t>(actions_[pos])];
    }
    total += prod;
  }
  return prefactor_ * total / batch_size_;
}

double WindowedLoss::value_and_grad(const PolicyParams& theta,
                                    std::vector<double>& grad) const {
  const int dim = family_.param_dim();
  grad.assign(static_cast<std::size_t>(dim), 0.0);
  std::vector<double> p(static_cast<std::size_t>(factors_));
  std::vector<double> prefix(static_cast<std::size_t>(factors_) + 1);
  std::vector<double> suffix(static_cast<std::size_t>(factors_) + 1);
  std::vector<std::vector<double>> grads(
      static_cast<std::size_t>(factors_),
      std::vector<double>(static_cast<std::size_t>(dim)));

  double total = 0.0;
  const int windows = active_windows();
  for (int w = 0; w < windows; ++w) {
    for (int j = 0; j < factors_; ++j) {
      const std::size_t pos = static_cast<std::size_t>(w * factors_ + j);
      p[static_cast<std::size_t>(j)] = family_.prob_and_grad(
          theta, states_[pos], actions_[pos], grads[static_cast<std::size_t>(j)]);
    }
    prefix[0] = 1.0;
    for (int j = 0; j < factors_; ++j)
      prefix[static_cast<std::size_t>(j + 1)] =
          prefix[static_cast<std::size_t>(j)] * p[static_cast<std::size_t>(j)];
    suffix[static_cast<std::size_t>(factors_)] = 1.0;
    for (int j = factors_ - 1; j >= 0; --j)
      suffix[static_cast<std::size_t>(j)] =
          suffix[static_cast<std::size_t>(j + 1)] * p[static_cast<std::size_t>(j)];
    total += prefix[static_cast<std::size_t>(factors_)];
    for (int j = 0; j < factors_; ++j) {
      const double coef = prefix[static_cast<std::size_t>(j)] *
                          suffix[static_cast<std::size_t>(j + 1)];
      if (coef == 0.0) continue;
      const auto& fg = grads[static_cast<std::size_t>(j)];
      for (int k = 0; k < dim; ++k)
        grad[static_cast<std::size_t>(k)] += coef * fg[static_cast<std::size_t>(k)];
    }
  }
  const double scale = prefactor_ / batch_size_;
  for (double& v : grad) v *= scale;
  return scale * total;
}

double empirical_loss(const PolicyFamily& family, const PolicyParams& theta,
                      const Batch& batch, const LossSpec& spec) {
  return WindowedLoss(family, batch, spec).value(theta);
}

std::vector<double> empirical_loss_grad(const PolicyFamily& family,
                                        const PolicyParams& theta,
                                        const Batch& batch, const LossSpec& spec) {
  std::vector<double> grad;
  WindowedLoss(family, batch, spec).value_and_grad(theta, grad);
  return grad;
}

namespace {

struct RestartOutcome {
  PolicyParams theta;
  double loss = 0.0;
  int iterate = 0;
};

RestartOutcome run_restart(const PolicyFamily& family, const WindowedLoss& loss,
                           const ErmConfig& erm, int restart) {
  RngStream rng(erm.seed, kErmTag, static_cast<std::uint64_t>(restart));
  PolicyParams theta = restart == 0
                           ? family.theta_rand()
                           : random_in_ball(family.param_dim(), erm.bound, rng);
  RestartOutcome best{theta, 0.0, 0};
  std::vector<double> grad;
  double v = loss.value_and_grad(theta, grad);
  best.loss = v;
  if (v == 0.0) return best;  // nothing to improve on
  for (int k = 1; k <= erm.steps; ++k) {
    double gnorm = 0.0;
    for (double g : grad) gnorm += g * g;
    gnorm = std::sqrt(gnorm);
    if (gnorm == 0.0) break;
    const double step =
        erm.step_size / (1.0 + 4.0 * static_cast<double>(k - 1) / erm.steps);
    const double scale = step / std::max(1.0, gnorm);
    for (int i = 0; i < theta.dim(); ++i)
      theta.values[static_cast<std::size_t>(i)] -=
          scale * grad[static_cast<std::size_t>(i)];
    theta = project_to_ball(std::move(theta), erm.bound);
    v = loss.value_and_grad(theta, grad);
    if (v < best.loss) best = RestartOutcome{theta, v, k};
  }
  return best;
}

}  // namespace

ErmResult minimize_loss(const PolicyFamily& family, const Batch& batch,
                        const LossSpec& spec, const ErmConfig& erm, int jobs) {
  if (erm.restarts < 1) throw ConfigError("erm: need at least one restart");
  if (erm.steps < 0 || erm.step_size <= 0.0 || erm.bound <= 0.0)
    throw ConfigError("erm: bad step configuration");
  const WindowedLoss loss(family, batch, spec);

  std::vector<RestartOutcome> outcomes(static_cast<std::size_t>(erm.restarts));
  outcomes[0] = run_restart(family, loss, erm, 0);
  // Loss 0 at theta_rand cannot be improved and wins every tie-break.
  if (outcomes[0].loss > 0.0 && erm.restarts > 1) {
    if (jobs == 0) {
      jobs = static_cast<int>(std::thread::hardware_concurrency());
      if (jobs < 1) jobs = 1;
    }
    jobs = std::min(jobs, erm.restarts - 1);
    if (jobs <= 1) {
      for (int r = 1; r < erm.restarts; ++r)
        outcomes[static_cast<std::size_t>(r)] = run_restart(family, loss, erm, r);
    } else {
      std::vector<std::future<void>> futs;
      std::atomic<int> counter{1};
      for (int j = 0; j < jobs; ++j)
        futs.push_back(std::async(std::launch::async, [&]() {
          for (int r = counter.fetch_add(1); r < erm.restarts;
               r = counter.fetch_add(1))
            outcomes[static_cast<std::size_t>(r)] = run_restart(family, loss, erm, r);
        }));
      for (auto& f : futs) f.get();
    }
  } else if (outcomes[0].loss == 0.0) {
    for (int r = 1; r < erm.restarts; ++r)
      outcomes[static_cast<std::size_t>(r)].loss =
          std::numeric_limits<double>::infinity();
  }

  int best = 0;
  for (int r = 1; r < erm.restarts; ++r)
    if (outcomes[static_cast<std::size_t>(r)].loss <
        outcomes[static_cast<std::size_t>(best)].loss)
      best = r;
  const auto& win = outcomes[static_cast<std::size_t>(best)];
  ErmResult res;
  res.theta = win.theta;
  res.loss = win.loss;
  res.restart = best;
  res.iterate = win.iterate;
  return res;
}

std::uint64_t RunRecord::core_digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix_bytes = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  auto mix_double = [&](double v) { mix_bytes(&v, sizeof(v)); };
  auto mix_int = [&](std::int64_t v) { mix_bytes(&v, sizeof(v)); };
  mix_bytes(mdp_name.data(), mdp_name.size());
  mix_bytes(family_tag.data(), family_tag.size());
  mix_int(horizon);
  mix_int(action_count);
  mix_int(n);
  mix_int(window);
  mix_int(static_cast<std::int64_t>(seed));
  mix_int(erm.restarts);
  mix_int(erm.steps);
  mix_double(erm.step_size);
  mix_double(erm.bound);
  for (const LevelRecord& lr : levels) {
    mix_int(lr.level);
    mix_double(lr.loss_before);
    mix_double(lr.loss_after);
    mix_int(lr.restart_chosen);
    mix_double(lr.safe_occupancy);
  }
  for (const PolicyParams& p : final_thetas.slots)
    for (double v : p.values) mix_double(v);
  mix_int(oracle_exact ? 1 : 0);
  mix_double(final_value);
  mix_double(final_value_se);
  return h;
}

std::pair<PolicyVector, RunRecord> run_algorithm1(
    const LeveledMdp& mdp, const PolicyFamily& family, int n, int window,
    std::uint64_t seed, const ErmConfig& erm, const LevelCallback* on_level) {
  if (n < 1) throw ConfigError("algorithm: n must be >= 1");
  const int horizon = mdp.horizon();
  if (window < 0 || window > horizon - 1)
    throw ConfigError("algorithm: window must lie in [0, H-1]");

  PolicyVector thetas = uniform_policy_vector(family, horizon);
  RunRecord rec;
  rec.mdp_name = mdp.name();
  rec.family_tag = family.tag();
  rec.horizon = horizon;
  rec.action_count = mdp.action_count();
  rec.n = n;
  rec.window = window;
  rec.seed = seed;
  rec.erm = erm;
  const bool enumerable = mdp.enumeration() != nullptr;

  const PolicyParams rand = family.theta_rand();
  for (int t = 0; t <= horizon - 2; ++t) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t batch_seed =
        derive_stream(seed, kBatchTag, static_cast<std::uint64_t>(t));
    const Batch batch = sample_batch(mdp, family, thetas, n, batch_seed);
    const LossSpec spec{t, window};
    ErmConfig erm_t = erm;
    erm_t.seed = derive_stream(seed, kErmTag, static_cast<std::uint64_t>(t));
    const double before = empirical_loss(family, rand, batch, spec);
    const ErmResult fit = minimize_loss(family, batch, spec, erm_t);
    thetas.slots[static_cast<std::size_t>(t)] = fit.theta;

    LevelRecord lr;
    lr.level = t;
    lr.loss_before = before;
    lr.loss_after = fit.loss;
    lr.restart_chosen = fit.restart;
    if (enumerable) lr.safe_occupancy = safe_occupancy(mdp, family, thetas, t + 1);
    lr.wall_ms = std::chrono::duration<double, std::milli>(
                     std::chrono::steady_clock::now() - start)
                     .count();
    rec.levels.push_back(lr);
    if (on_level != nullptr && *on_level) (*on_level)(lr);
  }
  rec.final_thetas = thetas;
  return {thetas, rec};
}

}  // namespace epw
