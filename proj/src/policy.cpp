#include "epw/policy.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

#include "epw/errors.hpp"

namespace epw {

double PolicyParams::norm() const {
  double acc = 0.0;
  for (double v : values) acc += v * v;
  return std::sqrt(acc);
}

PolicyParams project_to_ball(PolicyParams theta, double bound) {
  const double n = theta.norm();
  // the slack keeps the projection exactly idempotent under rounding
  if (n > bound * (1.0 + 1e-12)) {
    const double scale = bound / n;
    for (double& v : theta.values) v *= scale;
  }
  return theta;
}

PolicyParams PolicyFamily::theta_rand() const {
  PolicyParams p;
  p.values.assign(static_cast<std::size_t>(param_dim()), 0.0);
  return p;
}

void PolicyFamily::check_norm(const PolicyParams& theta) const {
  if (theta.dim() != param_dim())
    throw ConfigError("policy parameter dimension mismatch");
  if (theta.norm() > norm_bound() * (1.0 + 1e-9) + 1e-12)
    throw ConfigError("policy parameters violate the norm bound");
}

namespace {

void softmax_inplace(std::span<double> logits) {
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  double sum = 0.0;
  for (double& v : logits) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : logits) v /= sum;
}

}  // namespace

SoftmaxLinearFamily::SoftmaxLinearFamily(int action_count, int feature_dim,
                                         double norm_bound)
    : actions_(action_count), dim_(feature_dim), bound_(norm_bound) {
  if (actions_ < 2) throw ConfigError("softmax family needs >= 2 actions");
  if (dim_ < 1 || bound_ <= 0.0) throw ConfigError("bad softmax family shape");
}

void SoftmaxLinearFamily::action_probs(const PolicyParams& theta, const State& s,
                                       std::span<double> out) const {
  check_norm(theta);
  assert(static_cast<int>(out.size()) == actions_);
  assert(static_cast<int>(s.features.size()) == dim_);
  for (int a = 0; a < actions_; ++a) {
    const double* row = theta.values.data() + static_cast<std::size_t>(a) * dim_;
    double dot = 0.0;
    for (int k = 0; k < dim_; ++k) dot += row[k] * s.features[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(a)] = dot;
  }
  softmax_inplace(out);
}

double SoftmaxLinearFamily::prob_and_grad(const PolicyParams& theta, const State& s,
                                          int action, std::span<double> grad) const {
  assert(static_cast<int>(grad.size()) == param_dim());
  std::vector<double> probs(static_cast<std::size_t>(actions_));
  action_probs(theta, s, probs);
  const double pa = probs[static_cast<std::size_t>(action)];
  // d prob_a / d theta_b = p_a ((a == b) - p_b) s
  for (int b = 0; b < actions_; ++b) {
    const double coef = pa * ((b == action ? 1.0 : 0.0) - probs[static_cast<std::size_t>(b)]);
    double* out = grad.data() + static_cast<std::size_t>(b) * dim_;
    for (int k = 0; k < dim_; ++k) out[k] = coef * s.features[static_cast<std::size_t>(k)];
  }
  return pa;
}

double SoftmaxLinearFamily::certified_lipschitz(double state_norm_bound) const {
  // ||grad_theta prob_a||_2 <= ||s||_2 for every action.
  return state_norm_bound;
}

MlpFamily::MlpFamily(int action_count, int feature_dim, int hidden_width,
                     double norm_bound)
    : actions_(action_count), dim_(feature_dim), hidden_(hidden_width),
      bound_(norm_bound) {
  if (actions_ < 2 || dim_ < 1 || hidden_ < 1 || bound_ <= 0.0)
    throw ConfigError("bad mlp family shape");
}

int MlpFamily::param_dim() const {
  return hidden_ * dim_ + hidden_ + actions_ * hidden_ + actions_;
}

void MlpFamily::action_probs(const PolicyParams& theta, const State& s,
                             std::span<double> out) const {
  check_norm(theta);
  assert(static_cast<int>(out.size()) == actions_);
  const double* w1 = theta.values.data();
  const double* b1 = w1 + static_cast<std::size_t>(hidden_) * dim_;
  const double* w2 = b1 + hidden_;
  const double* b2 = w2 + static_cast<std::size_t>(actions_) * hidden_;

  std::vector<double> h(static_cast<std::size_t>(hidden_));
  for (int j = 0; j < hidden_; ++j) {
    double z = b1[j];
    const double* row = w1 + static_cast<std::size_t>(j) * dim_;
    for (int k = 0; k < dim_; ++k) z += row[k] * s.features[static_cast<std::size_t>(k)];
    h[static_cast<std::size_t>(j)] = z > 0.0 ? z : 0.0;
  }
  for (int a = 0; a < actions_; ++a) {
    double z = b2[a];
    const double* row = w2 + static_cast<std::size_t>(a) * hidden_;
    for (int j = 0; j < hidden_; ++j) z += row[j] * h[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(a)] = z;
  }
  softmax_inplace(out);
}

double MlpFamily::prob_and_grad(const PolicyParams& theta, const State& s,
                                int action, std::span<double> grad) const {
  check_norm(theta);
  assert(static_cast<int>(grad.size()) == param_dim());
  const double* w1 = theta.values.data();
  const double* b1 = w1 + static_cast<std::size_t>(hidden_) * dim_;
  const double* w2 = b1 + hidden_;
  const double* b2 = w2 + static_cast<std::size_t>(actions_) * hidden_;

  std::vector<double> pre(static_cast<std::size_t>(hidden_));
  std::vector<double> h(static_cast<std::size_t>(hidden_));
  for (int j = 0; j < hidden_; ++j) {
    double z = b1[j];
    const double* row = w1 + static_cast<std::size_t>(j) * dim_;
    for (int k = 0; k < dim_; ++k) z += row[k] * s.features[static_cast<std::size_t>(k)];
    pre[static_cast<std::size_t>(j)] = z;
    h[static_cast<std::size_t>(j)] = z > 0.0 ? z : 0.0;
  }
  std::vector<double> probs(static_cast<std::size_t>(actions_));
  for (int a = 0; a < actions_; ++a) {
    double z = b2[a];
    const double* row = w2 + static_cast<std::size_t>(a) * hidden_;
    for (int j = 0; j < hidden_; ++j) z += row[j] * h[static_cast<std::size_t>(j)];
    probs[static_cast<std::size_t>(a)] = z;
  }
  softmax_inplace(probs);
  const double pa = probs[static_cast<std::size_t>(action)];

  std::fill(grad.begin(), grad.end(), 0.0);
  double* gw1 = grad.data();
  double* gb1 = gw1 + static_cast<std::size_t>(hidden_) * dim_;
  double* gw2 = gb1 + hidden_;
  double* gb2 = gw2 + static_cast<std::size_t>(actions_) * hidden_;

  // d prob_a / d logit_i
  std::vector<double> glogit(static_cast<std::size_t>(actions_));
  for (int i = 0; i < actions_; ++i)
    glogit[static_cast<std::size_t>(i)] =
        pa * ((i == action ? 1.0 : 0.0) - probs[static_cast<std::size_t>(i)]);

  std::vector<double> gh(static_cast<std::size_t>(hidden_), 0.0);
  for (int i = 0; i < actions_; ++i) {
    const double gi = glogit[static_cast<std::size_t>(i)];
    gb2[i] = gi;
    double* row = gw2 + static_cast<std::size_t>(i) * hidden_;
    const double* w2row = w2 + static_cast<std::size_t>(i) * hidden_;
    for (int j = 0; j < hidden_; ++j) {
      row[j] = gi * h[static_cast<std::size_t>(j)];
      gh[static_cast<std::size_t>(j)] += gi * w2row[j];
    }
  }
  for (int j = 0; j < hidden_; ++j) {
    // slope 0 at the kink
    const double gz = pre[static_cast<std::size_t>(j)] > 0.0
                          ? gh[static_cast<std::size_t>(j)]
                          : 0.0;
    gb1[j] = gz;
    double* row = gw1 + static_cast<std::size_t>(j) * dim_;
    for (int k = 0; k < dim_; ++k) row[k] = gz * s.features[static_cast<std::size_t>(k)];
  }
  return pa;
}

double MlpFamily::certified_lipschitz(double state_norm_bound) const {
  // For each logit i: ||grad_theta logit_i||^2 <= ||h||^2 + 1
  //   + ||W2_i||^2 (||s||^2 + 1), with ||h|| <= B sqrt(||s||^2 + 1) and
  // ||W2_i|| <= B from the parameter ball. Summing |d prob_a / d logit_i|
  // over i gives 2 p (1 - p) <= 1/2.
  const double s2 = state_norm_bound * state_norm_bound + 1.0;
  return 0.5 * std::sqrt(2.0 * bound_ * bound_ * s2 + 1.0);
}

PolicyVector uniform_policy_vector(const PolicyFamily& family, int horizon) {
  PolicyVector v;
  v.slots.assign(static_cast<std::size_t>(horizon), family.theta_rand());
  return v;
}

PolicyParams random_in_ball(int dim, double bound, RngStream& rng) {
  PolicyParams p;
  p.values.resize(static_cast<std::size_t>(dim));
  double n2 = 0.0;
  for (double& v : p.values) {
    v = rng.next_gaussian();
    n2 += v * v;
  }
  const double n = std::sqrt(n2);
  const double radius =
      bound * std::pow(rng.next_double(), 1.0 / static_cast<double>(dim));
  const double scale = n > 0.0 ? radius / n : 0.0;
  for (double& v : p.values) v *= scale;
  return p;
}

LipschitzAuditResult audit_lipschitz(const PolicyFamily& family,
                                     std::span<const State> states, int pairs,
                                     std::uint64_t seed) {
  if (states.empty()) throw ConfigError("lipschitz audit needs states");
  double snorm = 0.0;
  for (const State& s : states) snorm = std::max(snorm, s.norm());
  LipschitzAuditResult res;
  res.certified_rho = family.certified_lipschitz(snorm);
  res.pairs = pairs;

  RngStream rng(seed, 0x4c495053ULL);  // "LIPS"
  const int dim = family.param_dim();
  const int actions = family.action_count();
  std::vector<double> pa(static_cast<std::size_t>(actions));
  std::vector<double> pb(static_cast<std::size_t>(actions));
  for (int i = 0; i < pairs; ++i) {
    const PolicyParams t1 = random_in_ball(dim, family.norm_bound(), rng);
    const PolicyParams t2 = random_in_ball(dim, family.norm_bound(), rng);
    double dist2 = 0.0;
    for (int k = 0; k < dim; ++k) {
      const double d = t1.values[static_cast<std::size_t>(k)] -
                       t2.values[static_cast<std::size_t>(k)];
      dist2 += d * d;
    }
    const double dist = std::sqrt(dist2);
    if (dist < 1e-12) continue;
    const State& s = states[static_cast<std::size_t>(rng.next_index(
        static_cast<int>(states.size())))];
    family.action_probs(t1, s, pa);
    family.action_probs(t2, s, pb);
    for (int a = 0; a < actions; ++a) {
      const double ratio = std::abs(pa[static_cast<std::size_t>(a)] -
                                    pb[static_cast<std::size_t>(a)]) /
                           dist;
      res.max_ratio = std::max(res.max_ratio, ratio);
    }
  }
  if (res.max_ratio > res.certified_rho * (1.0 + 1e-9))
    throw ConsistencyError("lipschitz audit violated the certified constant");
  return res;
}

}  // namespace epw
