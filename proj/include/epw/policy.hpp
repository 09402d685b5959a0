#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "epw/mdp.hpp"

namespace epw {

struct PolicyParams {
  std::vector<double> values;

  double norm() const;
  int dim() const { return static_cast<int>(values.size()); }
};

PolicyParams project_to_ball(PolicyParams theta, double bound);

// Regular policy family: parameters live in the Euclidean ball of radius
// norm_bound(), per-action probabilities are Lipschitz in the parameters,
// and theta_rand() induces the uniform distribution on every state.
class PolicyFamily {
 public:
  virtual ~PolicyFamily() = default;

  virtual int param_dim() const = 0;
  virtual int action_count() const = 0;
  virtual int feature_dim() const = 0;
  virtual double norm_bound() const = 0;
  virtual std::string tag() const = 0;

  PolicyParams theta_rand() const;

  // Fills `out` (size action_count) with a probability vector; stable for
  // logits up to magnitude ~500 via max subtraction. Throws on a norm
  // violation.
  virtual void action_probs(const PolicyParams& theta, const State& s,
                            std::span<double> out) const = 0;

  // Gradient of prob(theta, s)[action] with respect to theta, written to
  // `grad` (size param_dim). Returns the probability itself. Rectifier
  // kinks use the slope-0 subgradient.
  virtual double prob_and_grad(const PolicyParams& theta, const State& s,
                               int action, std::span<double> grad) const = 0;

  void prob_grad(const PolicyParams& theta, const State& s, int action,
                 std::span<double> grad) const {
    prob_and_grad(theta, s, action, grad);
  }

  // A constant rho with |prob(t)[a] - prob(t')[a]| <= rho * ||t - t'||
  // whenever the state norm is at most state_norm_bound.
  virtual double certified_lipschitz(double state_norm_bound) const = 0;

 protected:
  void check_norm(const PolicyParams& theta) const;
};

// prob[i] proportional to exp(s . theta_i); parameters are the |A| x d_S
// weight matrix flattened row-major.
class SoftmaxLinearFamily final : public PolicyFamily {
 public:
  SoftmaxLinearFamily(int action_count, int feature_dim, double norm_bound);

  int param_dim() const override { return actions_ * dim_; }
  int action_count() const override { return actions_; }
  int feature_dim() const override { return dim_; }
  double norm_bound() const override { return bound_; }
  std::string tag() const override { return "softmax_linear"; }

  void action_probs(const PolicyParams&, const State&, std::span<double>) const override;
  double prob_and_grad(const PolicyParams&, const State&, int,
                       std::span<double>) const override;
  double certified_lipschitz(double state_norm_bound) const override;

 private:
  int actions_;
  int dim_;
  double bound_;
};

// One rectified hidden layer, softmax output. Parameter layout:
// W1 (hidden x d_S), b1, W2 (|A| x hidden), b2, flattened in that order.
class MlpFamily final : public PolicyFamily {
 public:
  MlpFamily(int action_count, int feature_dim, int hidden_width, double norm_bound);

  int param_dim() const override;
  int action_count() const override { return actions_; }
  int feature_dim() const override { return dim_; }
  int hidden_width() const { return hidden_; }
  double norm_bound() const override { return bound_; }
  std::string tag() const override { return "mlp"; }

  void action_probs(const PolicyParams&, const State&, std::span<double>) const override;
  double prob_and_grad(const PolicyParams&, const State&, int,
                       std::span<double>) const override;
  double certified_lipschitz(double state_norm_bound) const override;

 private:
  int actions_;
  int dim_;
  int hidden_;
  double bound_;
};

// One parameter slot per level; level-h states act under slots[h].
struct PolicyVector {
  std::vector<PolicyParams> slots;

  int horizon() const { return static_cast<int>(slots.size()); }
};

PolicyVector uniform_policy_vector(const PolicyFamily& family, int horizon);

struct LipschitzAuditResult {
  double certified_rho = 0.0;
  double max_ratio = 0.0;
  int pairs = 0;
};

// Randomized audit of the certified constant over parameter pairs in the
// ball and states drawn from `states`. A ratio above rho is a hard error
// (ConsistencyError): an unsound rho would silently invalidate every
// downstream bound.
LipschitzAuditResult audit_lipschitz(const PolicyFamily& family,
                                     std::span<const State> states, int pairs,
                                     std::uint64_t seed);

// Uniform draw from the radius-`bound` ball.
PolicyParams random_in_ball(int dim, double bound, RngStream& rng);

}  // namespace epw
