#pragma once
// Learner policies: tabular softmax for discrete MDPs and a linear-Gaussian
// policy for the continuous toy. Both expose a flat parameter vector so the
// optimizers below can treat them uniformly.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "coil/mdp.hpp"

namespace coil {

class TabularSoftmaxPolicy {
 public:
  TabularSoftmaxPolicy() = default;
  /// Zero logits, i.e. the uniform "Random" start.
  TabularSoftmaxPolicy(int n_states, int n_actions);
  TabularSoftmaxPolicy(int n_states, int n_actions, std::vector<double> logits);
  /// Warm start from a probability table: logits = log(max(p, floor)).
  static TabularSoftmaxPolicy from_table(const PolicyTable& table, double floor = 1e-6);

  int n_states() const noexcept { return n_states_; }
  int n_actions() const noexcept { return n_actions_; }

  double logit(int s, int a) const { return logits_[index(s, a)]; }
  double prob(int s, int a) const;
  /// Fills `out` (size n_actions) with pi(.|s).
  void probs(int s, std::span<double> out) const;
  double log_prob(int s, int a) const;
  int sample_action(int s, Rng& rng) const;
  int argmax(int s) const;
  PolicyTable table() const;

  std::span<double> params() noexcept { return logits_; }
  std::span<const double> params() const noexcept { return logits_; }

  friend bool operator==(const TabularSoftmaxPolicy&, const TabularSoftmaxPolicy&) = default;

 private:
  std::size_t index(int s, int a) const;

  int n_states_ = 0;
  int n_actions_ = 0;
  std::vector<double> logits_;
};

/// a ~ N(W s + b, diag(exp(log_std))^2). log_std is kept in [kLogStdMin, kLogStdMax].
class LinearGaussianPolicy {
 public:
  static constexpr double kLogStdMin = -5.0;
  static constexpr double kLogStdMax = 2.0;

  LinearGaussianPolicy() = default;
  /// Zero weights and bias, log_std = initial_log_std.
  LinearGaussianPolicy(int state_dim, int action_dim, double initial_log_std = 0.0);

  int state_dim() const noexcept { return state_dim_; }
  int action_dim() const noexcept { return action_dim_; }

  double& weight(int j, int k) { return params_[static_cast<std::size_t>(j) * state_dim_ + k]; }
  double weight(int j, int k) const { return params_[static_cast<std::size_t>(j) * state_dim_ + k]; }
  double& bias(int j) { return params_[weight_count() + j]; }
  double bias(int j) const { return params_[weight_count() + j]; }
  double& log_std(int j) { return params_[weight_count() + action_dim_ + j]; }
  double log_std(int j) const { return params_[weight_count() + action_dim_ + j]; }

  std::vector<double> mean(std::span<const double> state) const;
  double log_density(std::span<const double> state, std::span<const double> action) const;
  double density(std::span<const double> state, std::span<const double> action) const;
  std::vector<double> sample_action(std::span<const double> state, Rng& rng) const;

  /// Re-applies the log_std clamp.
  void clamp();

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }

  friend bool operator==(const LinearGaussianPolicy&, const LinearGaussianPolicy&) = default;

 private:
  std::size_t weight_count() const { return static_cast<std::size_t>(action_dim_) * state_dim_; }
  void check_dims(std::span<const double> state, std::span<const double> action) const;

  int state_dim_ = 0;
  int action_dim_ = 0;
  std::vector<double> params_;  // [W row-major | b | log_std]
};

/// Uniform access used by the criterion and the BC loop.
inline double prob(const TabularSoftmaxPolicy& pi, int s, int a) { return pi.prob(s, a); }
inline double prob(const LinearGaussianPolicy& pi, std::span<const double> s, std::span<const double> a) {
  return pi.density(s, a);
}
inline double step_prob(const TabularSoftmaxPolicy& pi, const Step& st) { return pi.prob(st.state, st.action); }
inline double step_prob(const LinearGaussianPolicy& pi, const ContinuousStep& st) {
  return pi.density(st.state, st.action);
}

template <class S, class A>
struct BcBatch {
  std::vector<std::pair<S, A>> pairs;
};
using DiscreteBatch = BcBatch<int, int>;
using ContinuousBatch = BcBatch<std::vector<double>, std::vector<double>>;

/// Mean NLL of the batch and its gradient w.r.t. params() (written into `grad`).
double bc_loss_and_gradient(const TabularSoftmaxPolicy& pi, const DiscreteBatch& batch, std::span<double> grad);
double bc_loss_and_gradient(const LinearGaussianPolicy& pi, const ContinuousBatch& batch, std::span<double> grad);
/// Mean NLL only.
double bc_loss(const TabularSoftmaxPolicy& pi, const DiscreteBatch& batch);
double bc_loss(const LinearGaussianPolicy& pi, const ContinuousBatch& batch);

enum class OptimizerKind { sgd, adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::sgd;
  double eta = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Stateful first-order update (Adam keeps its moments here).
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg);
  void apply(std::span<double> params, std::span<const double> grad);
  const OptimizerConfig& config() const noexcept { return cfg_; }

 private:
  OptimizerConfig cfg_;
  std::vector<double> m_, v_;
  std::int64_t t_ = 0;
};

/// One plain gradient-descent step: theta -= eta * grad(mean NLL). Returns the
/// pre-step mean NLL. Throws DivergenceError if a parameter turns non-finite.
double bc_gradient_step(TabularSoftmaxPolicy& pi, const DiscreteBatch& batch, double eta);
double bc_gradient_step(LinearGaussianPolicy& pi, const ContinuousBatch& batch, double eta);
/// Same with an arbitrary optimizer.
double bc_gradient_step(TabularSoftmaxPolicy& pi, const DiscreteBatch& batch, Optimizer& opt);
double bc_gradient_step(LinearGaussianPolicy& pi, const ContinuousBatch& batch, Optimizer& opt);

/// sum_s w(s) KL(p(.|s) || q(.|s)).
double kl_to(const PolicyTable& p, const PolicyTable& q, std::span<const double> state_weights);
double kl_to(const TabularSoftmaxPolicy& p, const TabularSoftmaxPolicy& q, std::span<const double> state_weights);

using AnyPolicy = std::variant<TabularSoftmaxPolicy, LinearGaussianPolicy>;

/// Binary checkpoint: magic, version, kind, two dims, then parameters as
/// little-endian float64.
void write_checkpoint(std::ostream& out, const AnyPolicy& policy);
AnyPolicy read_checkpoint(std::istream& in);
void save_checkpoint(const std::string& path, const AnyPolicy& policy);
AnyPolicy load_checkpoint(const std::string& path);

}  // namespace coil
