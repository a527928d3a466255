#pragma once
// Finite MDPs, trajectories, datasets and the exact distributional quantities
// (occupancy measures, TV distances, exact policy evaluation) built on them.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coil/errors.hpp"
#include "coil/rng.hpp"

namespace coil {

/// Row-stochastic table pi(a|s). Used for empirical behavior policies, the
/// probability view of softmax policies, and everything the exact solvers eat.
class PolicyTable {
 public:
  PolicyTable() = default;
  /// Uniform table.
  PolicyTable(int n_states, int n_actions);
  PolicyTable(int n_states, int n_actions, std::vector<double> probs);

  int n_states() const noexcept { return n_states_; }
  int n_actions() const noexcept { return n_actions_; }

  double operator()(int s, int a) const { return probs_[index(s, a)]; }
  double& operator()(int s, int a) { return probs_[index(s, a)]; }
  std::span<const double> row(int s) const;
  std::span<const double> data() const noexcept { return probs_; }

  int sample_action(int s, Rng& rng) const { return sample_categorical(row(s), rng); }
  /// Highest-probability action, ties to the lowest id.
  int argmax(int s) const;

  /// Throws InputError unless every row is a distribution within `tol`.
  void validate(double tol = 1e-9) const;

 private:
  std::size_t index(int s, int a) const;

  int n_states_ = 0;
  int n_actions_ = 0;
  std::vector<double> probs_;
};

/// Finite MDP <S, A, T, rho0, r, gamma> plus an episode truncation length.
class TabularMdp {
 public:
  TabularMdp() = default;
  TabularMdp(int n_states, int n_actions, std::vector<double> transition, std::vector<double> reward,
             double gamma, std::vector<double> initial_dist, int horizon_cap);

  int n_states() const noexcept { return n_states_; }
  int n_actions() const noexcept { return n_actions_; }
  double gamma() const noexcept { return gamma_; }
  int horizon_cap() const noexcept { return horizon_cap_; }

  double transition(int s, int a, int s2) const {
    return transition_[(static_cast<std::size_t>(s) * n_actions_ + a) * n_states_ + s2];
  }
  std::span<const double> next_state_dist(int s, int a) const;
  double reward(int s, int a) const { return reward_[static_cast<std::size_t>(s) * n_actions_ + a]; }
  std::span<const double> initial_dist() const noexcept { return initial_dist_; }

  /// Every action self-loops with probability 1 and pays nothing: episodes end on arrival.
  bool is_absorbing(int s) const { return absorbing_[static_cast<std::size_t>(s)]; }

  bool valid_state(int s) const noexcept { return s >= 0 && s < n_states_; }
  bool valid_action(int a) const noexcept { return a >= 0 && a < n_actions_; }

  /// Copy with a different discount (occupancy studies at other gammas).
  TabularMdp with_gamma(double gamma) const;

 private:
  int n_states_ = 0;
  int n_actions_ = 0;
  std::vector<double> transition_;
  std::vector<double> reward_;
  double gamma_ = 0.99;
  std::vector<double> initial_dist_;
  int horizon_cap_ = 1;
  std::vector<bool> absorbing_;
};

struct Step {
  int state = 0;
  int action = 0;
  int next_state = 0;
  double reward = 0.0;

  friend bool operator==(const Step&, const Step&) = default;
};

struct ContinuousStep {
  std::vector<double> state;
  std::vector<double> action;
  std::vector<double> next_state;
  double reward = 0.0;

  friend bool operator==(const ContinuousStep&, const ContinuousStep&) = default;
};

template <class StepT>
struct BasicTrajectory {
  std::int64_t id = 0;
  std::vector<StepT> steps;
  double accumulated_return = 0.0;  // undiscounted, cached
  int collection_index = -1;
  std::optional<std::string> policy_tag;

  /// Horizon index h (steps are indexed 0..h).
  std::size_t horizon() const { return steps.empty() ? 0 : steps.size() - 1; }

  friend bool operator==(const BasicTrajectory&, const BasicTrajectory&) = default;
};

using Trajectory = BasicTrajectory<Step>;
using ContinuousTrajectory = BasicTrajectory<ContinuousStep>;

/// Builds a trajectory and caches its return; rejects empty or unchained steps.
Trajectory make_trajectory(std::int64_t id, std::vector<Step> steps, int collection_index = -1);
ContinuousTrajectory make_trajectory(std::int64_t id, std::vector<ContinuousStep> steps,
                                     int collection_index = -1);

/// Checks non-emptiness, chaining and the cached return (within 1e-9).
void validate_trajectory(const Trajectory& traj);

struct Dataset {
  std::vector<Trajectory> trajectories;
  std::string source_mdp_id;

  std::size_t size() const noexcept { return trajectories.size(); }
  bool empty() const noexcept { return trajectories.empty(); }
  /// Number of stored (s, a) pairs; the |D| of the bound computations.
  std::size_t n_pairs() const;
  /// Unique ids, valid trajectories, and (when n_states > 0) ids in range.
  void validate(int n_states = 0, int n_actions = 0) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct OccupancyTable {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> rho_sa;  // [s][a], row-major
  std::vector<double> rho_s;
  bool normalized = false;

  double sa(int s, int a) const { return rho_sa[static_cast<std::size_t>(s) * n_actions + a]; }
  /// Normalized copy (multiplies by 1 - gamma when needed).
  OccupancyTable normalized_view(double gamma) const;
};

/// Sum_t gamma^t r_t. gamma == 1 gives the accumulated return.
double trajectory_return(const Trajectory& traj, double gamma);

/// Count-ratio estimate pi_hat(a|s); unvisited states get the uniform row.
PolicyTable empirical_behavior_policy(const Dataset& data, int n_states, int n_actions);

/// Per-state visit counts over all stored steps.
std::vector<std::size_t> state_visit_counts(const Dataset& data, int n_states);

/// Solves d = rho0 + gamma P_pi^T d, then rho(s,a) = pi(a|s) d(s). Normalized
/// tables are scaled by (1 - gamma).
OccupancyTable occupancy_measure(const TabularMdp& mdp, const PolicyTable& policy, bool normalized);

/// 1/2 sum |p - q| after defensive renormalization of each side.
double tv_distance(std::span<const double> p, std::span<const double> q);

/// Exact discounted state values V_pi (infinite horizon).
std::vector<double> policy_evaluation(const TabularMdp& mdp, const PolicyTable& policy);
/// Discounted return from rho0: sum_s rho0(s) V_pi(s).
double discounted_value(const TabularMdp& mdp, const PolicyTable& policy);

/// Expected undiscounted episode return under the rollout protocol (truncate at
/// horizon_cap, stop on absorbing states), by backward induction.
double expected_episode_return(const TabularMdp& mdp, const PolicyTable& policy);

struct ValueIterationResult {
  std::vector<double> values;
  std::vector<double> q;  // [s][a]
  std::vector<int> greedy;
  int iterations = 0;
};
/// Discounted value iteration to a sup-norm residual of `tol`.
ValueIterationResult value_iteration(const TabularMdp& mdp, double tol = 1e-10, int max_iter = 100000);

/// Deterministic table that plays `actions[s]`.
PolicyTable deterministic_policy(int n_actions, std::span<const int> actions);

/// Outcome of the return-based partial order between two policies.
struct PolicyComparison {
  double mean1 = 0.0, std1 = 0.0;
  double mean2 = 0.0, std2 = 0.0;
  bool first_le_second = false;   // pi1 <= pi2
  bool second_le_first = false;   // pi2 <= pi1
};

/// Estimates both policies' mean episode returns over `n_eval` seeded
/// rollouts each and orders them by those estimates.
PolicyComparison compare_policies(const TabularMdp& mdp, const PolicyTable& pi1, const PolicyTable& pi2,
                                  int n_eval, std::uint64_t seed);

}  // namespace coil
