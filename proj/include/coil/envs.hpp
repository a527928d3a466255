#pragma once
// Toy environments with exactly computable values, and seeded rollouts.

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "coil/mdp.hpp"
#include "coil/policy.hpp"

namespace coil {

enum class EnvKind { chain, gridworld, pointmass1d };

std::string to_string(EnvKind kind);
EnvKind parse_env_kind(const std::string& name);

struct EnvSpec {
  EnvKind kind = EnvKind::chain;
  // chain
  int n_states = 12;
  double lure_reward = 0.01;
  double goal_reward = 1.0;
  // gridworld
  int width = 5;
  int height = 4;
  bool cliff = true;
  double grid_goal_reward = 10.0;
  double cliff_penalty = -10.0;
  double step_cost = -0.1;
  // shared
  double slip = 0.0;
  int horizon_cap = 40;
  double gamma = 0.99;

  /// Canonical key=value rendering (sorted keys); the hash input.
  std::map<std::string, std::string> to_key_values() const;
  /// Applies the recognized keys (prefix "env." stripped by the caller).
  void set(const std::string& key, const std::string& value);
};

/// FNV-1a over the canonical rendering, as 16 hex digits.
std::string env_hash(const EnvSpec& spec);

namespace chain_action {
inline constexpr int left = 0;
inline constexpr int right = 1;
}  // namespace chain_action

/// Riverswim-style chain. LEFT steps back (staying put at 0, where it pays the
/// lure reward); RIGHT advances with probability 1 - slip and otherwise stays.
/// RIGHT at the last state self-loops and pays goal_reward. Episodes start at 0.
TabularMdp build_chain(int n_states, double slip, int horizon_cap, double gamma = 0.99, double lure_reward = 0.01,
                       double goal_reward = 1.0);

namespace grid_action {
inline constexpr int up = 0;
inline constexpr int right = 1;
inline constexpr int down = 2;
inline constexpr int left = 3;
}  // namespace grid_action

/// width x height grid, cell = row * width + col with row 0 at the top. Start is
/// the bottom-left cell, goal the bottom-right one; with `cliff` the bottom-row
/// cells between them are cliffs. Goal and cliff cells are absorbing. With
/// probability `slip` the intended move is replaced by a uniformly random one.
/// r(s,a) = step_cost + goal_reward * P(enter goal) + cliff_penalty * P(enter cliff).
TabularMdp build_gridworld(int width, int height, bool cliff, int horizon_cap, double slip = 0.0, double gamma = 0.99,
                           double goal_reward = 10.0, double cliff_penalty = -10.0, double step_cost = -0.1);

/// Discrete kinds only.
TabularMdp build_env(const EnvSpec& spec);

/// Point mass on a line: state (x, v), scalar force clipped to [-1, 1].
/// Reward -(x - target)^2 - 0.01 u^2 per step; no absorbing states.
struct PointMass1d {
  double dt = 0.1;
  double target = 1.0;
  int horizon_cap = 50;

  std::vector<double> initial_state() const { return {0.0, 0.0}; }
  /// Returns (next_state, reward).
  std::pair<std::vector<double>, double> step(const std::vector<double>& state, const std::vector<double>& action) const;
};

/// Seeded episode under any policy exposing sample_action(int, Rng&). Stops
/// after the step that enters an absorbing state, or after max_len steps.
template <class Policy>
Trajectory rollout(const TabularMdp& mdp, const Policy& policy, Rng& rng, int max_len, std::int64_t id = 0) {
  if (max_len < 1) throw InputError("max_len must be at least 1");
  std::vector<Step> steps;
  steps.reserve(static_cast<std::size_t>(max_len));
  int s = sample_categorical(mdp.initial_dist(), rng);
  for (int t = 0; t < max_len; ++t) {
    const int a = policy.sample_action(s, rng);
    const int s2 = sample_categorical(mdp.next_state_dist(s, a), rng);
    steps.push_back({s, a, s2, mdp.reward(s, a)});
    s = s2;
    if (mdp.is_absorbing(s)) break;
  }
  return make_trajectory(id, std::move(steps));
}

ContinuousTrajectory rollout(const PointMass1d& env, const LinearGaussianPolicy& policy, Rng& rng, int max_len,
                             std::int64_t id = 0);

}  // namespace coil
