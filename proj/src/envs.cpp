#include "coil/envs.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "coil/textio.hpp"

namespace coil {

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::chain: return "chain";
    case EnvKind::gridworld: return "gridworld";
    case EnvKind::pointmass1d: return "pointmass1d";
  }
  return "unknown";
}

EnvKind parse_env_kind(const std::string& name) {
  if (name == "chain") return EnvKind::chain;
  if (name == "gridworld") return EnvKind::gridworld;
  if (name == "pointmass1d") return EnvKind::pointmass1d;
  throw InputError("unknown env kind '" + name + "' (expected chain, gridworld or pointmass1d)");
}

std::map<std::string, std::string> EnvSpec::to_key_values() const {
  std::map<std::string, std::string> kv;
  kv["kind"] = to_string(kind);
  kv["slip"] = format_real(slip);
  kv["horizon_cap"] = std::to_string(horizon_cap);
  kv["gamma"] = format_real(gamma);
  if (kind == EnvKind::chain) {
    kv["n_states"] = std::to_string(n_states);
    kv["lure_reward"] = format_real(lure_reward);
    kv["goal_reward"] = format_real(goal_reward);
  } else if (kind == EnvKind::gridworld) {
    kv["width"] = std::to_string(width);
    kv["height"] = std::to_string(height);
    kv["cliff"] = cliff ? "true" : "false";
    kv["grid_goal_reward"] = format_real(grid_goal_reward);
    kv["cliff_penalty"] = format_real(cliff_penalty);
    kv["step_cost"] = format_real(step_cost);
  }
  return kv;
}

void EnvSpec::set(const std::string& key, const std::string& value) {
  if (key == "kind") kind = parse_env_kind(value);
  else if (key == "n_states") n_states = parse_int(value, key);
  else if (key == "lure_reward") lure_reward = parse_real(value, key);
  else if (key == "goal_reward") goal_reward = parse_real(value, key);
  else if (key == "width") width = parse_int(value, key);
  else if (key == "height") height = parse_int(value, key);
  else if (key == "cliff") cliff = parse_bool(value, key);
  else if (key == "grid_goal_reward") grid_goal_reward = parse_real(value, key);
  else if (key == "cliff_penalty") cliff_penalty = parse_real(value, key);
  else if (key == "step_cost") step_cost = parse_real(value, key);
  else if (key == "slip") slip = parse_real(value, key);
  else if (key == "horizon_cap") horizon_cap = parse_int(value, key);
  else if (key == "gamma") gamma = parse_real(value, key);
  else throw InputError("unknown env key '" + key + "'");
}

std::string env_hash(const EnvSpec& spec) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : spec.to_key_values()) {
    for (char c : k + "=" + v + ";") {
      h ^= static_cast<unsigned char>(c);
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

TabularMdp build_chain(int n_states, double slip, int horizon_cap, double gamma, double lure_reward,
                       double goal_reward) {
  if (n_states < 3) throw InputError("chain needs at least 3 states");
  if (!(slip >= 0.0 && slip <= 0.5)) throw InputError("chain slip must lie in [0, 0.5]");
  if (horizon_cap < 1) throw InputError("horizon_cap must be positive");
  const int n = n_states, m = 2;
  std::vector<double> t(static_cast<std::size_t>(n) * m * n, 0.0), r(static_cast<std::size_t>(n) * m, 0.0);
  auto at = [&](int s, int a, int s2) -> double& { return t[(static_cast<std::size_t>(s) * m + a) * n + s2]; };
  for (int s = 0; s < n; ++s) {
    at(s, chain_action::left, std::max(s - 1, 0)) = 1.0;
    if (s == n - 1) {
      at(s, chain_action::right, s) = 1.0;
    } else {
      at(s, chain_action::right, s + 1) += 1.0 - slip;
      at(s, chain_action::right, s) += slip;
    }
  }
  r[chain_action::left] = lure_reward;
  r[static_cast<std::size_t>(n - 1) * m + chain_action::right] = goal_reward;
  std::vector<double> rho0(static_cast<std::size_t>(n), 0.0);
  rho0[0] = 1.0;
  return TabularMdp(n, m, std::move(t), std::move(r), gamma, std::move(rho0), horizon_cap);
}

TabularMdp build_gridworld(int width, int height, bool cliff, int horizon_cap, double slip, double gamma,
                           double goal_reward, double cliff_penalty, double step_cost) {
  if (width < 1 || height < 1 || width * height < 2) throw InputError("gridworld needs at least two cells");
  if (width * height > 200) throw InputError("gridworld is limited to 200 cells");
  if (!(slip >= 0.0 && slip <= 1.0)) throw InputError("gridworld slip must lie in [0, 1]");
  if (horizon_cap < 1) throw InputError("horizon_cap must be positive");
  const int n = width * height, m = 4;
  const int start = (height - 1) * width;
  const int goal = height * width - 1;
  std::vector<bool> is_cliff(static_cast<std::size_t>(n), false);
  if (cliff && width > 2)
    for (int c = 1; c < width - 1; ++c) is_cliff[static_cast<std::size_t>(start + c)] = true;
  auto move = [&](int s, int a) {
    int row = s / width, col = s % width;
    if (a == grid_action::up) row = std::max(row - 1, 0);
    if (a == grid_action::down) row = std::min(row + 1, height - 1);
    if (a == grid_action::left) col = std::max(col - 1, 0);
    if (a == grid_action::right) col = std::min(col + 1, width - 1);
    return row * width + col;
  };

  std::vector<double> t(static_cast<std::size_t>(n) * m * n, 0.0), r(static_cast<std::size_t>(n) * m, 0.0);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < m; ++a) {
      double* row = &t[(static_cast<std::size_t>(s) * m + a) * n];
      if (s == goal || is_cliff[static_cast<std::size_t>(s)]) {
        row[s] = 1.0;
        continue;
      }
      row[move(s, a)] += 1.0 - slip;
      for (int b = 0; b < m; ++b) row[move(s, b)] += slip / m;
      double reward = step_cost + goal_reward * row[goal];
      for (int c = 0; c < n; ++c)
        if (is_cliff[static_cast<std::size_t>(c)]) reward += cliff_penalty * row[c];
      r[static_cast<std::size_t>(s) * m + a] = reward;
    }
  std::vector<double> rho0(static_cast<std::size_t>(n), 0.0);
  rho0[static_cast<std::size_t>(start)] = 1.0;
  return TabularMdp(n, m, std::move(t), std::move(r), gamma, std::move(rho0), horizon_cap);
}

TabularMdp build_env(const EnvSpec& spec) {
  switch (spec.kind) {
    case EnvKind::chain:
      return build_chain(spec.n_states, spec.slip, spec.horizon_cap, spec.gamma, spec.lure_reward, spec.goal_reward);
    case EnvKind::gridworld:
      return build_gridworld(spec.width, spec.height, spec.cliff, spec.horizon_cap, spec.slip, spec.gamma,
                             spec.grid_goal_reward, spec.cliff_penalty, spec.step_cost);
    case EnvKind::pointmass1d:
      break;
  }
  throw InputError("pointmass1d is continuous and has no tabular MDP");
}

std::pair<std::vector<double>, double> PointMass1d::step(const std::vector<double>& state,
                                                         const std::vector<double>& action) const {
  if (state.size() != 2 || action.size() != 1) throw InputError("pointmass1d expects 2-d states and 1-d actions");
  const double u = std::clamp(action[0], -1.0, 1.0);
  const double v = state[1] + dt * u;
  const double x = state[0] + dt * v;
  const double reward = -(state[0] - target) * (state[0] - target) - 0.01 * u * u;
  return {{x, v}, reward};
}

ContinuousTrajectory rollout(const PointMass1d& env, const LinearGaussianPolicy& policy, Rng& rng, int max_len,
                             std::int64_t id) {
  if (max_len < 1) throw InputError("max_len must be at least 1");
  std::vector<ContinuousStep> steps;
  steps.reserve(static_cast<std::size_t>(max_len));
  auto s = env.initial_state();
  for (int t = 0; t < max_len; ++t) {
    auto a = policy.sample_action(s, rng);
    auto [s2, r] = env.step(s, a);
    steps.push_back({s, std::move(a), s2, r});
    s = std::move(s2);
  }
  return make_trajectory(id, std::move(steps));
}

}  // namespace coil
