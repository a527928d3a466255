#include "coil/mdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "coil/stats.hpp"
#include "coil/kernels.hpp"

namespace coil {

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw InputError(what);
}

}  // namespace

// ---------------------------------------------------------------- PolicyTable

PolicyTable::PolicyTable(int n_states, int n_actions)
    : PolicyTable(n_states, n_actions,
                  std::vector<double>(static_cast<std::size_t>(std::max(n_states, 0)) * std::max(n_actions, 1),
                                      1.0 / std::max(n_actions, 1))) {}

PolicyTable::PolicyTable(int n_states, int n_actions, std::vector<double> probs)
    : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
  require(n_states > 0 && n_actions > 0, "policy table needs positive dimensions");
  require(probs_.size() == static_cast<std::size_t>(n_states) * n_actions, "policy table shape mismatch");
}

std::size_t PolicyTable::index(int s, int a) const {
  if (s < 0 || s >= n_states_ || a < 0 || a >= n_actions_) throw InputError("policy index out of range");
  return static_cast<std::size_t>(s) * n_actions_ + a;
}

std::span<const double> PolicyTable::row(int s) const {
  return std::span<const double>(probs_).subspan(index(s, 0), static_cast<std::size_t>(n_actions_));
}

int PolicyTable::argmax(int s) const {
  auto r = row(s);
  return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
}

void PolicyTable::validate(double tol) const {
  for (int s = 0; s < n_states_; ++s) {
    double sum = 0.0;
    for (double p : row(s)) {
      if (!(p >= 0.0)) throw InputError("policy table has a negative or NaN entry");
      sum += p;
    }
    if (std::abs(sum - 1.0) > tol) throw InputError("policy table row does not sum to 1");
  }
}

PolicyTable deterministic_policy(int n_actions, std::span<const int> actions) {
  PolicyTable table(static_cast<int>(actions.size()), n_actions, std::vector<double>(actions.size() * n_actions, 0.0));
  for (std::size_t s = 0; s < actions.size(); ++s) table(static_cast<int>(s), actions[s]) = 1.0;
  return table;
}

// ----------------------------------------------------------------- TabularMdp

TabularMdp::TabularMdp(int n_states, int n_actions, std::vector<double> transition, std::vector<double> reward,
                       double gamma, std::vector<double> initial_dist, int horizon_cap)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      gamma_(gamma),
      initial_dist_(std::move(initial_dist)),
      horizon_cap_(horizon_cap) {
  require(n_states > 0 && n_actions > 0, "mdp needs positive state and action counts");
  require(transition_.size() == static_cast<std::size_t>(n_states) * n_actions * n_states,
          "transition tensor shape mismatch");
  require(reward_.size() == static_cast<std::size_t>(n_states) * n_actions, "reward table shape mismatch");
  require(initial_dist_.size() == static_cast<std::size_t>(n_states), "initial distribution shape mismatch");
  require(gamma >= 0.0 && gamma < 1.0, "gamma must lie in [0, 1)");
  require(horizon_cap > 0, "horizon_cap must be positive");
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      double sum = 0.0;
      for (double p : next_state_dist(s, a)) {
        require(p >= 0.0, "negative transition probability");
        sum += p;
      }
      require(std::abs(sum - 1.0) <= 1e-12, "transition row does not sum to 1");
    }
  double init_sum = 0.0;
  for (double p : initial_dist_) {
    require(p >= 0.0, "negative initial probability");
    init_sum += p;
  }
  require(std::abs(init_sum - 1.0) <= 1e-12, "initial distribution does not sum to 1");

  absorbing_.assign(static_cast<std::size_t>(n_states), false);
  for (int s = 0; s < n_states; ++s) {
    bool absorbing = true;
    for (int a = 0; a < n_actions && absorbing; ++a)
      absorbing = this->transition(s, a, s) == 1.0 && this->reward(s, a) == 0.0;
    absorbing_[static_cast<std::size_t>(s)] = absorbing;
  }
}

std::span<const double> TabularMdp::next_state_dist(int s, int a) const {
  if (!valid_state(s) || !valid_action(a)) throw InputError("state/action out of range");
  return std::span<const double>(transition_).subspan((static_cast<std::size_t>(s) * n_actions_ + a) * n_states_,
                                                      static_cast<std::size_t>(n_states_));
}

TabularMdp TabularMdp::with_gamma(double gamma) const {
  return TabularMdp(n_states_, n_actions_, transition_, reward_, gamma, initial_dist_, horizon_cap_);
}

// --------------------------------------------------------------- trajectories

namespace {

template <class StepT>
BasicTrajectory<StepT> assemble(std::int64_t id, std::vector<StepT> steps, int collection_index) {
  if (steps.empty()) throw InputError("empty trajectory");
  for (std::size_t t = 0; t + 1 < steps.size(); ++t)
    if (!(steps[t].next_state == steps[t + 1].state)) throw InputError("trajectory steps do not chain");
  BasicTrajectory<StepT> traj;
  traj.id = id;
  traj.collection_index = collection_index;
  traj.accumulated_return = 0.0;
  for (const auto& st : steps) traj.accumulated_return += st.reward;
  traj.steps = std::move(steps);
  return traj;
}

}  // namespace

Trajectory make_trajectory(std::int64_t id, std::vector<Step> steps, int collection_index) {
  return assemble(id, std::move(steps), collection_index);
}

ContinuousTrajectory make_trajectory(std::int64_t id, std::vector<ContinuousStep> steps, int collection_index) {
  return assemble(id, std::move(steps), collection_index);
}

void validate_trajectory(const Trajectory& traj) {
  if (traj.steps.empty()) throw InputError("empty trajectory");
  double sum = 0.0;
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    if (t + 1 < traj.steps.size() && traj.steps[t].next_state != traj.steps[t + 1].state)
      throw InputError("trajectory steps do not chain");
    sum += traj.steps[t].reward;
  }
  if (std::abs(sum - traj.accumulated_return) > 1e-9) throw InputError("cached return does not match rewards");
}

std::size_t Dataset::n_pairs() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.steps.size();
  return n;
}

void Dataset::validate(int n_states, int n_actions) const {
  std::unordered_set<std::int64_t> ids;
  for (const auto& t : trajectories) {
    if (!ids.insert(t.id).second) throw InputError("duplicate trajectory id " + std::to_string(t.id));
    validate_trajectory(t);
    if (n_states > 0)
      for (const auto& st : t.steps)
        if (st.state < 0 || st.state >= n_states || st.next_state < 0 || st.next_state >= n_states ||
            st.action < 0 || st.action >= n_actions)
          throw InputError("step index out of range in trajectory " + std::to_string(t.id));
  }
}

double trajectory_return(const Trajectory& traj, double gamma) {
  if (traj.steps.empty()) throw InputError("empty trajectory");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw InputError("gamma must lie in [0, 1]");
  double total = 0.0;
  double discount = 1.0;
  for (const auto& st : traj.steps) {
    total += discount * st.reward;
    discount *= gamma;
  }
  return total;
}

// ------------------------------------------------------ empirical policy

std::vector<std::size_t> state_visit_counts(const Dataset& data, int n_states) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(n_states), 0);
  for (const auto& t : data.trajectories)
    for (const auto& st : t.steps) {
      if (st.state < 0 || st.state >= n_states) throw InputError("state out of range");
      ++counts[static_cast<std::size_t>(st.state)];
    }
  return counts;
}

PolicyTable empirical_behavior_policy(const Dataset& data, int n_states, int n_actions) {
  if (data.empty() || data.n_pairs() == 0) throw InputError("empty dataset");
  std::vector<double> counts(static_cast<std::size_t>(n_states) * n_actions, 0.0);
  for (const auto& t : data.trajectories)
    for (const auto& st : t.steps) {
      if (st.state < 0 || st.state >= n_states || st.action < 0 || st.action >= n_actions)
        throw InputError("step index out of range");
      counts[static_cast<std::size_t>(st.state) * n_actions + st.action] += 1.0;
    }
  PolicyTable table(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    double row_total = 0.0;
    for (int a = 0; a < n_actions; ++a) row_total += counts[static_cast<std::size_t>(s) * n_actions + a];
    if (row_total == 0.0) continue;  // unvisited: keep the uniform row
    for (int a = 0; a < n_actions; ++a) table(s, a) = counts[static_cast<std::size_t>(s) * n_actions + a] / row_total;
  }
  return table;
}

// ------------------------------------------------------------- occupancy

namespace {

Eigen::MatrixXd state_transition_matrix(const TabularMdp& mdp, const PolicyTable& policy) {
  const int n = mdp.n_states();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double pa = policy(s, a);
      if (pa == 0.0) continue;
      auto next = mdp.next_state_dist(s, a);
      for (int s2 = 0; s2 < n; ++s2) p(s, s2) += pa * next[static_cast<std::size_t>(s2)];
    }
  return p;
}

void check_policy_shape(const TabularMdp& mdp, const PolicyTable& policy) {
  if (policy.n_states() != mdp.n_states() || policy.n_actions() != mdp.n_actions())
    throw InputError("policy shape does not match the mdp");
}

}  // namespace

OccupancyTable occupancy_measure(const TabularMdp& mdp, const PolicyTable& policy, bool normalized) {
  check_policy_shape(mdp, policy);
  const int n = mdp.n_states();
  const Eigen::MatrixXd p = state_transition_matrix(mdp, policy);
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * p.transpose();
  Eigen::VectorXd rho0(n);
  for (int s = 0; s < n; ++s) rho0(s) = mdp.initial_dist()[static_cast<std::size_t>(s)];
  const Eigen::VectorXd d = system.partialPivLu().solve(rho0);
  if (!d.allFinite()) throw std::runtime_error("occupancy system is singular");

  OccupancyTable occ;
  occ.n_states = n;
  occ.n_actions = mdp.n_actions();
  occ.normalized = normalized;
  occ.rho_s.resize(static_cast<std::size_t>(n));
  occ.rho_sa.resize(static_cast<std::size_t>(n) * mdp.n_actions());
  const double scale = normalized ? 1.0 - mdp.gamma() : 1.0;
  for (int s = 0; s < n; ++s) {
    double row = 0.0;
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const double v = scale * policy(s, a) * d(s);
      occ.rho_sa[static_cast<std::size_t>(s) * mdp.n_actions() + a] = v;
      row += v;
    }
    occ.rho_s[static_cast<std::size_t>(s)] = row;
  }
  return occ;
}

OccupancyTable OccupancyTable::normalized_view(double gamma) const {
  OccupancyTable out = *this;
  if (normalized) return out;
  for (double& v : out.rho_sa) v *= 1.0 - gamma;
  for (double& v : out.rho_s) v *= 1.0 - gamma;
  out.normalized = true;
  return out;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InputError("tv_distance: shape mismatch");
  double sp = 0.0, sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    sp += p[i];
    sq += q[i];
  }
  if (!(sp > 0.0) || !(sq > 0.0)) throw InputError("tv_distance: empty distribution");
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] / sp - q[i] / sq);
  return 0.5 * total;
}

// ----------------------------------------------------------- evaluation

std::vector<double> policy_evaluation(const TabularMdp& mdp, const PolicyTable& policy) {
  check_policy_shape(mdp, policy);
  const int n = mdp.n_states();
  const Eigen::MatrixXd p = state_transition_matrix(mdp, policy);
  Eigen::VectorXd r(n);
  for (int s = 0; s < n; ++s) {
    double v = 0.0;
    for (int a = 0; a < mdp.n_actions(); ++a) v += policy(s, a) * mdp.reward(s, a);
    r(s) = v;
  }
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - mdp.gamma() * p;
  const Eigen::VectorXd v = system.partialPivLu().solve(r);
  return {v.data(), v.data() + n};
}

double discounted_value(const TabularMdp& mdp, const PolicyTable& policy) {
  const auto v = policy_evaluation(mdp, policy);
  double total = 0.0;
  for (int s = 0; s < mdp.n_states(); ++s) total += mdp.initial_dist()[static_cast<std::size_t>(s)] * v[static_cast<std::size_t>(s)];
  return total;
}

double expected_episode_return(const TabularMdp& mdp, const PolicyTable& policy) {
  check_policy_shape(mdp, policy);
  const int n = mdp.n_states();
  // to_go[s] = expected return of the remaining k steps when standing in s.
  std::vector<double> to_go(static_cast<std::size_t>(n), 0.0), next(static_cast<std::size_t>(n));
  for (int k = 1; k <= mdp.horizon_cap(); ++k) {
    for (int s = 0; s < n; ++s) {
      if (mdp.is_absorbing(s)) {
        next[static_cast<std::size_t>(s)] = 0.0;
        continue;
      }
      double v = 0.0;
      for (int a = 0; a < mdp.n_actions(); ++a) {
        const double pa = policy(s, a);
        if (pa == 0.0) continue;
        double cont = 0.0;
        auto dist = mdp.next_state_dist(s, a);
        for (int s2 = 0; s2 < n; ++s2) cont += dist[static_cast<std::size_t>(s2)] * to_go[static_cast<std::size_t>(s2)];
        v += pa * (mdp.reward(s, a) + cont);
      }
      next[static_cast<std::size_t>(s)] = v;
    }
    std::swap(to_go, next);
  }
  double total = 0.0;
  for (int s = 0; s < n; ++s) total += mdp.initial_dist()[static_cast<std::size_t>(s)] * to_go[static_cast<std::size_t>(s)];
  return total;
}

ValueIterationResult value_iteration(const TabularMdp& mdp, double tol, int max_iter) {
  const int n = mdp.n_states(), m = mdp.n_actions();
  ValueIterationResult out;
  out.values.assign(static_cast<std::size_t>(n), 0.0);
  out.q.assign(static_cast<std::size_t>(n) * m, 0.0);
  for (out.iterations = 0; out.iterations < max_iter; ++out.iterations) {
    double residual = 0.0;
    std::vector<double> fresh(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < m; ++a) {
        double q = mdp.reward(s, a);
        auto dist = mdp.next_state_dist(s, a);
        for (int s2 = 0; s2 < n; ++s2) q += mdp.gamma() * dist[static_cast<std::size_t>(s2)] * out.values[static_cast<std::size_t>(s2)];
        out.q[static_cast<std::size_t>(s) * m + a] = q;
        best = std::max(best, q);
      }
      fresh[static_cast<std::size_t>(s)] = best;
      residual = std::max(residual, std::abs(best - out.values[static_cast<std::size_t>(s)]));
    }
    out.values = std::move(fresh);
    if (residual < tol) break;
  }
  out.greedy.resize(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    int best = 0;
    for (int a = 1; a < m; ++a)
      if (out.q[static_cast<std::size_t>(s) * m + a] > out.q[static_cast<std::size_t>(s) * m + best] + 1e-12) best = a;
    out.greedy[static_cast<std::size_t>(s)] = best;
  }
  return out;
}

PolicyComparison compare_policies(const TabularMdp& mdp, const PolicyTable& pi1, const PolicyTable& pi2, int n_eval,
                                  std::uint64_t seed) {
  if (n_eval < 1) throw InputError("n_eval must be at least 1");
  const auto r1 = kernels::evaluate_returns(mdp, pi1, n_eval, derive_seed(seed, 1));
  const auto r2 = kernels::evaluate_returns(mdp, pi2, n_eval, derive_seed(seed, 2));
  PolicyComparison cmp;
  const auto s1 = summarize(r1);
  const auto s2 = summarize(r2);
  cmp.mean1 = s1.mean;
  cmp.std1 = s1.stddev;
  cmp.mean2 = s2.mean;
  cmp.std2 = s2.stddev;
  cmp.first_le_second = cmp.mean1 <= cmp.mean2;
  cmp.second_le_first = cmp.mean2 <= cmp.mean1;
  return cmp;
}

}  // namespace coil
