#include "coil/kernels.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "coil/curriculum.hpp"

namespace coil::kernels {

namespace {

double episode_return(const TabularMdp& mdp, const PolicyTable& policy, std::uint64_t seed) {
  Rng rng(seed);
  return rollout(mdp, policy, rng, mdp.horizon_cap()).accumulated_return;
}

double episode_return(const PointMass1d& env, const LinearGaussianPolicy& policy, std::uint64_t seed) {
  Rng rng(seed);
  return rollout(env, policy, rng, env.horizon_cap).accumulated_return;
}

double score(const PolicyTable& table, const Trajectory& traj, double beta, std::vector<double>& scratch) {
  scratch.clear();
  for (const auto& st : traj.steps) scratch.push_back(table(st.state, st.action));
  return criterion_from_probs(scratch, beta);
}

double score(const LinearGaussianPolicy& policy, const ContinuousTrajectory& traj, double beta,
             std::vector<double>& scratch) {
  scratch.clear();
  for (const auto& st : traj.steps) scratch.push_back(policy.density(st.state, st.action));
  return criterion_from_probs(scratch, beta);
}

void check_count(int n) {
  if (n < 1) throw InputError("episode count must be at least 1");
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_max_threads(int n) {
#ifdef _OPENMP
  omp_set_num_threads(n < 1 ? omp_get_num_procs() : n);
#else
  (void)n;
#endif
}

std::vector<double> evaluate_returns(const TabularMdp& mdp, const PolicyTable& policy, int n, std::uint64_t seed) {
  check_count(n);
  std::vector<double> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = episode_return(mdp, policy, derive_seed(seed, static_cast<std::uint64_t>(i)));
  return out;
}

std::vector<double> evaluate_returns(const PointMass1d& env, const LinearGaussianPolicy& policy, int n,
                                     std::uint64_t seed) {
  check_count(n);
  std::vector<double> out(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = episode_return(env, policy, derive_seed(seed, static_cast<std::uint64_t>(i)));
  return out;
}

std::vector<double> score_pool(const TabularSoftmaxPolicy& policy, std::span<const Trajectory> pool, double beta) {
  const PolicyTable table = policy.table();
  std::vector<double> out(pool.size());
  const auto n = static_cast<std::ptrdiff_t>(pool.size());
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] = score(table, pool[static_cast<std::size_t>(i)], beta, scratch);
  }
  return out;
}

std::vector<double> score_pool(const LinearGaussianPolicy& policy, std::span<const ContinuousTrajectory> pool,
                               double beta) {
  std::vector<double> out(pool.size());
  const auto n = static_cast<std::ptrdiff_t>(pool.size());
#pragma omp parallel
  {
    std::vector<double> scratch;
#pragma omp for schedule(dynamic, 8)
    for (std::ptrdiff_t i = 0; i < n; ++i)
      out[static_cast<std::size_t>(i)] = score(policy, pool[static_cast<std::size_t>(i)], beta, scratch);
  }
  return out;
}

namespace serial {

std::vector<double> evaluate_returns(const TabularMdp& mdp, const PolicyTable& policy, int n, std::uint64_t seed) {
  check_count(n);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = episode_return(mdp, policy, derive_seed(seed, static_cast<std::uint64_t>(i)));
  return out;
}

std::vector<double> evaluate_returns(const PointMass1d& env, const LinearGaussianPolicy& policy, int n,
                                     std::uint64_t seed) {
  check_count(n);
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = episode_return(env, policy, derive_seed(seed, static_cast<std::uint64_t>(i)));
  return out;
}

std::vector<double> score_pool(const TabularSoftmaxPolicy& policy, std::span<const Trajectory> pool, double beta) {
  const PolicyTable table = policy.table();
  std::vector<double> out(pool.size()), scratch;
  for (std::size_t i = 0; i < pool.size(); ++i) out[i] = score(table, pool[i], beta, scratch);
  return out;
}

std::vector<double> score_pool(const LinearGaussianPolicy& policy, std::span<const ContinuousTrajectory> pool,
                               double beta) {
  std::vector<double> out(pool.size()), scratch;
  for (std::size_t i = 0; i < pool.size(); ++i) out[i] = score(policy, pool[i], beta, scratch);
  return out;
}

}  // namespace serial

}  // namespace coil::kernels
