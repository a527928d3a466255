#pragma once
// Data-parallel hot loops. Each kernel has an OpenMP version and a serial
// reference in kernels::serial; both produce bitwise-identical results because
// every work item owns its RNG stream and writes its own output slot.

#include <cstdint>
#include <span>
#include <vector>

#include "coil/envs.hpp"
#include "coil/mdp.hpp"
#include "coil/policy.hpp"

namespace coil::kernels {

/// Undiscounted returns of n episodes; episode i draws from derive_seed(seed, i).
std::vector<double> evaluate_returns(const TabularMdp& mdp, const PolicyTable& policy, int n, std::uint64_t seed);
std::vector<double> evaluate_returns(const PointMass1d& env, const LinearGaussianPolicy& policy, int n,
                                     std::uint64_t seed);

/// Criterion score of every trajectory in the pool.
std::vector<double> score_pool(const TabularSoftmaxPolicy& policy, std::span<const Trajectory> pool, double beta);
std::vector<double> score_pool(const LinearGaussianPolicy& policy, std::span<const ContinuousTrajectory> pool,
                               double beta);

/// Worker count used by the parallel kernels (OpenMP max threads, 1 without OpenMP).
int max_threads();
/// Caps the worker count; n < 1 restores the default.
void set_max_threads(int n);

namespace serial {
std::vector<double> evaluate_returns(const TabularMdp& mdp, const PolicyTable& policy, int n, std::uint64_t seed);
std::vector<double> evaluate_returns(const PointMass1d& env, const LinearGaussianPolicy& policy, int n,
                                     std::uint64_t seed);
std::vector<double> score_pool(const TabularSoftmaxPolicy& policy, std::span<const Trajectory> pool, double beta);
std::vector<double> score_pool(const LinearGaussianPolicy& policy, std::span<const ContinuousTrajectory> pool,
                               double beta);
}  // namespace serial

}  // namespace coil::kernels
