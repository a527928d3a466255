#pragma once
// The one behavior-cloning update loop shared by COIL and every baseline.

#include <cstdint>
#include <span>
#include <type_traits>
#include <vector>

#include "coil/policy.hpp"

namespace coil {

struct BcParams {
  double eta = 0.1;
  int batch_size = 256;
  OptimizerKind optimizer = OptimizerKind::sgd;

  void validate() const;
};

template <class Policy>
using TrajectoryFor =
    std::conditional_t<std::is_same_v<Policy, TabularSoftmaxPolicy>, Trajectory, ContinuousTrajectory>;

template <class Policy>
using BatchFor = std::conditional_t<std::is_same_v<Policy, TabularSoftmaxPolicy>, DiscreteBatch, ContinuousBatch>;

/// Owns the sampling stream, the optimizer state and the gradient-step
/// counter for one training run.
template <class Policy>
class BcTrainer {
 public:
  using Traj = TrajectoryFor<Policy>;

  BcTrainer(BcParams params, std::uint64_t seed);

  /// `n_steps` updates on batches drawn uniformly with replacement from the
  /// union of the given trajectories' steps. Returns the last pre-step loss
  /// (NaN when n_steps == 0).
  double train(Policy& policy, std::span<const Traj> trajectories, std::int64_t n_steps);
  double train(Policy& policy, std::span<const Traj* const> trajectories, std::int64_t n_steps);

  std::int64_t grad_steps() const noexcept { return grad_steps_; }
  const BcParams& params() const noexcept { return params_; }

 private:
  double run(Policy& policy, const BatchFor<Policy>& pool, std::int64_t n_steps);

  BcParams params_;
  Rng rng_;
  Optimizer optimizer_;
  std::int64_t grad_steps_ = 0;
};

extern template class BcTrainer<TabularSoftmaxPolicy>;
extern template class BcTrainer<LinearGaussianPolicy>;

}  // namespace coil
