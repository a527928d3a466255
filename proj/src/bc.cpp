#include "coil/bc.hpp"

#include <limits>

namespace coil {

void BcParams::validate() const {
  if (!(eta > 0.0)) throw InputError("eta must be positive");
  if (batch_size < 1) throw InputError("batch_size must be at least 1");
}

template <class Policy>
BcTrainer<Policy>::BcTrainer(BcParams params, std::uint64_t seed)
    : params_(params), rng_(seed), optimizer_(OptimizerConfig{params.optimizer, params.eta}) {
  params_.validate();
}

template <class Policy>
double BcTrainer<Policy>::train(Policy& policy, std::span<const Traj> trajectories, std::int64_t n_steps) {
  std::vector<const Traj*> ptrs;
  ptrs.reserve(trajectories.size());
  for (const auto& t : trajectories) ptrs.push_back(&t);
  return train(policy, std::span<const Traj* const>(ptrs), n_steps);
}

template <class Policy>
double BcTrainer<Policy>::train(Policy& policy, std::span<const Traj* const> trajectories, std::int64_t n_steps) {
  BatchFor<Policy> pool;
  for (const Traj* t : trajectories)
    for (const auto& st : t->steps) pool.pairs.emplace_back(st.state, st.action);
  return run(policy, pool, n_steps);
}

template <class Policy>
double BcTrainer<Policy>::run(Policy& policy, const BatchFor<Policy>& pool, std::int64_t n_steps) {
  if (n_steps < 0) throw InputError("negative step count");
  if (n_steps == 0) return std::numeric_limits<double>::quiet_NaN();
  if (pool.pairs.empty()) throw InputError("no state-action pairs to imitate");
  BatchFor<Policy> batch;
  batch.pairs.resize(static_cast<std::size_t>(params_.batch_size));
  double loss = 0.0;
  for (std::int64_t k = 0; k < n_steps; ++k) {
    for (auto& slot : batch.pairs) slot = pool.pairs[uniform_index(rng_, pool.pairs.size())];
    loss = bc_gradient_step(policy, batch, optimizer_);
    ++grad_steps_;
  }
  return loss;
}

template class BcTrainer<TabularSoftmaxPolicy>;
template class BcTrainer<LinearGaussianPolicy>;

}  // namespace coil
