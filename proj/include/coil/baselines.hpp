#pragma once
// Comparison strategies built on the same BcTrainer as the curriculum loop.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "coil/curriculum.hpp"

namespace coil {

enum class BaselineKind { bc_topk, return_ordered, buffer_shrinking };

std::string to_string(BaselineKind kind);
BaselineKind parse_baseline_kind(const std::string& name);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::bc_topk;
  double fraction = 1.0;  // bc_topk
  int n_rbc = 2;          // return_ordered: trajectories per stage
  int shrink_pct = 20;    // buffer_shrinking
  int stages = 5;
  // shared with the curriculum loop
  int n_select = 2;  // N, only used to size the default budget
  int grad_steps_per_traj = 100;
  int batch_size = 256;
  double eta = 0.1;
  OptimizerKind optimizer = OptimizerKind::sgd;
  int eval_episodes = 20;
  std::int64_t total_steps = -1;  // -1: matched default (bc_topk, buffer_shrinking) or L per trajectory (return_ordered)
  std::uint64_t seed = 0;

  void validate() const;
  BcParams bc_params() const { return {eta, batch_size, optimizer}; }
  /// ceil(n_traj / N) * L * N: the largest budget the curriculum loop can spend.
  std::int64_t matched_budget(std::size_t n_traj) const;
  std::map<std::string, std::string> to_key_values() const;
  void set(const std::string& key, const std::string& value);
};

/// Plain BC on subset_top_fraction(data, fraction); a log record every L * N steps.
TrainResult<TabularSoftmaxPolicy> bc_topk(const Dataset& data, const TabularMdp& env, TabularSoftmaxPolicy policy_init,
                                          const BaselineConfig& cfg);

/// Stages of n_rbc trajectories in ascending-return order (ties to the lower
/// id), L * n_rbc steps per stage, until every trajectory has been used. A
/// non-negative total_steps replaces L: stages get shares proportional to size.
TrainResult<TabularSoftmaxPolicy> return_ordered_bc(const Dataset& data, const TabularMdp& env,
                                                    TabularSoftmaxPolicy policy_init, const BaselineConfig& cfg);

/// `stages` equal-budget stages; after each one the lowest-return p% of the
/// original count is dropped.
TrainResult<TabularSoftmaxPolicy> buffer_shrinking_bc(const Dataset& data, const TabularMdp& env,
                                                      TabularSoftmaxPolicy policy_init, const BaselineConfig& cfg);

/// Buffer sizes of the shrinking schedule for n trajectories.
std::vector<std::size_t> shrink_schedule(std::size_t n, int shrink_pct, int stages);

TrainResult<TabularSoftmaxPolicy> run_baseline(const Dataset& data, const TabularMdp& env,
                                               TabularSoftmaxPolicy policy_init, const BaselineConfig& cfg);

}  // namespace coil
