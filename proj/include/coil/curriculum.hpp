#pragma once
// The curriculum loop: criterion scoring, neighbor selection, BC on the
// selected trajectories, the moving-average return filter and pool filtering.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coil/bc.hpp"
#include "coil/envs.hpp"
#include "coil/policy.hpp"

namespace coil {

/// Orientation of the moving-average coefficients.
///   appendix: V' = alpha V + (1 - alpha) min R   (alpha = 1 freezes V)
///   eq9:      V' = (1 - alpha) V + alpha min R
enum class FilterConvention { appendix, eq9 };

std::string to_string(FilterConvention c);
FilterConvention parse_filter_convention(const std::string& name);

struct CoilConfig {
  int n_select = 2;             // N
  double alpha = 0.85;
  int grad_steps_per_traj = 100;  // L
  int batch_size = 256;           // B
  double eta = 0.1;
  OptimizerKind optimizer = OptimizerKind::sgd;
  double beta = 0.05;
  int pretrain_steps = 0;  // T
  bool single_policy_pretrain = false;
  FilterConvention convention = FilterConvention::appendix;
  int eval_episodes = 20;
  std::uint64_t seed = 0;

  void validate() const;
  BcParams bc_params() const { return {eta, batch_size, optimizer}; }
  std::map<std::string, std::string> to_key_values() const;
  void set(const std::string& key, const std::string& value);
};

/// Sorts `probs` ascending in place and returns the element at floor(beta * h),
/// h = probs.size() - 1.
double criterion_from_probs(std::vector<double>& probs, double beta);

double trajectory_criterion(const TabularSoftmaxPolicy& policy, const Trajectory& traj, double beta);
double trajectory_criterion(const LinearGaussianPolicy& policy, const ContinuousTrajectory& traj, double beta);

/// Fraction of steps with pi(a|s) >= eps_c is at least 1 - beta.
bool check_neighboring_condition(const TabularSoftmaxPolicy& policy, const Trajectory& traj, double beta,
                                 double eps_c);
bool check_neighboring_condition(const LinearGaussianPolicy& policy, const ContinuousTrajectory& traj, double beta,
                                 double eps_c);
/// Same test on raw step probabilities.
bool neighboring_condition_from_probs(std::span<const double> probs, double beta, double eps_c);

template <class Traj>
struct Selection {
  std::vector<Traj> selected;
  std::vector<Traj> remaining;
};

/// min(N, |pool|) highest-criterion trajectories, ties to the lower id. Throws
/// PoolExhausted on an empty pool.
Selection<Trajectory> select_curriculum(std::vector<Trajectory> pool, const TabularSoftmaxPolicy& policy,
                                        const CoilConfig& cfg);
Selection<ContinuousTrajectory> select_curriculum(std::vector<ContinuousTrajectory> pool,
                                                  const LinearGaussianPolicy& policy, const CoilConfig& cfg);
/// Selection from precomputed scores (indices into the pool, in pick order).
std::vector<std::size_t> top_n_by_score(std::span<const double> scores, std::span<const std::int64_t> ids,
                                        std::size_t n);

double update_return_filter(double v, std::span<const double> selected_returns, double alpha,
                            FilterConvention convention = FilterConvention::appendix);

/// Keeps trajectories with accumulated_return >= v.
template <class Traj>
std::vector<Traj> filter_pool(std::vector<Traj> pool, double v) {
  std::erase_if(pool, [v](const Traj& t) { return !(t.accumulated_return >= v); });
  return pool;
}

struct CurriculumRecord {
  int curriculum = 0;
  std::int64_t grad_steps = 0;  // cumulative
  std::vector<std::int64_t> selected_ids;
  std::vector<int> selected_collection_indices;
  double min_sel_return = 0.0;
  double mean_sel_return = 0.0;
  double filter_v = 0.0;
  std::size_t pool_after = 0;
  double eval_return_mean = 0.0;
  double eval_return_std = 0.0;
};

struct TrainingLog {
  std::optional<std::string> baseline_kind;  // set for baseline runs
  std::vector<CurriculumRecord> records;

  void write_csv(std::ostream& out) const;
  /// Accepts both column layouts. Throws ParseError naming the bad line.
  static TrainingLog read_csv(std::istream& in);
};

template <class Policy>
struct TrainResult {
  Policy policy;
  TrainingLog log;
  bool diverged = false;
};

/// The full curriculum loop. Evaluation after every curriculum uses
/// cfg.eval_episodes rollouts with a fixed stream so curves share noise.
TrainResult<TabularSoftmaxPolicy> coil_train(const Dataset& data, const TabularMdp& env,
                                             TabularSoftmaxPolicy policy_init, const CoilConfig& cfg);
TrainResult<LinearGaussianPolicy> coil_train(const std::vector<ContinuousTrajectory>& data, const PointMass1d& env,
                                             LinearGaussianPolicy policy_init, const CoilConfig& cfg);

/// Seed of the evaluation stream used in training logs.
inline std::uint64_t eval_seed(std::uint64_t run_seed) { return derive_seed(run_seed, 0xE7A1); }

}  // namespace coil
