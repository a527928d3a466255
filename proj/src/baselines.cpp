#include "coil/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coil/datagen.hpp"
#include "coil/kernels.hpp"
#include "coil/stats.hpp"
#include "coil/textio.hpp"

namespace coil {

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::bc_topk: return "bc_topk";
    case BaselineKind::return_ordered: return "return_ordered";
    case BaselineKind::buffer_shrinking: return "buffer_shrinking";
  }
  return "unknown";
}

BaselineKind parse_baseline_kind(const std::string& name) {
  if (name == "bc_topk" || name == "bc") return BaselineKind::bc_topk;
  if (name == "return_ordered" || name == "rbc") return BaselineKind::return_ordered;
  if (name == "buffer_shrinking" || name == "bsbc") return BaselineKind::buffer_shrinking;
  throw InputError("unknown baseline '" + name + "'");
}

void BaselineConfig::validate() const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("fraction must lie in (0, 1]");
  if (n_rbc < 1) throw InputError("n_rbc must be at least 1");
  if (shrink_pct < 1 || stages < 1 || shrink_pct * stages > 100) throw InputError("need shrink_pct * stages <= 100");
  if (n_select < 1) throw InputError("n_select must be at least 1");
  if (grad_steps_per_traj < 0) throw InputError("grad_steps_per_traj must be non-negative");
  if (eval_episodes < 1) throw InputError("eval_episodes must be at least 1");
  if (total_steps < -1) throw InputError("total_steps must be -1 or non-negative");
  bc_params().validate();
}

std::int64_t BaselineConfig::matched_budget(std::size_t n_traj) const {
  const auto n = static_cast<std::int64_t>(n_select);
  const auto curricula = (static_cast<std::int64_t>(n_traj) + n - 1) / n;
  return curricula * grad_steps_per_traj * n;
}

std::map<std::string, std::string> BaselineConfig::to_key_values() const {
  return {{"kind", to_string(kind)},
          {"fraction", format_real(fraction)},
          {"n_rbc", std::to_string(n_rbc)},
          {"shrink_pct", std::to_string(shrink_pct)},
          {"stages", std::to_string(stages)},
          {"n_select", std::to_string(n_select)},
          {"grad_steps_per_traj", std::to_string(grad_steps_per_traj)},
          {"batch_size", std::to_string(batch_size)},
          {"eta", format_real(eta)},
          {"optimizer", optimizer == OptimizerKind::sgd ? "sgd" : "adam"},
          {"eval_episodes", std::to_string(eval_episodes)},
          {"total_steps", std::to_string(total_steps)}};
}

void BaselineConfig::set(const std::string& key, const std::string& value) {
  if (key == "kind") kind = parse_baseline_kind(value);
  else if (key == "fraction") fraction = parse_real(value, key);
  else if (key == "n_rbc") n_rbc = parse_int(value, key);
  else if (key == "shrink_pct") shrink_pct = parse_int(value, key);
  else if (key == "stages") stages = parse_int(value, key);
  else if (key == "n_select") n_select = parse_int(value, key);
  else if (key == "grad_steps_per_traj") grad_steps_per_traj = parse_int(value, key);
  else if (key == "batch_size") batch_size = parse_int(value, key);
  else if (key == "eta") eta = parse_real(value, key);
  else if (key == "optimizer") {
    if (value == "sgd") optimizer = OptimizerKind::sgd;
    else if (value == "adam") optimizer = OptimizerKind::adam;
    else throw InputError("unknown optimizer '" + value + "'");
  } else if (key == "eval_episodes") eval_episodes = parse_int(value, key);
  else if (key == "total_steps") total_steps = parse_int64(value, key);
  else throw InputError("unknown baseline key '" + key + "'");
}

namespace {

struct Run {
  TrainResult<TabularSoftmaxPolicy> result;
  BcTrainer<TabularSoftmaxPolicy> trainer;
  const TabularMdp& env;
  int eval_episodes;
  std::uint64_t eval_stream;

  Run(TabularSoftmaxPolicy init, const BaselineConfig& cfg, const TabularMdp& e)
      : result{std::move(init), {}, false},
        trainer(cfg.bc_params(), derive_seed(cfg.seed, 1)),
        env(e),
        eval_episodes(cfg.eval_episodes),
        eval_stream(eval_seed(cfg.seed)) {
    result.log.baseline_kind = to_string(cfg.kind);
  }

  void record(int stage, std::span<const Trajectory* const> used, std::size_t pool_after, bool list_ids) {
    CurriculumRecord rec;
    rec.curriculum = stage;
    rec.grad_steps = trainer.grad_steps();
    std::vector<double> returns;
    for (const Trajectory* t : used) {
      if (list_ids) {
        rec.selected_ids.push_back(t->id);
        rec.selected_collection_indices.push_back(t->collection_index);
      }
      returns.push_back(t->accumulated_return);
    }
    const auto s = summarize(returns);
    rec.min_sel_return = s.min;
    rec.mean_sel_return = s.mean;
    rec.filter_v = 0.0;
    rec.pool_after = pool_after;
    const auto eval = summarize(kernels::evaluate_returns(env, result.policy.table(), eval_episodes, eval_stream));
    rec.eval_return_mean = eval.mean;
    rec.eval_return_std = eval.stddev;
    result.log.records.push_back(std::move(rec));
  }
};

void check_inputs(const Dataset& data, const BaselineConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw InputError("empty dataset");
}

}  // namespace

TrainResult<TabularSoftmaxPolicy> bc_topk(const Dataset& data, const TabularMdp& env, TabularSoftmaxPolicy policy_init,
                                          const BaselineConfig& cfg) {
  check_inputs(data, cfg);
  const Dataset subset = subset_top_fraction(data, cfg.fraction);
  std::vector<const Trajectory*> used;
  for (const auto& t : subset.trajectories) used.push_back(&t);
  const std::int64_t budget = cfg.total_steps >= 0 ? cfg.total_steps : cfg.matched_budget(data.size());
  const std::int64_t chunk = std::max<std::int64_t>(1, static_cast<std::int64_t>(cfg.grad_steps_per_traj) * cfg.n_select);
  Run run(std::move(policy_init), cfg, env);
  try {
    std::int64_t done = 0;
    int stage = 0;
    while (done < budget) {
      const auto n = std::min(chunk, budget - done);
      run.trainer.train(run.result.policy, std::span<const Trajectory* const>(used), n);
      done += n;
      run.record(stage++, used, subset.size(), false);
    }
    if (budget == 0) run.record(0, used, subset.size(), false);
  } catch (const DivergenceError&) {
    run.result.diverged = true;
  }
  return std::move(run.result);
}

TrainResult<TabularSoftmaxPolicy> return_ordered_bc(const Dataset& data, const TabularMdp& env,
                                                    TabularSoftmaxPolicy policy_init, const BaselineConfig& cfg) {
  check_inputs(data, cfg);
  std::vector<const Trajectory*> order;
  for (const auto& t : data.trajectories) order.push_back(&t);
  std::sort(order.begin(), order.end(), [](const Trajectory* a, const Trajectory* b) {
    if (a->accumulated_return != b->accumulated_return) return a->accumulated_return < b->accumulated_return;
    return a->id < b->id;
  });
  Run run(std::move(policy_init), cfg, env);
  try {
    // With an explicit budget, stage k ends at budget * used_k / N_traj.
    const auto n_traj = static_cast<std::int64_t>(order.size());
    std::int64_t done = 0;
    int stage = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.n_rbc)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.n_rbc));
      std::span<const Trajectory* const> stage_set(order.data() + start, end - start);
      const std::int64_t steps =
          cfg.total_steps >= 0
              ? cfg.total_steps * static_cast<std::int64_t>(end) / n_traj - done
              : static_cast<std::int64_t>(cfg.grad_steps_per_traj) * static_cast<std::int64_t>(stage_set.size());
      run.trainer.train(run.result.policy, stage_set, steps);
      done += steps;
      run.record(stage++, stage_set, order.size() - end, true);
    }
  } catch (const DivergenceError&) {
    run.result.diverged = true;
  }
  return std::move(run.result);
}

std::vector<std::size_t> shrink_schedule(std::size_t n, int shrink_pct, int stages) {
  if (n == 0) throw InputError("empty dataset");
  if (shrink_pct < 1 || stages < 1 || shrink_pct * stages > 100) throw InputError("need shrink_pct * stages <= 100");
  std::vector<std::size_t> sizes;
  for (int k = 0; k < stages; ++k) {
    const auto dropped = static_cast<std::size_t>(std::llround(static_cast<double>(k) * shrink_pct * static_cast<double>(n) / 100.0));
    sizes.push_back(std::max<std::size_t>(1, n - std::min(dropped, n)));
  }
  return sizes;
}

TrainResult<TabularSoftmaxPolicy> buffer_shrinking_bc(const Dataset& data, const TabularMdp& env,
                                                      TabularSoftmaxPolicy policy_init, const BaselineConfig& cfg) {
  check_inputs(data, cfg);
  const auto ranked = rank_by_return(data);  // best first
  const auto sizes = shrink_schedule(data.size(), cfg.shrink_pct, cfg.stages);
  const std::int64_t budget = cfg.total_steps >= 0 ? cfg.total_steps : cfg.matched_budget(data.size());
  Run run(std::move(policy_init), cfg, env);
  try {
    std::int64_t done = 0;
    for (int k = 0; k < cfg.stages; ++k) {
      std::vector<const Trajectory*> buffer;
      for (std::size_t i = 0; i < sizes[static_cast<std::size_t>(k)]; ++i) buffer.push_back(&data.trajectories[ranked[i]]);
      const std::int64_t target = budget * (k + 1) / cfg.stages;
      run.trainer.train(run.result.policy, std::span<const Trajectory* const>(buffer), target - done);
      done = target;
      const std::size_t next = k + 1 < cfg.stages ? sizes[static_cast<std::size_t>(k + 1)] : 0;
      run.record(k, buffer, next, false);
    }
  } catch (const DivergenceError&) {
    run.result.diverged = true;
  }
  return std::move(run.result);
}

TrainResult<TabularSoftmaxPolicy> run_baseline(const Dataset& data, const TabularMdp& env,
                                               TabularSoftmaxPolicy policy_init, const BaselineConfig& cfg) {
  switch (cfg.kind) {
    case BaselineKind::bc_topk: return bc_topk(data, env, std::move(policy_init), cfg);
    case BaselineKind::return_ordered: return return_ordered_bc(data, env, std::move(policy_init), cfg);
    case BaselineKind::buffer_shrinking: return buffer_shrinking_bc(data, env, std::move(policy_init), cfg);
  }
  throw InputError("unknown baseline");
}

}  // namespace coil
