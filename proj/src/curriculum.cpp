#include "coil/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "coil/kernels.hpp"
#include "coil/stats.hpp"
#include "coil/textio.hpp"

namespace coil {

std::string to_string(FilterConvention c) { return c == FilterConvention::appendix ? "appendix" : "eq9"; }

FilterConvention parse_filter_convention(const std::string& name) {
  if (name == "appendix") return FilterConvention::appendix;
  if (name == "eq9") return FilterConvention::eq9;
  throw InputError("unknown filter convention '" + name + "' (expected appendix or eq9)");
}

namespace {

std::string optimizer_name(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  throw InputError("unknown optimizer '" + s + "' (expected sgd or adam)");
}

}  // namespace

void CoilConfig::validate() const {
  if (n_select < 1) throw InputError("n_select must be at least 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in [0, 1]");
  if (grad_steps_per_traj < 0) throw InputError("grad_steps_per_traj must be non-negative");
  if (!(beta >= 0.0 && beta < 1.0)) throw InputError("beta must lie in [0, 1)");
  if (pretrain_steps < 0) throw InputError("pretrain_steps must be non-negative");
  if (eval_episodes < 1) throw InputError("eval_episodes must be at least 1");
  bc_params().validate();
}

std::map<std::string, std::string> CoilConfig::to_key_values() const {
  return {{"n_select", std::to_string(n_select)},
          {"alpha", format_real(alpha)},
          {"grad_steps_per_traj", std::to_string(grad_steps_per_traj)},
          {"batch_size", std::to_string(batch_size)},
          {"eta", format_real(eta)},
          {"optimizer", optimizer_name(optimizer)},
          {"beta", format_real(beta)},
          {"pretrain_steps", std::to_string(pretrain_steps)},
          {"single_policy_pretrain", single_policy_pretrain ? "true" : "false"},
          {"filter_convention", to_string(convention)},
          {"eval_episodes", std::to_string(eval_episodes)}};
}

void CoilConfig::set(const std::string& key, const std::string& value) {
  if (key == "n_select") n_select = parse_int(value, key);
  else if (key == "alpha") alpha = parse_real(value, key);
  else if (key == "grad_steps_per_traj") grad_steps_per_traj = parse_int(value, key);
  else if (key == "batch_size") batch_size = parse_int(value, key);
  else if (key == "eta") eta = parse_real(value, key);
  else if (key == "optimizer") optimizer = parse_optimizer(value);
  else if (key == "beta") beta = parse_real(value, key);
  else if (key == "pretrain_steps") pretrain_steps = parse_int(value, key);
  else if (key == "single_policy_pretrain") single_policy_pretrain = parse_bool(value, key);
  else if (key == "filter_convention") convention = parse_filter_convention(value);
  else if (key == "eval_episodes") eval_episodes = parse_int(value, key);
  else throw InputError("unknown coil key '" + key + "'");
}

// ---------------------------------------------------------------- criterion

double criterion_from_probs(std::vector<double>& probs, double beta) {
  if (probs.empty()) throw InputError("empty trajectory");
  std::sort(probs.begin(), probs.end());
  const auto h = static_cast<double>(probs.size() - 1);
  const auto idx = static_cast<std::size_t>(std::floor(beta * h));
  return probs[std::min(idx, probs.size() - 1)];
}

namespace {

std::vector<double> step_probs(const TabularSoftmaxPolicy& policy, const Trajectory& traj) {
  std::vector<double> row(static_cast<std::size_t>(policy.n_actions())), out;
  out.reserve(traj.steps.size());
  for (const auto& st : traj.steps) {
    policy.probs(st.state, row);
    if (st.action < 0 || st.action >= policy.n_actions()) throw InputError("action out of range");
    out.push_back(row[static_cast<std::size_t>(st.action)]);
  }
  return out;
}

std::vector<double> step_probs(const LinearGaussianPolicy& policy, const ContinuousTrajectory& traj) {
  std::vector<double> out;
  out.reserve(traj.steps.size());
  for (const auto& st : traj.steps) out.push_back(policy.density(st.state, st.action));
  return out;
}

}  // namespace

double trajectory_criterion(const TabularSoftmaxPolicy& policy, const Trajectory& traj, double beta) {
  auto p = step_probs(policy, traj);
  return criterion_from_probs(p, beta);
}

double trajectory_criterion(const LinearGaussianPolicy& policy, const ContinuousTrajectory& traj, double beta) {
  auto p = step_probs(policy, traj);
  return criterion_from_probs(p, beta);
}

bool neighboring_condition_from_probs(std::span<const double> probs, double beta, double eps_c) {
  if (probs.empty()) throw InputError("empty trajectory");
  if (!(eps_c > 0.0)) throw InputError("eps_c must be positive");
  std::size_t hits = 0;
  for (double p : probs) hits += p >= eps_c ? 1 : 0;
  // hits / n >= 1 - beta  <=>  misses <= beta * n; the slack absorbs the
  // rounding of beta * n for exact boundary cases such as 19 of 20.
  const double misses = static_cast<double>(probs.size() - hits);
  return misses <= beta * static_cast<double>(probs.size()) + 1e-9;
}

bool check_neighboring_condition(const TabularSoftmaxPolicy& policy, const Trajectory& traj, double beta,
                                 double eps_c) {
  return neighboring_condition_from_probs(step_probs(policy, traj), beta, eps_c);
}

bool check_neighboring_condition(const LinearGaussianPolicy& policy, const ContinuousTrajectory& traj, double beta,
                                 double eps_c) {
  return neighboring_condition_from_probs(step_probs(policy, traj), beta, eps_c);
}

// ---------------------------------------------------------------- selection

std::vector<std::size_t> top_n_by_score(std::span<const double> scores, std::span<const std::int64_t> ids,
                                        std::size_t n) {
  if (scores.size() != ids.size()) throw InputError("score/id length mismatch");
  if (scores.empty()) throw PoolExhausted();
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t take = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return ids[a] < ids[b];
                    });
  order.resize(take);
  return order;
}

namespace {

template <class Traj, class Policy>
Selection<Traj> select_impl(std::vector<Traj> pool, const Policy& policy, const CoilConfig& cfg) {
  if (pool.empty()) throw PoolExhausted();
  if (cfg.n_select < 1) throw InputError("n_select must be at least 1");
  const auto scores = kernels::score_pool(policy, pool, cfg.beta);
  std::vector<std::int64_t> ids;
  ids.reserve(pool.size());
  for (const auto& t : pool) ids.push_back(t.id);
  const auto picks = top_n_by_score(scores, ids, static_cast<std::size_t>(cfg.n_select));
  Selection<Traj> out;
  std::vector<bool> taken(pool.size(), false);
  for (std::size_t i : picks) {
    taken[i] = true;
    out.selected.push_back(pool[i]);
  }
  for (std::size_t i = 0; i < pool.size(); ++i)
    if (!taken[i]) out.remaining.push_back(std::move(pool[i]));
  return out;
}

}  // namespace

Selection<Trajectory> select_curriculum(std::vector<Trajectory> pool, const TabularSoftmaxPolicy& policy,
                                        const CoilConfig& cfg) {
  return select_impl(std::move(pool), policy, cfg);
}

Selection<ContinuousTrajectory> select_curriculum(std::vector<ContinuousTrajectory> pool,
                                                  const LinearGaussianPolicy& policy, const CoilConfig& cfg) {
  return select_impl(std::move(pool), policy, cfg);
}

double update_return_filter(double v, std::span<const double> selected_returns, double alpha,
                            FilterConvention convention) {
  if (selected_returns.empty()) throw InputError("no selected returns");
  const double lo = *std::min_element(selected_returns.begin(), selected_returns.end());
  if (convention == FilterConvention::appendix) return alpha * v + (1.0 - alpha) * lo;
  return (1.0 - alpha) * v + alpha * lo;
}

// -------------------------------------------------------------------- log

namespace {

const char* kColumns =
    "curriculum,grad_steps,selected_ids,min_sel_return,mean_sel_return,filter_V,pool_after,eval_return_mean,"
    "eval_return_std";

}  // namespace

void TrainingLog::write_csv(std::ostream& out) const {
  if (baseline_kind) out << "baseline_kind,";
  out << kColumns << '\n';
  for (const auto& r : records) {
    if (baseline_kind) out << *baseline_kind << ',';
    out << r.curriculum << ',' << r.grad_steps << ',';
    for (std::size_t i = 0; i < r.selected_ids.size(); ++i) out << (i ? ";" : "") << r.selected_ids[i];
    out << ',' << format_real(r.min_sel_return) << ',' << format_real(r.mean_sel_return) << ','
        << format_real(r.filter_v) << ',' << r.pool_after << ',' << format_real(r.eval_return_mean) << ','
        << format_real(r.eval_return_std) << '\n';
  }
}

TrainingLog TrainingLog::read_csv(std::istream& in) {
  TrainingLog log;
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty log", 1);
  bool with_kind = false;
  if (trim(line) == std::string("baseline_kind,") + kColumns) with_kind = true;
  else if (trim(line) != kColumns) throw ParseError("unexpected log header", 1);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split(trim(line), ',');
    const std::size_t expected = with_kind ? 10 : 9;
    if (cells.size() != expected) throw ParseError("expected " + std::to_string(expected) + " columns", lineno);
    std::size_t c = 0;
    try {
      if (with_kind) log.baseline_kind = cells[c++];
      CurriculumRecord r;
      r.curriculum = parse_int(cells[c++], "curriculum");
      r.grad_steps = parse_int64(cells[c++], "grad_steps");
      if (!trim(cells[c]).empty())
        for (const auto& id : split(cells[c], ';')) r.selected_ids.push_back(parse_int64(id, "selected_ids"));
      ++c;
      r.min_sel_return = parse_real(cells[c++], "min_sel_return");
      r.mean_sel_return = parse_real(cells[c++], "mean_sel_return");
      r.filter_v = parse_real(cells[c++], "filter_V");
      r.pool_after = static_cast<std::size_t>(parse_int64(cells[c++], "pool_after"));
      r.eval_return_mean = parse_real(cells[c++], "eval_return_mean");
      r.eval_return_std = parse_real(cells[c++], "eval_return_std");
      log.records.push_back(std::move(r));
    } catch (const ParseError&) {
      throw;
    } catch (const InputError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return log;
}

// ----------------------------------------------------------------- training

namespace {

std::vector<double> eval_policy(const TabularMdp& env, const TabularSoftmaxPolicy& pi, int n, std::uint64_t seed) {
  return kernels::evaluate_returns(env, pi.table(), n, seed);
}

std::vector<double> eval_policy(const PointMass1d& env, const LinearGaussianPolicy& pi, int n, std::uint64_t seed) {
  return kernels::evaluate_returns(env, pi, n, seed);
}

template <class Policy, class Env>
TrainResult<Policy> coil_loop(std::vector<TrajectoryFor<Policy>> pool, const Env& env, Policy policy,
                              const CoilConfig& cfg) {
  using Traj = TrajectoryFor<Policy>;
  cfg.validate();
  if (pool.empty()) throw InputError("empty dataset");
  TrainResult<Policy> result{std::move(policy), {}, false};
  BcTrainer<Policy> trainer(cfg.bc_params(), derive_seed(cfg.seed, 1));
  const std::uint64_t eval_stream = eval_seed(cfg.seed);
  try {
    if (cfg.single_policy_pretrain && cfg.pretrain_steps > 0)
      trainer.train(result.policy, std::span<const Traj>(pool), cfg.pretrain_steps);
    double v = 0.0;
    int k = 0;
    while (!pool.empty()) {
      auto sel = select_curriculum(std::move(pool), result.policy, cfg);
      const auto n = static_cast<std::int64_t>(sel.selected.size());
      trainer.train(result.policy, std::span<const Traj>(sel.selected), cfg.grad_steps_per_traj * n);

      CurriculumRecord rec;
      rec.curriculum = k;
      std::vector<double> returns;
      for (const auto& t : sel.selected) {
        rec.selected_ids.push_back(t.id);
        rec.selected_collection_indices.push_back(t.collection_index);
        returns.push_back(t.accumulated_return);
      }
      v = update_return_filter(v, returns, cfg.alpha, cfg.convention);
      pool = filter_pool(std::move(sel.remaining), v);

      const auto sel_stats = summarize(returns);
      rec.grad_steps = trainer.grad_steps();
      rec.min_sel_return = sel_stats.min;
      rec.mean_sel_return = sel_stats.mean;
      rec.filter_v = v;
      rec.pool_after = pool.size();
      const auto eval = summarize(eval_policy(env, result.policy, cfg.eval_episodes, eval_stream));
      rec.eval_return_mean = eval.mean;
      rec.eval_return_std = eval.stddev;
      result.log.records.push_back(std::move(rec));
      ++k;
    }
  } catch (const DivergenceError&) {
    result.diverged = true;
  }
  return result;
}

}  // namespace

TrainResult<TabularSoftmaxPolicy> coil_train(const Dataset& data, const TabularMdp& env,
                                             TabularSoftmaxPolicy policy_init, const CoilConfig& cfg) {
  if (data.empty()) throw InputError("empty dataset");
  return coil_loop(data.trajectories, env, std::move(policy_init), cfg);
}

TrainResult<LinearGaussianPolicy> coil_train(const std::vector<ContinuousTrajectory>& data, const PointMass1d& env,
                                             LinearGaussianPolicy policy_init, const CoilConfig& cfg) {
  return coil_loop(data, env, std::move(policy_init), cfg);
}

}  // namespace coil
