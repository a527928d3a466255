#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "coil/curriculum.hpp"
#include "coil/datagen.hpp"
#include "oracles.hpp"

using namespace coil;

namespace {

Dataset chain_buffer(std::uint64_t seed, int episodes = 120) {
  OnlineAgentConfig cfg;
  cfg.seed = seed;
  cfg.n_episodes = episodes;
  cfg.eps_decay_episodes = episodes / 2;
  return generate_final_buffer(build_chain(8, 0.0, 25), cfg);
}

CoilConfig fast_config(std::uint64_t seed) {
  CoilConfig c;
  c.seed = seed;
  c.grad_steps_per_traj = 20;
  c.batch_size = 32;
  c.eval_episodes = 5;
  return c;
}

}  // namespace

TEST_CASE("criterion is the floor(beta h)-th order statistic") {
  Rng rng(1);
  for (int c = 0; c < 300; ++c) {
    const std::size_t n = 1 + uniform_index(rng, 40);
    std::vector<double> probs(n);
    for (auto& p : probs) p = uniform01(rng) < 0.3 ? 0.5 : uniform01(rng);
    const double beta = uniform01(rng) * 0.99;
    auto copy = probs;
    const auto k = static_cast<std::size_t>(std::floor(beta * static_cast<double>(n - 1)));
    CHECK(criterion_from_probs(copy, beta) == oracle::kth_smallest(probs, k));
  }
  std::vector<double> empty;
  CHECK_THROWS_AS(criterion_from_probs(empty, 0.1), InputError);
}

TEST_CASE("criterion with beta = 0 is the minimum step probability") {
  const TabularSoftmaxPolicy pi(2, 2, {0.0, std::log(3.0), 0.0, 0.0});
  const auto t = make_trajectory(0, {{0, 1, 1, 0.0}, {1, 0, 0, 0.0}, {0, 0, 0, 0.0}});
  CHECK(trajectory_criterion(pi, t, 0.0) == doctest::Approx(0.25));
  CHECK(trajectory_criterion(pi, t, 0.99) == doctest::Approx(0.5));
}

TEST_CASE("criterion clearing eps implies the fraction condition") {
  Rng rng(2);
  for (int c = 0; c < 2000; ++c) {
    const std::size_t n = 1 + uniform_index(rng, 30);
    std::vector<double> probs(n);
    for (auto& p : probs) p = std::round(uniform01(rng) * 10.0) / 10.0;
    const double beta = uniform01(rng) < 0.5 ? static_cast<double>(uniform_index(rng, n)) / static_cast<double>(n)
                                             : uniform01(rng) * 0.99;
    const double eps = std::max(0.1, std::round(uniform01(rng) * 10.0) / 10.0);
    auto copy = probs;
    if (criterion_from_probs(copy, beta) >= eps) CHECK(neighboring_condition_from_probs(probs, beta, eps));
  }
}

TEST_CASE("fraction condition boundary: 19 of 20 steps at beta = 0.05") {
  std::vector<double> probs(20, 0.9);
  probs[0] = 0.01;
  CHECK(neighboring_condition_from_probs(probs, 0.05, 0.5));
  // The order statistic looks at index floor(0.05 * 19) = 0, the one low step.
  auto copy = probs;
  CHECK(criterion_from_probs(copy, 0.05) == 0.01);
  probs[1] = 0.01;
  CHECK_FALSE(neighboring_condition_from_probs(probs, 0.05, 0.5));
}

TEST_CASE("selection picks the top scores with ties to the lower id") {
  const std::vector<double> scores{0.5, 0.9, 0.9, 0.1};
  const std::vector<std::int64_t> ids{7, 9, 3, 1};
  const auto picks = top_n_by_score(scores, ids, 2);
  CHECK(picks == std::vector<std::size_t>{2, 1});
  CHECK(top_n_by_score(scores, ids, 10).size() == 4);
  CHECK_THROWS_AS(top_n_by_score(std::vector<double>{}, std::vector<std::int64_t>{}, 2), PoolExhausted);

  std::vector<Trajectory> pool{make_trajectory(4, {{0, 0, 0, 0.0}}), make_trajectory(2, {{0, 1, 0, 0.0}}),
                               make_trajectory(1, {{0, 0, 0, 0.0}})};
  const TabularSoftmaxPolicy pi(1, 2, {1.0, 0.0});
  CoilConfig cfg;
  cfg.n_select = 1;
  const auto sel = select_curriculum(pool, pi, cfg);
  REQUIRE(sel.selected.size() == 1);
  CHECK(sel.selected[0].id == 1);
  CHECK(sel.remaining.size() == 2);
  CHECK_THROWS_AS(select_curriculum(std::vector<Trajectory>{}, pi, cfg), PoolExhausted);
}

TEST_CASE("return filter conventions") {
  const std::vector<double> r{3.0, 5.0};
  CHECK(update_return_filter(1.0, r, 0.85) == doctest::Approx(0.85 * 1.0 + 0.15 * 3.0));
  CHECK(update_return_filter(1.0, r, 0.85, FilterConvention::eq9) == doctest::Approx(0.15 * 1.0 + 0.85 * 3.0));
  CHECK(update_return_filter(7.0, r, 1.0) == 7.0);
  CHECK(update_return_filter(7.0, r, 0.0) == 3.0);
  CHECK_THROWS_AS(update_return_filter(0.0, std::vector<double>{}, 0.5), InputError);
  CHECK(parse_filter_convention("eq9") == FilterConvention::eq9);
  CHECK_THROWS_AS(parse_filter_convention("x"), InputError);

  std::vector<Trajectory> pool{make_trajectory(0, {{0, 0, 0, 1.0}}), make_trajectory(1, {{0, 0, 0, 2.0}})};
  CHECK(filter_pool(pool, 1.5).size() == 1);
  CHECK(filter_pool(pool, 1.0).size() == 2);
}

TEST_CASE("coil_train: termination, step accounting, filter bookkeeping") {
  const auto data = chain_buffer(4);
  const auto mdp = build_chain(8, 0.0, 25);
  const auto cfg = fast_config(4);
  const auto res = coil_train(data, mdp, TabularSoftmaxPolicy(8, 2), cfg);
  REQUIRE_FALSE(res.log.records.empty());
  const auto& recs = res.log.records;
  CHECK(recs.size() <= (data.size() + 1) / 2);
  CHECK(recs.back().pool_after == 0);
  std::set<std::int64_t> seen;
  std::int64_t steps = 0;
  double v = 0.0;
  for (std::size_t k = 0; k < recs.size(); ++k) {
    const auto& r = recs[k];
    CHECK(r.curriculum == static_cast<int>(k));
    CHECK((r.selected_ids.size() == 1 || r.selected_ids.size() == 2));
    for (auto id : r.selected_ids) CHECK(seen.insert(id).second);
    steps += cfg.grad_steps_per_traj * static_cast<std::int64_t>(r.selected_ids.size());
    CHECK(r.grad_steps == steps);
    v = 0.85 * v + 0.15 * r.min_sel_return;
    CHECK(r.filter_v == doctest::Approx(v));
    for (std::size_t i = 0; i < r.selected_ids.size(); ++i)
      CHECK(r.selected_collection_indices[i] == static_cast<int>(r.selected_ids[i]));
  }
  CHECK_FALSE(res.diverged);
}

TEST_CASE("coil_train: alpha = 1 never filters, alpha = 0 tracks the min") {
  const auto data = chain_buffer(5);
  const auto mdp = build_chain(8, 0.0, 25);
  auto cfg = fast_config(5);
  cfg.alpha = 1.0;
  const auto frozen = coil_train(data, mdp, TabularSoftmaxPolicy(8, 2), cfg);
  std::size_t used = 0;
  for (const auto& r : frozen.log.records) {
    CHECK(r.filter_v == 0.0);
    used += r.selected_ids.size();
  }
  CHECK(used == data.size());
  cfg.alpha = 0.0;
  const auto greedy = coil_train(data, mdp, TabularSoftmaxPolicy(8, 2), cfg);
  for (const auto& r : greedy.log.records) CHECK(r.filter_v == r.min_sel_return);
}

TEST_CASE("coil_train is deterministic and the log round-trips") {
  const auto data = chain_buffer(6);
  const auto mdp = build_chain(8, 0.0, 25);
  const auto cfg = fast_config(6);
  const auto a = coil_train(data, mdp, TabularSoftmaxPolicy(8, 2), cfg);
  const auto b = coil_train(data, mdp, TabularSoftmaxPolicy(8, 2), cfg);
  std::stringstream sa, sb;
  a.log.write_csv(sa);
  b.log.write_csv(sb);
  CHECK(sa.str() == sb.str());
  CHECK(a.policy == b.policy);

  std::stringstream in(sa.str());
  const auto back = TrainingLog::read_csv(in);
  std::stringstream again;
  back.write_csv(again);
  CHECK(again.str() == sa.str());
  CHECK(sa.str().rfind(
            "curriculum,grad_steps,selected_ids,min_sel_return,mean_sel_return,filter_V,pool_after,eval_return_mean,"
            "eval_return_std\n",
            0) == 0);
}

TEST_CASE("malformed logs name the bad line") {
  std::stringstream bad_header("a,b,c\n");
  CHECK_THROWS_AS(TrainingLog::read_csv(bad_header), ParseError);
  std::stringstream short_row(
      "curriculum,grad_steps,selected_ids,min_sel_return,mean_sel_return,filter_V,pool_after,eval_return_mean,"
      "eval_return_std\n0,10,1;2,0,0,0,5,1,0\n1,20\n");
  try {
    TrainingLog::read_csv(short_row);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("the eq9 convention changes the filter trajectory") {
  const auto data = chain_buffer(7);
  const auto mdp = build_chain(8, 0.0, 25);
  auto cfg = fast_config(7);
  cfg.convention = FilterConvention::eq9;
  const auto res = coil_train(data, mdp, TabularSoftmaxPolicy(8, 2), cfg);
  double v = 0.0;
  for (const auto& r : res.log.records) {
    v = 0.15 * v + 0.85 * r.min_sel_return;
    CHECK(r.filter_v == doctest::Approx(v));
  }
}

TEST_CASE("single-policy pretraining spends T extra steps first") {
  const auto data = chain_buffer(8, 40);
  const auto mdp = build_chain(8, 0.0, 25);
  auto cfg = fast_config(8);
  cfg.pretrain_steps = 77;
  const auto ignored = coil_train(data, mdp, TabularSoftmaxPolicy(8, 2), cfg);
  cfg.single_policy_pretrain = true;
  const auto used = coil_train(data, mdp, TabularSoftmaxPolicy(8, 2), cfg);
  const auto first = [](const auto& r) {
    return r.log.records.front().grad_steps - 20 * static_cast<std::int64_t>(r.log.records.front().selected_ids.size());
  };
  CHECK(first(ignored) == 0);
  CHECK(first(used) == 77);
}

TEST_CASE("continuous curriculum runs and divergence keeps the partial log") {
  const PointMass1d env;
  LinearGaussianPolicy demo(2, 1, -1.0);
  demo.weight(0, 0) = -2.0;
  demo.bias(0) = 2.0;
  std::vector<ContinuousTrajectory> data;
  for (int i = 0; i < 6; ++i) {
    Rng rng(derive_seed(9, static_cast<std::uint64_t>(i)));
    data.push_back(rollout(env, demo, rng, env.horizon_cap, i));
  }
  CoilConfig cfg = fast_config(9);
  cfg.alpha = 0.0;  // returns are negative: V follows the selected minimum
  cfg.eta = 0.01;
  const auto ok = coil_train(data, env, LinearGaussianPolicy(2, 1), cfg);
  CHECK_FALSE(ok.diverged);
  REQUIRE_FALSE(ok.log.records.empty());
  CHECK(ok.log.records.size() <= 3);
  CHECK(ok.log.records.back().pool_after == 0);
  for (const auto& rec : ok.log.records) CHECK(std::isfinite(rec.eval_return_mean));

  cfg.alpha = 1.0;  // V stays at 0 and every negative return is filtered
  CHECK(coil_train(data, env, LinearGaussianPolicy(2, 1), cfg).log.records.size() == 1);

  cfg.eta = 1e12;
  const auto bad = coil_train(data, env, LinearGaussianPolicy(2, 1), cfg);
  CHECK(bad.diverged);
  CHECK(bad.log.records.empty());  // blows up inside the first curriculum
}

TEST_CASE("config validation and key-values") {
  CoilConfig c;
  for (const auto& [k, v] : c.to_key_values()) c.set(k, v);
  c.validate();
  c.beta = 1.0;
  CHECK_THROWS_AS(c.validate(), InputError);
  CHECK_THROWS_AS(CoilConfig().set("gamma", "1"), InputError);
  CoilConfig e;
  e.eval_episodes = 0;
  CHECK_THROWS_AS(e.validate(), InputError);
  CHECK_THROWS_AS(coil_train(Dataset{}, build_chain(4, 0, 5), TabularSoftmaxPolicy(4, 2), CoilConfig{}), InputError);
}
