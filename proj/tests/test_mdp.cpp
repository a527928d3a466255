#include <doctest.h>

#include <numeric>

#include "coil/analysis.hpp"
#include "coil/envs.hpp"
#include "coil/mdp.hpp"
#include "oracles.hpp"

using namespace coil;

namespace {

TabularMdp two_state(double gamma = 0.9) {
  // s0 --a0--> s0 (r 1), s0 --a1--> s1 (r 0); s1 --any--> s0 (r 2)
  return TabularMdp(2, 2, {1, 0, 0, 1, 1, 0, 1, 0}, {1, 0, 2, 2}, gamma, {1, 0}, 10);
}

}  // namespace

TEST_CASE("mdp rejects malformed tables") {
  CHECK_THROWS_AS(TabularMdp(2, 1, {0.5, 0.4, 1, 0}, {0, 0}, 0.9, {1, 0}, 5), InputError);
  CHECK_THROWS_AS(TabularMdp(2, 1, {1, 0, 1, 0}, {0, 0}, 1.0, {1, 0}, 5), InputError);
  CHECK_THROWS_AS(TabularMdp(2, 1, {1, 0, 1, 0}, {0, 0}, 0.9, {0.5, 0.4}, 5), InputError);
  CHECK_THROWS_AS(TabularMdp(2, 1, {1, 0, 1, 0}, {0}, 0.9, {1, 0}, 5), InputError);
  CHECK_THROWS_AS(PolicyTable(1, 2, {0.7, 0.7}).validate(), InputError);
}

TEST_CASE("absorbing states are self-loops paying nothing") {
  const auto grid = build_gridworld(4, 3, true, 30);
  const int goal = 2 * 4 + 3, cliff = 2 * 4 + 1, start = 2 * 4;
  CHECK(grid.is_absorbing(goal));
  CHECK(grid.is_absorbing(cliff));
  CHECK_FALSE(grid.is_absorbing(start));
  CHECK_FALSE(two_state().is_absorbing(0));
}

TEST_CASE("occupancy matches simulated visitation") {
  Rng rng(11);
  for (int trial = 0; trial < 3; ++trial) {
    const auto mdp = random_mdp(4, 2, rng, 0.8);
    const auto pi = random_policy(4, 2, rng);
    const auto occ = occupancy_measure(mdp, pi, true);
    const auto mc = oracle::mc_occupancy(mdp, pi, 200000, 100 + trial);
    for (std::size_t i = 0; i < mc.size(); ++i) CHECK(occ.rho_sa[i] == doctest::Approx(mc[i]).epsilon(0.02).scale(1));
  }
}

TEST_CASE("occupancy normalization and marginals") {
  Rng rng(3);
  const auto mdp = random_mdp(5, 3, rng, 0.95);
  const auto pi = random_policy(5, 3, rng, true);
  const auto raw = occupancy_measure(mdp, pi, false);
  const auto norm = occupancy_measure(mdp, pi, true);
  CHECK(std::accumulate(raw.rho_sa.begin(), raw.rho_sa.end(), 0.0) == doctest::Approx(1.0 / (1.0 - 0.95)));
  CHECK(std::accumulate(norm.rho_sa.begin(), norm.rho_sa.end(), 0.0) == doctest::Approx(1.0));
  for (int s = 0; s < 5; ++s) {
    double row = 0.0;
    for (int a = 0; a < 3; ++a) {
      CHECK(norm.sa(s, a) >= 0.0);
      row += norm.sa(s, a);
    }
    CHECK(row == doctest::Approx(norm.rho_s[static_cast<std::size_t>(s)]));
  }
  const auto view = raw.normalized_view(0.95);
  for (std::size_t i = 0; i < view.rho_sa.size(); ++i) CHECK(view.rho_sa[i] == doctest::Approx(norm.rho_sa[i]));
}

TEST_CASE("occupancy flow conservation") {
  Rng rng(5);
  const auto mdp = random_mdp(6, 2, rng, 0.7);
  const auto pi = random_policy(6, 2, rng);
  const auto occ = occupancy_measure(mdp, pi, false);
  for (int s2 = 0; s2 < 6; ++s2) {
    double inflow = mdp.initial_dist()[static_cast<std::size_t>(s2)];
    for (int s = 0; s < 6; ++s)
      for (int a = 0; a < 2; ++a) inflow += mdp.gamma() * mdp.transition(s, a, s2) * occ.sa(s, a);
    CHECK(occ.rho_s[static_cast<std::size_t>(s2)] == doctest::Approx(inflow).epsilon(1e-10));
  }
}

TEST_CASE("tv distance") {
  const std::vector<double> p{0.5, 0.5, 0.0}, q{0.0, 0.5, 0.5};
  CHECK(tv_distance(p, q) == doctest::Approx(0.5));
  CHECK(tv_distance(p, p) == 0.0);
  CHECK(tv_distance(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == doctest::Approx(1.0));
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const auto a = random_distribution(6, rng, i % 2 == 0), b = random_distribution(6, rng);
    const double tv = tv_distance(a, b);
    CHECK(tv == doctest::Approx(oracle::tv_by_events(a, b)).epsilon(1e-12));
    CHECK(tv == doctest::Approx(tv_distance(b, a)));
    CHECK(tv >= 0.0);
    CHECK(tv <= 1.0);
  }
  CHECK_THROWS_AS(tv_distance(p, std::vector<double>{1.0}), InputError);
}

TEST_CASE("policy evaluation and value iteration against iteration and brute force") {
  Rng rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto mdp = random_mdp(4, 3, rng, 0.9);
    const auto pi = random_policy(4, 3, rng);
    const auto v = policy_evaluation(mdp, pi);
    const auto ref = oracle::iterate_values(mdp, pi);
    for (int s = 0; s < 4; ++s) CHECK(v[static_cast<std::size_t>(s)] == doctest::Approx(ref[static_cast<std::size_t>(s)]).epsilon(1e-9));

    const auto vi = value_iteration(mdp, 1e-12);
    const auto greedy = deterministic_policy(3, vi.greedy);
    CHECK(discounted_value(mdp, greedy) == doctest::Approx(oracle::brute_force_optimal_value(mdp)).epsilon(1e-8));
  }
}

TEST_CASE("value iteration on the two-state example") {
  const auto mdp = two_state(0.9);
  const auto vi = value_iteration(mdp);
  // Staying pays 1 forever (V0 = 10); alternating only reaches 1.8 / 0.19.
  CHECK(vi.values[0] == doctest::Approx(10.0));
  CHECK(vi.values[1] == doctest::Approx(11.0));
  CHECK(vi.greedy[0] == 0);
}

TEST_CASE("expected episode return matches path enumeration") {
  const auto chain = build_chain(5, 0.2, 7);
  const PolicyTable uniform(5, 2);
  CHECK(expected_episode_return(chain, uniform) == doctest::Approx(oracle::enumerate_episode_return(chain, uniform)));
  const auto grid = build_gridworld(3, 2, true, 6, 0.1);
  Rng rng(4);
  const auto pi = random_policy(6, 4, rng);
  CHECK(expected_episode_return(grid, pi) == doctest::Approx(oracle::enumerate_episode_return(grid, pi)));
}

TEST_CASE("empirical behavior policy and visit counts") {
  Dataset d;
  d.trajectories.push_back(make_trajectory(0, {{0, 1, 1, 0.0}, {1, 0, 0, 1.0}, {0, 1, 1, 0.0}}));
  const auto pi = empirical_behavior_policy(d, 3, 2);
  CHECK(pi(0, 1) == 1.0);
  CHECK(pi(1, 0) == 1.0);
  CHECK(pi(2, 0) == 0.5);  // unvisited: uniform
  const auto counts = state_visit_counts(d, 3);
  CHECK(counts == std::vector<std::size_t>{2, 1, 0});
  CHECK(d.n_pairs() == 3);
}

TEST_CASE("trajectories are validated") {
  CHECK_THROWS_AS(make_trajectory(0, std::vector<Step>{}), InputError);
  CHECK_THROWS_AS(make_trajectory(0, {{0, 0, 1, 0.0}, {2, 0, 0, 0.0}}), InputError);
  auto t = make_trajectory(3, {{0, 0, 1, 1.5}, {1, 0, 0, 2.0}});
  CHECK(t.accumulated_return == 3.5);
  CHECK(t.horizon() == 1);
  CHECK(trajectory_return(t, 0.5) == doctest::Approx(2.5));
  t.accumulated_return = 0.0;
  CHECK_THROWS_AS(validate_trajectory(t), InputError);
  Dataset d;
  d.trajectories = {make_trajectory(1, {{0, 0, 0, 0.0}}), make_trajectory(1, {{0, 0, 0, 0.0}})};
  CHECK_THROWS_AS(d.validate(), InputError);
}

TEST_CASE("compare_policies orders by estimated return") {
  const auto chain = build_chain(6, 0.0, 20);
  const std::vector<int> right(6, chain_action::right), left(6, chain_action::left);
  const auto good = deterministic_policy(2, right), bad = deterministic_policy(2, left);
  const auto c = compare_policies(chain, bad, good, 20, 1);
  CHECK(c.first_le_second);
  CHECK_FALSE(c.second_le_first);
  CHECK(c.std2 == 0.0);
  CHECK(c.mean2 == doctest::Approx(expected_episode_return(chain, good)));
  const auto same = compare_policies(chain, good, good, 5, 2);
  CHECK(same.first_le_second);
  CHECK(same.second_le_first);
}
