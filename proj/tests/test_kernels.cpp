#include <doctest.h>

#include "coil/analysis.hpp"
#include "coil/datagen.hpp"
#include "coil/kernels.hpp"

using namespace coil;

TEST_CASE("parallel kernels match the serial references bit for bit") {
  const auto grid = build_gridworld(5, 4, true, 40, 0.2);
  Rng rng(3);
  const auto pi = random_policy(20, 4, rng);
  CHECK(kernels::evaluate_returns(grid, pi, 257, 9) == kernels::serial::evaluate_returns(grid, pi, 257, 9));

  const auto data = generate_single_policy(grid, pi, 300, 4);
  const auto soft = TabularSoftmaxPolicy::from_table(random_policy(20, 4, rng));
  CHECK(kernels::score_pool(soft, data.trajectories, 0.05) ==
        kernels::serial::score_pool(soft, data.trajectories, 0.05));

  const PointMass1d env;
  LinearGaussianPolicy g(2, 1, -0.5);
  g.weight(0, 0) = -1.0;
  g.bias(0) = 1.0;
  CHECK(kernels::evaluate_returns(env, g, 64, 2) == kernels::serial::evaluate_returns(env, g, 64, 2));
  std::vector<ContinuousTrajectory> cont;
  for (int i = 0; i < 40; ++i) {
    Rng r(derive_seed(5, static_cast<std::uint64_t>(i)));
    cont.push_back(rollout(env, g, r, 20, i));
  }
  CHECK(kernels::score_pool(g, cont, 0.1) == kernels::serial::score_pool(g, cont, 0.1));
}

TEST_CASE("results do not depend on the thread count") {
  const auto chain = build_chain(8, 0.3, 30);
  const PolicyTable pi(8, 2);
  const auto before = kernels::evaluate_returns(chain, pi, 100, 1);
  const int keep = kernels::max_threads();
  kernels::set_max_threads(1);
  CHECK(kernels::max_threads() == 1);
  CHECK(kernels::evaluate_returns(chain, pi, 100, 1) == before);
  CHECK(verify_joint_tv_lemma(50, 4, 2).max_excess == [] {
    kernels::set_max_threads(0);
    return verify_joint_tv_lemma(50, 4, 2).max_excess;
  }());
  kernels::set_max_threads(0);
  CHECK(kernels::max_threads() == keep);
}

TEST_CASE("evaluation episode i uses stream i") {
  const auto chain = build_chain(6, 0.4, 20);
  const PolicyTable pi(6, 2);
  const auto many = kernels::evaluate_returns(chain, pi, 10, 7);
  Rng rng(derive_seed(7, 4));
  CHECK(many[4] == rollout(chain, pi, rng, 20).accumulated_return);
  CHECK(kernels::evaluate_returns(chain, pi, 4, 7) == std::vector<double>(many.begin(), many.begin() + 4));
}
