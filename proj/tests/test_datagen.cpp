#include <doctest.h>

#include <filesystem>
#include <sstream>

#include "coil/datagen.hpp"
#include "coil/stats.hpp"

using namespace coil;

namespace {

Dataset small_dataset() {
  Dataset d;
  d.trajectories.push_back(make_trajectory(0, {{0, 1, 1, 0.1}, {1, 0, 0, 0.2}}, 0));
  d.trajectories.push_back(make_trajectory(1, {{0, 0, 0, 1.0 / 3.0}}, 1));
  d.trajectories.push_back(make_trajectory(2, {{0, 1, 1, 0.3}}, 2));
  d.trajectories[1].policy_tag = "q_learning";
  return d;
}

}  // namespace

TEST_CASE("epsilon schedule is linear then flat") {
  OnlineAgentConfig cfg;
  CHECK(cfg.epsilon_at(0) == doctest::Approx(0.3));
  CHECK(cfg.epsilon_at(100) == doctest::Approx(0.16));
  CHECK(cfg.epsilon_at(200) == doctest::Approx(0.02));
  CHECK(cfg.epsilon_at(399) == doctest::Approx(0.02));
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InputError);
  CHECK_THROWS_AS(OnlineAgentConfig().set("algo", "sarsa"), InputError);
}

TEST_CASE("final buffer records the whole run in order") {
  const auto mdp = build_chain(12, 0.0, 40);
  OnlineAgentConfig cfg;
  cfg.seed = 3;
  const auto data = generate_final_buffer(mdp, cfg);
  REQUIRE(data.size() == 400);
  for (std::size_t i = 0; i < data.size(); ++i) {
    CHECK(data.trajectories[i].id == static_cast<std::int64_t>(i));
    CHECK(data.trajectories[i].collection_index == static_cast<int>(i));
    CHECK(data.trajectories[i].policy_tag == std::optional<std::string>("q_learning"));
  }
  data.validate(12, 2);
  CHECK(generate_final_buffer(mdp, cfg) == data);
}

TEST_CASE("learning occurs: last decile at least doubles the first") {
  const auto mdp = build_chain(12, 0.0, 40);
  for (std::uint64_t seed : {0, 1, 2, 3, 4}) {
    OnlineAgentConfig cfg;
    cfg.seed = seed;
    const auto data = generate_final_buffer(mdp, cfg);
    std::vector<double> first, last;
    for (std::size_t i = 0; i < 40; ++i) {
      first.push_back(data.trajectories[i].accumulated_return);
      last.push_back(data.trajectories[data.size() - 1 - i].accumulated_return);
    }
    CHECK(summarize(last).mean >= 2.0 * summarize(first).mean);
  }
}

TEST_CASE("checkpoints improve along training") {
  const auto mdp = build_chain(12, 0.0, 40);
  OnlineAgentConfig cfg;
  cfg.seed = 1;
  const auto cps = q_learning_checkpoints(mdp, cfg);
  REQUIRE(cps.size() == 4);
  CHECK(cps[0](0, 0) == 0.5);
  const double random = expected_episode_return(mdp, cps[0]);
  const double expert = expected_episode_return(mdp, cps[3]);
  CHECK(expert > random);
  CHECK(expert > 0.9 * 29.0);
}

TEST_CASE("epsilon-greedy table shares ties") {
  const std::vector<double> q{1.0, 1.0, 0.0, 2.0, 0.0, 0.0};
  const auto t = epsilon_greedy_table(q, 2, 3, 0.3);
  CHECK(t(0, 0) == doctest::Approx(0.1 + 0.35));
  CHECK(t(0, 2) == doctest::Approx(0.1));
  CHECK(t(1, 0) == doctest::Approx(0.8));
  t.validate();
}

TEST_CASE("single-policy generation is seeded per trajectory") {
  const auto mdp = build_chain(6, 0.3, 15);
  const PolicyTable pi(6, 2);
  const auto a = generate_single_policy(mdp, pi, 10, 5, "uniform");
  const auto b = generate_single_policy(mdp, pi, 4, 5, "uniform");
  for (std::size_t i = 0; i < 4; ++i) CHECK(a.trajectories[i] == b.trajectories[i]);
  CHECK(a.trajectories[7].collection_index == 7);
  CHECK(a.trajectories[0].policy_tag == std::optional<std::string>("uniform"));
  CHECK_THROWS_AS(generate_single_policy(mdp, pi, 0, 5), InputError);
}

TEST_CASE("top-fraction subsets") {
  Dataset d;
  for (int i = 0; i < 10; ++i) d.trajectories.push_back(make_trajectory(i, {{0, 0, 0, static_cast<double>(i % 5)}}));
  const auto top = subset_top_fraction(d, 0.25);
  REQUIRE(top.size() == 3);  // ceil(2.5)
  CHECK(top.trajectories[0].id == 4);
  CHECK(top.trajectories[1].id == 9);
  CHECK(top.trajectories[2].id == 3);
  CHECK(subset_top_fraction(d, 0.3).size() == 3);  // exact product, no round-up
  CHECK(subset_top_fraction(d, 0.01).size() == 1);
  CHECK(subset_top_fraction(d, 1.0).size() == 10);
  CHECK_THROWS_AS(subset_top_fraction(d, 0.0), InputError);
  CHECK(best_one_percent_mean(d) == 4.0);
}

TEST_CASE("dataset file round trip") {
  const auto d = small_dataset();
  std::stringstream buf;
  write_dataset(buf, d, {1, "00000000deadbeef", 2, 2});
  const auto text = buf.str();
  CHECK(text.rfind("{\"format_version\":1,\"env_hash\":\"00000000deadbeef\",\"n_states\":2,\"n_actions\":2}\n", 0) == 0);
  const auto back = read_dataset(buf);
  CHECK(back.data.trajectories == d.trajectories);
  CHECK(back.header.env_hash == "00000000deadbeef");
  // Shortest round-trip text: 1/3 survives exactly.
  CHECK(back.data.trajectories[1].steps[0].reward == 1.0 / 3.0);
}

TEST_CASE("malformed dataset lines are reported with their line number") {
  const std::string header = "{\"format_version\":1,\"env_hash\":\"x\",\"n_states\":2,\"n_actions\":2}\n";
  const std::string good = "{\"id\":0,\"collection_index\":0,\"return\":1,\"steps\":[[0,1,1,1]]}\n";
  auto line_of = [](const std::string& text) -> std::size_t {
    std::stringstream in(text);
    try {
      read_dataset(in);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of(header + good + "{not json}\n") == 3);
  CHECK(line_of(header + good + "{\"id\":1,\"collection_index\":1,\"return\":0,\"steps\":[]}\n") == 3);
  CHECK(line_of(header + "{\"id\":1,\"collection_index\":1,\"return\":0,\"steps\":[[0,5,1,0]]}\n") == 2);
  CHECK(line_of(header + "{\"id\":1,\"collection_index\":1,\"return\":9,\"steps\":[[0,1,1,0]]}\n") == 2);
  CHECK(line_of("{\"format_version\":2,\"env_hash\":\"x\",\"n_states\":2,\"n_actions\":2}\n") == 1);
  CHECK(line_of("") == 1);
  CHECK(line_of(header + good + good) == 3);
}

TEST_CASE("manifest") {
  auto d = small_dataset();
  const auto m = DatasetManifest::compute(d, "abc", {{"algo", "q_learning"}});
  CHECK(m.n_trajectories == 3);
  CHECK(m.collection_ordered);
  CHECK(m.return_max == doctest::Approx(1.0 / 3.0));
  CHECK(m.return_best1_mean == doctest::Approx(1.0 / 3.0));
  const auto back = DatasetManifest::from_json(m.to_json());
  CHECK(back.to_json() == m.to_json());
  std::swap(d.trajectories[0], d.trajectories[2]);
  CHECK_FALSE(DatasetManifest::compute(d, "abc", {}).collection_ordered);

  const auto dir = std::filesystem::temp_directory_path() / "coil_manifest_test";
  std::filesystem::create_directories(dir);
  save_manifest((dir / "m.json").string(), m);
  CHECK(load_manifest((dir / "m.json").string()).to_json() == m.to_json());
  save_dataset((dir / "d.jsonl").string(), d, {1, "abc", 2, 2});
  CHECK(load_dataset((dir / "d.jsonl").string()).data.trajectories == d.trajectories);
  CHECK_THROWS_AS(load_dataset((dir / "missing.jsonl").string()), InputError);
  std::filesystem::remove_all(dir);
}
