#pragma once
// Offline dataset production (Q-learning final buffers, frozen-checkpoint
// rollouts), top-fraction subsets, and the JSON-lines file format.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "coil/envs.hpp"
#include "coil/mdp.hpp"

namespace coil {

struct OnlineAgentConfig {
  double learning_rate = 0.1;
  double eps_start = 0.3;
  double eps_end = 0.02;
  int eps_decay_episodes = 200;  // linear decay, then constant
  int n_episodes = 400;
  double q_init = 5.0;  // optimistic start drives systematic exploration
  std::uint64_t seed = 0;

  void validate() const;
  double epsilon_at(int episode) const;
  std::map<std::string, std::string> to_key_values() const;
  void set(const std::string& key, const std::string& value);
};

struct QLearningRun {
  Dataset buffer;                            // every episode, collection_index = episode
  std::vector<std::vector<double>> q_snapshots;  // Q after the listed episodes
  std::vector<int> snapshot_episodes;
  std::vector<double> final_q;
};

/// epsilon-greedy tabular Q-learning. `snapshot_after` lists episode indices
/// after which the Q table is copied.
QLearningRun run_q_learning(const TabularMdp& mdp, const OnlineAgentConfig& cfg,
                            std::vector<int> snapshot_after = {});

Dataset generate_final_buffer(const TabularMdp& mdp, const OnlineAgentConfig& cfg);

/// epsilon-greedy table from Q: ties share the greedy mass equally.
PolicyTable epsilon_greedy_table(std::span<const double> q, int n_states, int n_actions, double epsilon);

/// Frozen agent policies: uniform random, then epsilon-greedy at 1/3, 2/3 and
/// the end of training (epsilon = cfg.eps_end).
std::vector<PolicyTable> q_learning_checkpoints(const TabularMdp& mdp, const OnlineAgentConfig& cfg);

/// n rollouts of a fixed policy; trajectory i uses stream derive_seed(seed, i).
Dataset generate_single_policy(const TabularMdp& mdp, const PolicyTable& policy, int n_trajectories,
                               std::uint64_t seed, const std::string& tag = "");

/// Indices sorted by (return desc, id asc).
std::vector<std::size_t> rank_by_return(const Dataset& data);

/// The ceil(fraction * N) highest-return trajectories, ties to the lower id,
/// kept in that rank order.
Dataset subset_top_fraction(const Dataset& data, double fraction);

struct DatasetHeader {
  int format_version = 1;
  std::string env_hash;
  int n_states = 0;
  int n_actions = 0;
};

struct LoadedDataset {
  DatasetHeader header;
  Dataset data;
};

void write_dataset(std::ostream& out, const Dataset& data, const DatasetHeader& header);
/// Throws ParseError with the 1-based line of the first malformed record.
LoadedDataset read_dataset(std::istream& in);
void save_dataset(const std::string& path, const Dataset& data, const DatasetHeader& header);
LoadedDataset load_dataset(const std::string& path);

/// One-line JSON of a single trajectory (same record layout as the file body).
std::string trajectory_record(const Trajectory& traj);

struct DatasetManifest {
  std::string env_hash;
  std::map<std::string, std::string> generator;
  std::size_t n_trajectories = 0;
  double return_min = 0.0;
  double return_mean = 0.0;
  double return_max = 0.0;
  double return_best1_mean = 0.0;  // mean of the top ceil(1%) returns
  bool collection_ordered = false;  // collection_index strictly increasing with file order

  static DatasetManifest compute(const Dataset& data, const std::string& env_hash,
                                 std::map<std::string, std::string> generator);
  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
};

void save_manifest(const std::string& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::string& path);

/// Mean return of the best 1% of trajectories.
double best_one_percent_mean(const Dataset& data);

}  // namespace coil
