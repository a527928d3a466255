#include "coil/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "coil/stats.hpp"
#include "coil/textio.hpp"

namespace coil {

using nlohmann::json;

// -------------------------------------------------------------- Q-learning

void OnlineAgentConfig::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw InputError("learning_rate must lie in (0, 1]");
  if (!(eps_start >= 0.0 && eps_start <= 1.0) || !(eps_end >= 0.0 && eps_end <= 1.0))
    throw InputError("epsilon must lie in [0, 1]");
  if (eps_decay_episodes < 0) throw InputError("eps_decay_episodes must be non-negative");
  if (n_episodes < 1) throw InputError("n_episodes must be at least 1");
  if (!std::isfinite(q_init)) throw InputError("q_init must be finite");
}

double OnlineAgentConfig::epsilon_at(int episode) const {
  if (eps_decay_episodes == 0 || episode >= eps_decay_episodes) return eps_end;
  const double frac = static_cast<double>(episode) / static_cast<double>(eps_decay_episodes);
  return eps_start + (eps_end - eps_start) * frac;
}

std::map<std::string, std::string> OnlineAgentConfig::to_key_values() const {
  return {{"algo", "q_learning"},
          {"learning_rate", format_real(learning_rate)},
          {"eps_start", format_real(eps_start)},
          {"eps_end", format_real(eps_end)},
          {"eps_decay_episodes", std::to_string(eps_decay_episodes)},
          {"n_episodes", std::to_string(n_episodes)},
          {"q_init", format_real(q_init)},
          {"seed", std::to_string(seed)}};
}

void OnlineAgentConfig::set(const std::string& key, const std::string& value) {
  if (key == "algo") {
    if (value != "q_learning") throw InputError("only algo = q_learning is supported");
  } else if (key == "learning_rate") learning_rate = parse_real(value, key);
  else if (key == "eps_start") eps_start = parse_real(value, key);
  else if (key == "eps_end") eps_end = parse_real(value, key);
  else if (key == "eps_decay_episodes") eps_decay_episodes = parse_int(value, key);
  else if (key == "n_episodes") n_episodes = parse_int(value, key);
  else if (key == "q_init") q_init = parse_real(value, key);
  else if (key == "seed") seed = static_cast<std::uint64_t>(parse_int64(value, key));
  else throw InputError("unknown agent key '" + key + "'");
}

namespace {

int greedy_action(std::span<const double> q_row, Rng& rng) {
  const double best = *std::max_element(q_row.begin(), q_row.end());
  int ties[64];
  int n = 0;
  for (std::size_t a = 0; a < q_row.size() && n < 64; ++a)
    if (q_row[a] == best) ties[n++] = static_cast<int>(a);
  return n == 1 ? ties[0] : ties[uniform_index(rng, static_cast<std::size_t>(n))];
}

}  // namespace

QLearningRun run_q_learning(const TabularMdp& mdp, const OnlineAgentConfig& cfg, std::vector<int> snapshot_after) {
  cfg.validate();
  const int n = mdp.n_states(), m = mdp.n_actions();
  std::vector<double> q(static_cast<std::size_t>(n) * m, cfg.q_init);
  for (int s = 0; s < n; ++s)
    if (mdp.is_absorbing(s))
      for (int a = 0; a < m; ++a) q[static_cast<std::size_t>(s) * m + a] = 0.0;

  Rng rng(cfg.seed);
  QLearningRun run;
  std::sort(snapshot_after.begin(), snapshot_after.end());
  run.snapshot_episodes = snapshot_after;
  std::size_t next_snapshot = 0;
  run.buffer.trajectories.reserve(static_cast<std::size_t>(cfg.n_episodes));

  for (int ep = 0; ep < cfg.n_episodes; ++ep) {
    const double eps = cfg.epsilon_at(ep);
    std::vector<Step> steps;
    int s = sample_categorical(mdp.initial_dist(), rng);
    for (int t = 0; t < mdp.horizon_cap(); ++t) {
      std::span<double> row(q.data() + static_cast<std::size_t>(s) * m, static_cast<std::size_t>(m));
      const int a = uniform01(rng) < eps ? static_cast<int>(uniform_index(rng, static_cast<std::size_t>(m)))
                                         : greedy_action(row, rng);
      const int s2 = sample_categorical(mdp.next_state_dist(s, a), rng);
      const double r = mdp.reward(s, a);
      double target = r;
      if (!mdp.is_absorbing(s2)) {
        const double* next = q.data() + static_cast<std::size_t>(s2) * m;
        target += mdp.gamma() * *std::max_element(next, next + m);
      }
      row[static_cast<std::size_t>(a)] += cfg.learning_rate * (target - row[static_cast<std::size_t>(a)]);
      if (!std::isfinite(row[static_cast<std::size_t>(a)])) throw DivergenceError();
      steps.push_back({s, a, s2, r});
      s = s2;
      if (mdp.is_absorbing(s)) break;
    }
    auto traj = make_trajectory(ep, std::move(steps), ep);
    traj.policy_tag = "q_learning";
    run.buffer.trajectories.push_back(std::move(traj));
    while (next_snapshot < snapshot_after.size() && snapshot_after[next_snapshot] == ep) {
      run.q_snapshots.push_back(q);
      ++next_snapshot;
    }
  }
  run.final_q = std::move(q);
  return run;
}

Dataset generate_final_buffer(const TabularMdp& mdp, const OnlineAgentConfig& cfg) {
  return run_q_learning(mdp, cfg).buffer;
}

PolicyTable epsilon_greedy_table(std::span<const double> q, int n_states, int n_actions, double epsilon) {
  if (q.size() != static_cast<std::size_t>(n_states) * n_actions) throw InputError("Q table shape mismatch");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw InputError("epsilon must lie in [0, 1]");
  PolicyTable table(n_states, n_actions);
  for (int s = 0; s < n_states; ++s) {
    auto row = q.subspan(static_cast<std::size_t>(s) * n_actions, static_cast<std::size_t>(n_actions));
    const double best = *std::max_element(row.begin(), row.end());
    const auto ties = static_cast<double>(std::count(row.begin(), row.end(), best));
    for (int a = 0; a < n_actions; ++a)
      table(s, a) = epsilon / n_actions + (row[static_cast<std::size_t>(a)] == best ? (1.0 - epsilon) / ties : 0.0);
  }
  return table;
}

std::vector<PolicyTable> q_learning_checkpoints(const TabularMdp& mdp, const OnlineAgentConfig& cfg) {
  const int third = std::max(cfg.n_episodes / 3 - 1, 0);
  const int two_thirds = std::max(2 * cfg.n_episodes / 3 - 1, 0);
  const auto run = run_q_learning(mdp, cfg, {third, two_thirds});
  std::vector<PolicyTable> out;
  out.emplace_back(mdp.n_states(), mdp.n_actions());
  for (const auto& q : run.q_snapshots)
    out.push_back(epsilon_greedy_table(q, mdp.n_states(), mdp.n_actions(), cfg.eps_end));
  out.push_back(epsilon_greedy_table(run.final_q, mdp.n_states(), mdp.n_actions(), cfg.eps_end));
  return out;
}

Dataset generate_single_policy(const TabularMdp& mdp, const PolicyTable& policy, int n_trajectories,
                               std::uint64_t seed, const std::string& tag) {
  if (n_trajectories < 1) throw InputError("n_trajectories must be at least 1");
  Dataset data;
  for (int i = 0; i < n_trajectories; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    auto traj = rollout(mdp, policy, rng, mdp.horizon_cap(), i);
    traj.collection_index = i;
    if (!tag.empty()) traj.policy_tag = tag;
    data.trajectories.push_back(std::move(traj));
  }
  return data;
}

// ------------------------------------------------------------------ subsets

std::vector<std::size_t> rank_by_return(const Dataset& data) {
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& ta = data.trajectories[a];
    const auto& tb = data.trajectories[b];
    if (ta.accumulated_return != tb.accumulated_return) return ta.accumulated_return > tb.accumulated_return;
    return ta.id < tb.id;
  });
  return order;
}

Dataset subset_top_fraction(const Dataset& data, double fraction) {
  if (data.empty()) throw InputError("empty dataset");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("fraction must lie in (0, 1]");
  const auto order = rank_by_return(data);
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(data.size()) - 1e-9));
  Dataset out;
  out.source_mdp_id = data.source_mdp_id;
  for (std::size_t i = 0; i < std::max<std::size_t>(k, 1); ++i) out.trajectories.push_back(data.trajectories[order[i]]);
  return out;
}

double best_one_percent_mean(const Dataset& data) {
  std::vector<double> returns;
  for (const auto& t : data.trajectories) returns.push_back(t.accumulated_return);
  return top_fraction_mean(returns, 0.01);
}

// ---------------------------------------------------------------- file I/O

std::string trajectory_record(const Trajectory& traj) {
  std::string out = "{\"id\":" + std::to_string(traj.id) + ",\"collection_index\":" +
                    std::to_string(traj.collection_index) + ",\"return\":" + format_real(traj.accumulated_return);
  if (traj.policy_tag) out += ",\"policy_tag\":" + json(*traj.policy_tag).dump();
  out += ",\"steps\":[";
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const auto& st = traj.steps[t];
    if (t) out += ',';
    out += '[' + std::to_string(st.state) + ',' + std::to_string(st.action) + ',' + std::to_string(st.next_state) + ',' +
           format_real(st.reward) + ']';
  }
  out += "]}";
  return out;
}

void write_dataset(std::ostream& out, const Dataset& data, const DatasetHeader& header) {
  out << "{\"format_version\":" << header.format_version << ",\"env_hash\":" << json(header.env_hash).dump()
      << ",\"n_states\":" << header.n_states << ",\"n_actions\":" << header.n_actions << "}\n";
  for (const auto& t : data.trajectories) out << trajectory_record(t) << '\n';
  if (!out) throw std::runtime_error("dataset write failed");
}

namespace {

template <class T>
T field(const json& j, const char* name, std::size_t line) {
  if (!j.contains(name)) throw ParseError(std::string("missing field '") + name + "'", line);
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("field '") + name + "' has the wrong type", line);
  }
}

Trajectory parse_record(const json& j, std::size_t line, const DatasetHeader& header) {
  if (!j.is_object()) throw ParseError("record is not an object", line);
  const auto& steps_json = j.contains("steps") ? j.at("steps") : throw ParseError("missing field 'steps'", line);
  if (!steps_json.is_array()) throw ParseError("'steps' is not an array", line);
  if (steps_json.empty()) throw ParseError("empty trajectory", line);
  std::vector<Step> steps;
  steps.reserve(steps_json.size());
  for (const auto& sj : steps_json) {
    if (!sj.is_array() || sj.size() != 4 || !sj[0].is_number_integer() || !sj[1].is_number_integer() ||
        !sj[2].is_number_integer() || !sj[3].is_number())
      throw ParseError("step must be [s, a, s2, r]", line);
    Step st{sj[0].get<int>(), sj[1].get<int>(), sj[2].get<int>(), sj[3].get<double>()};
    if (st.state < 0 || st.state >= header.n_states || st.next_state < 0 || st.next_state >= header.n_states ||
        st.action < 0 || st.action >= header.n_actions)
      throw ParseError("step index out of range", line);
    steps.push_back(st);
  }
  Trajectory traj;
  try {
    traj = make_trajectory(field<std::int64_t>(j, "id", line), std::move(steps),
                           field<int>(j, "collection_index", line));
  } catch (const ParseError&) {
    throw;
  } catch (const InputError& e) {
    throw ParseError(e.what(), line);
  }
  const double stored = field<double>(j, "return", line);
  if (std::abs(stored - traj.accumulated_return) > 1e-9) throw ParseError("return does not match step rewards", line);
  traj.accumulated_return = stored;
  if (j.contains("policy_tag")) traj.policy_tag = field<std::string>(j, "policy_tag", line);
  return traj;
}

}  // namespace

LoadedDataset read_dataset(std::istream& in) {
  LoadedDataset out;
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++lineno;
  json head;
  try {
    head = json::parse(line);
  } catch (const json::exception&) {
    throw ParseError("malformed header", lineno);
  }
  if (!head.is_object()) throw ParseError("malformed header", lineno);
  out.header.format_version = field<int>(head, "format_version", lineno);
  if (out.header.format_version != 1)
    throw ParseError("unsupported format_version " + std::to_string(out.header.format_version), lineno);
  out.header.env_hash = field<std::string>(head, "env_hash", lineno);
  out.header.n_states = field<int>(head, "n_states", lineno);
  out.header.n_actions = field<int>(head, "n_actions", lineno);
  if (out.header.n_states < 1 || out.header.n_actions < 1) throw ParseError("header dimensions must be positive", lineno);
  out.data.source_mdp_id = out.header.env_hash;

  std::unordered_set<std::int64_t> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      throw ParseError("malformed record", lineno);
    }
    auto traj = parse_record(j, lineno, out.header);
    if (!seen.insert(traj.id).second) throw ParseError("duplicate trajectory id", lineno);
    out.data.trajectories.push_back(std::move(traj));
  }
  return out;
}

void save_dataset(const std::string& path, const Dataset& data, const DatasetHeader& header) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path + " for writing");
  write_dataset(out, data, header);
}

LoadedDataset load_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return read_dataset(in);
}

// --------------------------------------------------------------- manifest

DatasetManifest DatasetManifest::compute(const Dataset& data, const std::string& env_hash,
                                         std::map<std::string, std::string> generator) {
  if (data.empty()) throw InputError("empty dataset");
  DatasetManifest m;
  m.env_hash = env_hash;
  m.generator = std::move(generator);
  m.n_trajectories = data.size();
  std::vector<double> returns;
  for (const auto& t : data.trajectories) returns.push_back(t.accumulated_return);
  const auto s = summarize(returns);
  m.return_min = s.min;
  m.return_mean = s.mean;
  m.return_max = s.max;
  m.return_best1_mean = top_fraction_mean(returns, 0.01);
  m.collection_ordered = true;
  for (std::size_t i = 1; i < data.size(); ++i)
    if (data.trajectories[i].collection_index <= data.trajectories[i - 1].collection_index) m.collection_ordered = false;
  return m;
}

std::string DatasetManifest::to_json() const {
  json j;
  j["env_hash"] = env_hash;
  j["generator"] = generator;
  j["n_trajectories"] = n_trajectories;
  j["return_min"] = return_min;
  j["return_mean"] = return_mean;
  j["return_max"] = return_max;
  j["return_best1_mean"] = return_best1_mean;
  j["collection_ordered"] = collection_ordered;
  return j.dump(2) + "\n";
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception&) {
    throw ParseError("malformed manifest", 0);
  }
  DatasetManifest m;
  m.env_hash = field<std::string>(j, "env_hash", 0);
  m.generator = field<std::map<std::string, std::string>>(j, "generator", 0);
  m.n_trajectories = field<std::size_t>(j, "n_trajectories", 0);
  m.return_min = field<double>(j, "return_min", 0);
  m.return_mean = field<double>(j, "return_mean", 0);
  m.return_max = field<double>(j, "return_max", 0);
  m.return_best1_mean = field<double>(j, "return_best1_mean", 0);
  m.collection_ordered = field<bool>(j, "collection_ordered", 0);
  return m;
}

void save_manifest(const std::string& path, const DatasetManifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << manifest.to_json();
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return DatasetManifest::from_json(ss.str());
}

}  // namespace coil
