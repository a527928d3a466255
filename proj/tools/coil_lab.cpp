// coil_lab: dataset generation, training, evaluation, theory checks and plots.
//
// Exit codes: 0 success, 2 usage or input error, 3 training divergence,
// 4 violated theory check.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coil/analysis.hpp"
#include "coil/baselines.hpp"
#include "coil/curriculum.hpp"
#include "coil/datagen.hpp"
#include "coil/envs.hpp"
#include "coil/kernels.hpp"
#include "coil/stats.hpp"
#include "coil/textio.hpp"

namespace fs = std::filesystem;
using namespace coil;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitViolation = 4;

// ------------------------------------------------------------ run config

/// Sectioned key=value settings: "seed", "env.*", "agent.*", "coil.*",
/// "baseline.*". Later sources win: config file, then --set, then flags.
struct RunConfig {
  std::map<std::string, std::string> kv;

  void merge_file(const std::string& path) {
    for (auto& [k, v] : read_key_values_file(path)) kv[k] = v;
  }
  void merge_sets(const std::vector<std::string>& sets) {
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw InputError("--set expects key=value, got '" + s + "'");
      kv[std::string(trim(s.substr(0, eq)))] = std::string(trim(s.substr(eq + 1)));
    }
  }
  void put(const std::string& k, const std::string& v) { kv[k] = v; }
  bool has_section(const std::string& section) const {
    return std::any_of(kv.begin(), kv.end(), [&](const auto& p) { return p.first.rfind(section + ".", 0) == 0; });
  }

  std::uint64_t seed() const {
    auto it = kv.find("seed");
    return it == kv.end() ? 0 : static_cast<std::uint64_t>(parse_int64(it->second, "seed"));
  }

  template <class T>
  void apply(const std::string& section, T& target) const {
    const std::string prefix = section + ".";
    for (const auto& [k, v] : kv)
      if (k.rfind(prefix, 0) == 0) target.set(k.substr(prefix.size()), v);
  }

  void check_keys(std::initializer_list<const char*> sections) const {
    for (const auto& [k, v] : kv) {
      if (k == "seed") continue;
      bool ok = false;
      for (const char* s : sections) ok = ok || k.rfind(std::string(s) + ".", 0) == 0;
      if (!ok) throw InputError("unknown config key '" + k + "'");
    }
  }
};

void write_resolved(const fs::path& dir, const std::map<std::string, std::string>& kv) {
  std::ofstream out(dir / "config.txt");
  if (!out) throw InputError("cannot write " + (dir / "config.txt").string());
  write_key_values(out, kv);
}

template <class T>
void add_section(std::map<std::string, std::string>& kv, const std::string& section, const T& cfg) {
  for (const auto& [k, v] : cfg.to_key_values()) kv[section + "." + k] = v;
}

fs::path ensure_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw InputError("cannot create directory " + dir + ": " + ec.message());
  return p;
}

void apply_thread_cap() {
  if (const char* env = std::getenv("COIL_LAB_THREADS")) {
    const int n = parse_int(env, "COIL_LAB_THREADS");
    if (n < 1) throw InputError("COIL_LAB_THREADS must be at least 1");
    kernels::set_max_threads(n);
  }
}

// ------------------------------------------------------------ gen

struct GenArgs {
  std::string config, env, out = "out";
  std::vector<std::string> sets;
  int episodes = -1;
  std::int64_t seed = -1;
};

int cmd_gen(const GenArgs& a) {
  RunConfig rc;
  if (!a.config.empty()) rc.merge_file(a.config);
  rc.merge_sets(a.sets);
  if (!a.env.empty()) rc.put("env.kind", a.env);
  if (a.episodes >= 0) rc.put("agent.n_episodes", std::to_string(a.episodes));
  if (a.seed >= 0) rc.put("seed", std::to_string(a.seed));
  rc.check_keys({"env", "agent"});

  EnvSpec spec;
  rc.apply("env", spec);
  if (spec.kind == EnvKind::pointmass1d) throw InputError("gen writes discrete datasets; pointmass1d is not supported");
  OnlineAgentConfig agent;
  rc.apply("agent", agent);
  agent.seed = rc.seed();
  agent.validate();
  const auto mdp = build_env(spec);

  const auto dir = ensure_dir(a.out);
  const auto data = generate_final_buffer(mdp, agent);
  const std::string hash = env_hash(spec);
  save_dataset((dir / "dataset.jsonl").string(), data, {1, hash, mdp.n_states(), mdp.n_actions()});

  std::map<std::string, std::string> resolved{{"seed", std::to_string(agent.seed)}};
  add_section(resolved, "env", spec);
  add_section(resolved, "agent", agent);
  std::map<std::string, std::string> generator{{"algo", "q_learning"}};
  for (const auto& [k, v] : resolved) generator[k] = v;
  const auto manifest = DatasetManifest::compute(data, hash, generator);
  save_manifest((dir / "manifest.json").string(), manifest);
  write_resolved(dir, resolved);

  std::cout << "trajectories " << manifest.n_trajectories << '\n'
            << "return min " << format_real(manifest.return_min) << " mean " << format_real(manifest.return_mean)
            << " max " << format_real(manifest.return_max) << '\n'
            << "return best-1% mean " << format_real(manifest.return_best1_mean) << '\n'
            << "wrote " << (dir / "dataset.jsonl").string() << '\n';
  return 0;
}

// ------------------------------------------------------------ train

struct TrainArgs {
  std::string config, data, out = "run", algo = "coil", convention;
  std::vector<std::string> sets;
  double topk = -1.0;
  std::int64_t seed = -1;
};

/// Environment of a dataset: explicit env.* keys, else the manifest beside it.
EnvSpec resolve_env(const RunConfig& rc, const std::string& data_path, const std::string& expected_hash) {
  EnvSpec spec;
  if (rc.has_section("env")) {
    rc.apply("env", spec);
  } else {
    const auto manifest_path = fs::path(data_path).parent_path() / "manifest.json";
    if (!fs::exists(manifest_path))
      throw InputError("no env.* settings and no manifest.json next to " + data_path);
    const auto m = load_manifest(manifest_path.string());
    for (const auto& [k, v] : m.generator)
      if (k.rfind("env.", 0) == 0) spec.set(k.substr(4), v);
  }
  if (!expected_hash.empty() && env_hash(spec) != expected_hash)
    throw InputError("environment does not match the dataset (env_hash " + expected_hash + ")");
  return spec;
}

int cmd_train(const TrainArgs& a) {
  RunConfig rc;
  if (!a.config.empty()) rc.merge_file(a.config);
  rc.merge_sets(a.sets);
  if (a.seed >= 0) rc.put("seed", std::to_string(a.seed));
  if (!a.convention.empty()) rc.put("coil.filter_convention", a.convention);
  if (a.topk >= 0.0) rc.put("baseline.fraction", format_real(a.topk));
  rc.check_keys({"env", "coil", "baseline"});
  if (a.data.empty()) throw InputError("--data is required");

  const auto loaded = load_dataset(a.data);
  const auto spec = resolve_env(rc, a.data, loaded.header.env_hash);
  const auto mdp = build_env(spec);
  if (mdp.n_states() != loaded.header.n_states || mdp.n_actions() != loaded.header.n_actions)
    throw InputError("dataset shape does not match the environment");

  const auto dir = ensure_dir(a.out);
  std::map<std::string, std::string> resolved{{"seed", std::to_string(rc.seed())}};
  add_section(resolved, "env", spec);
  TrainResult<TabularSoftmaxPolicy> result;
  const TabularSoftmaxPolicy init(mdp.n_states(), mdp.n_actions());
  if (a.algo == "coil") {
    CoilConfig cfg;
    rc.apply("coil", cfg);
    cfg.seed = rc.seed();
    cfg.validate();
    add_section(resolved, "coil", cfg);
    write_resolved(dir, resolved);
    result = coil_train(loaded.data, mdp, init, cfg);
  } else {
    BaselineConfig cfg;
    rc.apply("baseline", cfg);
    cfg.kind = parse_baseline_kind(a.algo);
    cfg.seed = rc.seed();
    cfg.validate();
    add_section(resolved, "baseline", cfg);
    write_resolved(dir, resolved);
    result = run_baseline(loaded.data, mdp, init, cfg);
  }

  {
    std::ofstream log(dir / "log.csv");
    result.log.write_csv(log);
  }
  if (result.diverged) {
    std::cerr << "training diverged after " << result.log.records.size() << " records; partial log kept\n";
    return kExitDiverged;
  }
  save_checkpoint((dir / "policy.ckpt").string(), result.policy);
  const auto& recs = result.log.records;
  std::cout << "algo " << a.algo << '\n' << "curricula " << recs.size() << '\n';
  if (!recs.empty())
    std::cout << "grad steps " << recs.back().grad_steps << '\n'
              << "final eval return " << format_real(recs.back().eval_return_mean) << " +- "
              << format_real(recs.back().eval_return_std) << '\n';
  std::cout << "exact expected return " << format_real(expected_episode_return(mdp, result.policy.table())) << '\n';
  return 0;
}

// ------------------------------------------------------------ eval

struct EvalArgs {
  std::string config, checkpoint, data;
  std::vector<std::string> sets;
  int episodes = 100;
  std::int64_t seed = -1;
};

int cmd_eval(const EvalArgs& a) {
  RunConfig rc;
  if (!a.config.empty()) rc.merge_file(a.config);
  rc.merge_sets(a.sets);
  if (a.seed >= 0) rc.put("seed", std::to_string(a.seed));
  rc.check_keys({"env", "coil", "baseline", "agent"});
  if (a.checkpoint.empty()) throw InputError("--checkpoint is required");
  if (a.episodes < 1) throw InputError("--episodes must be at least 1");
  const auto policy = load_checkpoint(a.checkpoint);

  if (const auto* g = std::get_if<LinearGaussianPolicy>(&policy)) {
    const auto r = summarize(kernels::evaluate_returns(PointMass1d{}, *g, a.episodes, rc.seed()));
    std::cout << "episodes " << a.episodes << '\n'
              << "return mean " << format_real(r.mean) << " std " << format_real(r.stddev) << '\n';
    return 0;
  }
  const auto& tab = std::get<TabularSoftmaxPolicy>(policy);
  EnvSpec spec;
  if (!a.data.empty()) spec = resolve_env(rc, a.data, load_dataset(a.data).header.env_hash);
  else rc.apply("env", spec);
  const auto mdp = build_env(spec);
  if (mdp.n_states() != tab.n_states() || mdp.n_actions() != tab.n_actions())
    throw InputError("checkpoint shape does not match the environment");
  const auto table = tab.table();
  const auto r = summarize(kernels::evaluate_returns(mdp, table, a.episodes, rc.seed()));
  std::cout << "episodes " << a.episodes << '\n'
            << "return mean " << format_real(r.mean) << " std " << format_real(r.stddev) << '\n'
            << "exact expected return " << format_real(expected_episode_return(mdp, table)) << '\n';
  return 0;
}

// ------------------------------------------------------------ verify

struct VerifyArgs {
  std::string suite = "all", out = "verify";
  int trials = 1000;
  int draws = 100;
  int instances = 100;
  double delta = 0.1;
  std::int64_t seed = 0;
};

void print_exact(const ExactSuiteReport& r) {
  std::cout << std::left << std::setw(24) << r.name << (r.passed() ? "pass" : "FAIL") << "  trials " << r.trials
            << "  violations " << r.violations << "  max(lhs-rhs) " << format_real(r.max_excess) << '\n';
}

int cmd_verify(const VerifyArgs& a) {
  apply_thread_cap();
  static const std::vector<std::string> kSuites{"lemma", "thm1", "limitation", "init-gap", "criterion", "all"};
  if (std::find(kSuites.begin(), kSuites.end(), a.suite) == kSuites.end())
    throw InputError("unknown suite '" + a.suite + "'");
  if (a.trials < 1 || a.draws < 1 || a.instances < 1) throw InputError("trial counts must be positive");
  const auto dir = ensure_dir(a.out);
  const auto seed = static_cast<std::uint64_t>(a.seed);
  const bool all = a.suite == "all";
  bool ok = true;
  std::vector<ExactSuiteReport> exact;

  if (all || a.suite == "lemma") {
    exact.push_back(verify_joint_tv_lemma(a.trials, 8, derive_seed(seed, 1)));
    exact.push_back(verify_occupancy_proposition(a.instances, derive_seed(seed, 2)));
    exact.push_back(verify_observation_chain(a.trials, derive_seed(seed, 3)));
  }
  if (all || a.suite == "limitation") {
    exact.push_back(verify_limitation_suite(a.instances, derive_seed(seed, 4)));
    const auto gap = data_gap_study({10, 100, 1000, 10000}, 20, derive_seed(seed, 5));
    std::ofstream out(dir / "data_gap.csv");
    write_data_gap_csv(out, gap);
    std::cout << "data gap (20-seed mean):";
    for (std::size_t i = 0; i < gap.sizes.size(); ++i)
      std::cout << ' ' << gap.sizes[i] << ':' << format_real(gap.mean_gap[i]);
    std::cout << "\ndata gap non-increasing " << (gap.non_increasing() ? "yes" : "no") << "  log-log slope "
              << format_real(gap.log_slope) << '\n';
  }
  // Not part of "all": the order-statistic criterion and the fraction
  // condition disagree on boundary inputs (see README).
  if (a.suite == "criterion") exact.push_back(verify_criterion_equivalence(a.trials, derive_seed(seed, 6)));

  for (const auto& r : exact) {
    print_exact(r);
    ok = ok && r.passed();
  }
  if (!exact.empty()) {
    std::ofstream csv(dir / "exact.csv");
    write_exact_report_csv(csv, exact);
    const bool any = std::any_of(exact.begin(), exact.end(), [](const auto& r) { return !r.passed(); });
    if (any) {
      const auto path = dir / "counterexamples.jsonl";
      std::ofstream cx(path);
      write_counterexamples(cx, exact);
      std::cout << "counterexamples " << path.string() << '\n';
    }
  }

  if (all || a.suite == "thm1") {
    const auto study = theorem1_rate_study(a.draws, a.delta, derive_seed(seed, 7));
    std::ofstream out(dir / "thm1.csv");
    write_theorem1_csv(out, study);
    const bool pass = study.hold_rate() >= 1.0 - a.delta;
    std::cout << std::left << std::setw(24) << "bound_rate" << (pass ? "pass" : "FAIL") << "  holds " << study.holds
              << "/" << study.draws << "  rate " << format_real(study.hold_rate()) << "  required "
              << format_real(1.0 - a.delta) << '\n';
    ok = ok && pass;
  }

  if (all || a.suite == "init-gap") {
    const auto mdp = build_gridworld(5, 4, true, 40, 0.1, 0.99);
    OnlineAgentConfig agent;
    agent.seed = derive_seed(seed, 8);
    const auto checkpoints = q_learning_checkpoints(mdp, agent);
    InitGapConfig cfg;
    cfg.seed = derive_seed(seed, 9);
    const auto rows = initialization_gap_study(mdp, checkpoints, {"random", "third", "two_thirds", "expert"},
                                               checkpoints.back(), {1, 4, 16, 64}, cfg);
    std::ofstream out(dir / "init_gap.csv");
    write_init_gap_csv(out, rows);
    std::cout << "init-gap  expert value " << format_real(expected_episode_return(mdp, checkpoints.back())) << '\n';
    for (const auto& r : rows)
      std::cout << "  " << std::left << std::setw(11) << r.label << " demos " << std::setw(3) << r.n_demo
                << " return " << format_real(r.mean_return) << "  out-of-data " << format_real(r.mean_discrepancy)
                << '\n';
  }
  std::cout << (ok ? "all asserted properties hold" : "violations found") << " (reports in " << dir.string()
            << ")\n";
  return ok ? 0 : kExitViolation;
}

// ------------------------------------------------------------ plot

struct PlotArgs {
  std::vector<std::string> logs;
  std::string data, out = "plots";
  bool compare = false;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

struct Series {
  std::string name;
  std::vector<double> x, y;
  bool points = false;
};

std::string svg_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

std::string fmt_tick(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

void write_chart(const fs::path& path, const std::string& title, const std::string& xlabel, const std::string& ylabel,
                 const std::vector<Series>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << svg_escape(title)
      << "</text>\n"
      << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    out << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << fmt_tick(xv)
        << "</text>\n"
        << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt_tick(yv)
        << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << svg_escape(xlabel)
      << "</text>\n"
      << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << svg_escape(ylabel) << "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (s.points) {
      for (std::size_t i = 0; i < s.x.size(); ++i)
        out << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << color
            << "\"/>\n";
    } else {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i) out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      out << "\"/>\n";
    }
    out << "<text x=\"" << W - R - 150 << "\" y=\"" << T + 14 * (k + 1) << "\" fill=\"" << color << "\">"
        << svg_escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
}

void write_bars(const fs::path& path, const std::string& title, std::vector<double> values) {
  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  std::sort(values.begin(), values.end());
  double y0 = std::min(0.0, values.front()), y1 = std::max(0.0, values.back());
  if (y1 <= y0) y1 = y0 + 1;
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  const double bw = (W - L - R) / static_cast<double>(values.size());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << svg_escape(title)
      << "</text>\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double top = py(std::max(0.0, values[i])), bottom = py(std::min(0.0, values[i]));
    out << "<rect x=\"" << L + bw * static_cast<double>(i) << "\" y=\"" << top << "\" width=\"" << std::max(bw, 0.5)
        << "\" height=\"" << std::max(bottom - top, 0.5) << "\" fill=\"#1f77b4\"/>\n";
  }
  out << "<line x1=\"" << L << "\" y1=\"" << py(0) << "\" x2=\"" << W - R << "\" y2=\"" << py(0)
      << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0;
    out << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt_tick(yv)
        << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\">trajectories sorted by return</text>\n</svg>\n";
}

TrainingLog read_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  auto log = TrainingLog::read_csv(in);
  if (log.records.empty()) throw InputError(path + ": log has no records");
  return log;
}

std::string series_name(const std::string& path, const TrainingLog& log) {
  return log.baseline_kind ? *log.baseline_kind : fs::path(path).parent_path().filename().string() + " coil";
}

int cmd_plot(const PlotArgs& a) {
  if (a.logs.empty() && a.data.empty()) throw InputError("nothing to plot: give log files and/or --data");
  // Parse everything before writing anything.
  std::vector<TrainingLog> logs;
  for (const auto& p : a.logs) logs.push_back(read_log(p));
  std::optional<LoadedDataset> data;
  if (!a.data.empty()) data = load_dataset(a.data);
  std::map<std::int64_t, int> collection;
  if (data)
    for (const auto& t : data->data.trajectories) collection[t.id] = t.collection_index;

  const auto dir = ensure_dir(a.out);
  auto curve = [](const std::string& name, const TrainingLog& log) {
    Series s{name, {}, {}, false};
    for (const auto& r : log.records) {
      s.x.push_back(static_cast<double>(r.grad_steps));
      s.y.push_back(r.eval_return_mean);
    }
    return s;
  };
  auto scatter = [&](const std::string& name, const TrainingLog& log) {
    Series s{name, {}, {}, true};
    for (const auto& r : log.records)
      for (auto id : r.selected_ids) {
        auto it = collection.find(id);
        s.x.push_back(r.curriculum);
        s.y.push_back(it == collection.end() ? static_cast<double>(id) : it->second);
      }
    return s;
  };
  const std::string ylabel = data ? "collection index" : "trajectory id";

  if (a.compare && !logs.empty()) {
    std::vector<Series> curves, points;
    for (std::size_t i = 0; i < logs.size(); ++i) {
      curves.push_back(curve(series_name(a.logs[i], logs[i]), logs[i]));
      auto s = scatter(series_name(a.logs[i], logs[i]), logs[i]);
      if (!s.x.empty()) points.push_back(std::move(s));
    }
    write_chart(dir / "compare_curve.svg", "evaluation return", "gradient steps", "return", curves);
    if (!points.empty()) write_chart(dir / "compare_order.svg", "selected trajectories", "curriculum", ylabel, points);
    std::cout << "wrote " << (dir / "compare_curve.svg").string() << '\n';
  } else {
    for (std::size_t i = 0; i < logs.size(); ++i) {
      const std::string stem = logs.size() == 1 ? "" : std::to_string(i) + "_";
      const std::string name = series_name(a.logs[i], logs[i]);
      write_chart(dir / (stem + "curve.svg"), "evaluation return", "gradient steps", "return", {curve(name, logs[i])});
      auto s = scatter(name, logs[i]);
      if (!s.x.empty())
        write_chart(dir / (stem + "order.svg"), "selected trajectories", "curriculum", ylabel, {std::move(s)});
    }
  }
  if (data) {
    std::vector<double> returns;
    for (const auto& t : data->data.trajectories) returns.push_back(t.accumulated_return);
    write_bars(dir / "dataset_returns.svg", "dataset returns", std::move(returns));
  }
  std::cout << "plots in " << dir.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coil_lab: curriculum offline imitation learning on tabular toys"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a Q-learning final-buffer dataset");
  g->add_option("--config", gen.config, "key=value config file");
  g->add_option("--set", gen.sets, "override, e.g. env.slip=0.1");
  g->add_option("--env", gen.env, "chain | gridworld");
  g->add_option("--episodes", gen.episodes, "online training episodes");
  g->add_option("--seed", gen.seed, "global seed");
  g->add_option("--out", gen.out, "output directory")->capture_default_str();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train a policy on a dataset");
  t->add_option("--config", train.config, "key=value config file");
  t->add_option("--set", train.sets, "override, e.g. coil.alpha=0.9");
  t->add_option("--data", train.data, "dataset .jsonl")->required();
  t->add_option("--algo", train.algo, "coil | bc | rbc | bsbc")
      ->check(CLI::IsMember({"coil", "bc", "rbc", "bsbc"}))
      ->capture_default_str();
  t->add_option("--topk", train.topk, "fraction of best trajectories for --algo bc");
  t->add_option("--filter-convention", train.convention, "appendix | eq9")->check(CLI::IsMember({"appendix", "eq9"}));
  t->add_option("--seed", train.seed, "global seed");
  t->add_option("--out", train.out, "output directory")->capture_default_str();

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
  e->add_option("--config", eval.config, "key=value config file");
  e->add_option("--set", eval.sets, "override, e.g. env.kind=gridworld");
  e->add_option("--checkpoint", eval.checkpoint, "policy checkpoint")->required();
  e->add_option("--data", eval.data, "take the environment from this dataset's manifest");
  e->add_option("--episodes", eval.episodes, "rollouts")->capture_default_str();
  e->add_option("--seed", eval.seed, "evaluation seed");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "numerical checks of the theory");
  v->add_option("--suite", verify.suite, "lemma | thm1 | limitation | init-gap | criterion | all")
      ->check(CLI::IsMember({"lemma", "thm1", "limitation", "init-gap", "criterion", "all"}))
      ->capture_default_str();
  v->add_option("--trials", verify.trials, "lemma / observation / criterion cases")->capture_default_str();
  v->add_option("--draws", verify.draws, "bound draws")->capture_default_str();
  v->add_option("--instances", verify.instances, "proposition / limitation instances")->capture_default_str();
  v->add_option("--delta", verify.delta, "confidence parameter")->capture_default_str();
  v->add_option("--seed", verify.seed, "seed")->capture_default_str();
  v->add_option("--out", verify.out, "report directory")->capture_default_str();

  PlotArgs plot;
  auto* p = app.add_subcommand("plot", "SVG plots from training logs");
  p->add_option("logs", plot.logs, "log.csv files");
  p->add_option("--data", plot.data, "dataset: adds the return bar chart and maps ids to collection order");
  p->add_flag("--compare", plot.compare, "overlay all logs in one figure");
  p->add_option("--out", plot.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (g->parsed()) return cmd_gen(gen);
    if (t->parsed()) return cmd_train(train);
    if (e->parsed()) return cmd_eval(eval);
    if (v->parsed()) return cmd_verify(verify);
    if (p->parsed()) return cmd_plot(plot);
  } catch (const ParseError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  } catch (const InputError& err) {
    std::cerr << "error: " << err.what() << '\n' << app.help();
    return kExitUsage;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
