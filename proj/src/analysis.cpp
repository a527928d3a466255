#include "coil/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <json.hpp>

#include "coil/curriculum.hpp"
#include "coil/datagen.hpp"
#include "coil/envs.hpp"
#include "coil/stats.hpp"
#include "coil/textio.hpp"

namespace coil {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxCounterexamples = 5;

double half_l1(std::span<const double> p, std::span<const double> q) {
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return 0.5 * total;
}

int uniform_int(Rng& rng, int lo, int hi) {  // inclusive
  return lo + static_cast<int>(uniform_index(rng, static_cast<std::size_t>(hi - lo + 1)));
}

/// Per-trial outcome; merged in trial order so reports are deterministic.
struct TrialOutcome {
  double lhs = 0.0;
  double rhs = 0.0;
  bool violated = false;
  std::string record;
};

template <class Fn>
ExactSuiteReport run_trials(const std::string& name, int n, std::uint64_t seed, Fn&& trial) {
  if (n < 1) throw InputError("trial count must be at least 1");
  std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 4)
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    outcomes[static_cast<std::size_t>(i)] = trial(rng);
  }
  ExactSuiteReport report;
  report.name = name;
  report.trials = n;
  for (int i = 0; i < n; ++i) {
    const auto& o = outcomes[static_cast<std::size_t>(i)];
    report.max_excess = std::max(report.max_excess, o.lhs - o.rhs);
    if (!o.violated) continue;
    ++report.violations;
    if (report.counterexamples.size() < kMaxCounterexamples)
      report.counterexamples.push_back({name, derive_seed(seed, static_cast<std::uint64_t>(i)), o.lhs, o.rhs, o.record});
  }
  return report;
}

json table_json(const PolicyTable& t) { return json(std::vector<double>(t.data().begin(), t.data().end())); }

json mdp_json(const TabularMdp& mdp) {
  std::vector<double> trans, reward;
  for (int s = 0; s < mdp.n_states(); ++s)
    for (int a = 0; a < mdp.n_actions(); ++a) {
      auto row = mdp.next_state_dist(s, a);
      trans.insert(trans.end(), row.begin(), row.end());
      reward.push_back(mdp.reward(s, a));
    }
  return json{{"n_states", mdp.n_states()},
              {"n_actions", mdp.n_actions()},
              {"gamma", mdp.gamma()},
              {"transition", trans},
              {"reward", reward},
              {"initial_dist", std::vector<double>(mdp.initial_dist().begin(), mdp.initial_dist().end())}};
}

}  // namespace

// ------------------------------------------------------------ joint TV lemma

JointTvTerms joint_tv_terms(std::span<const double> rho1, std::span<const double> rho2, int nx, int ny) {
  if (nx < 1 || ny < 1 || rho1.size() != static_cast<std::size_t>(nx) * ny || rho2.size() != rho1.size())
    throw InputError("joint table shape mismatch");
  JointTvTerms t;
  t.joint = tv_distance(rho1, rho2);
  const double z1 = std::accumulate(rho1.begin(), rho1.end(), 0.0);
  const double z2 = std::accumulate(rho2.begin(), rho2.end(), 0.0);
  std::vector<double> m1(static_cast<std::size_t>(ny), 0.0), m2(static_cast<std::size_t>(ny), 0.0);
  for (int x = 0; x < nx; ++x)
    for (int y = 0; y < ny; ++y) {
      m1[static_cast<std::size_t>(y)] += rho1[static_cast<std::size_t>(x) * ny + y] / z1;
      m2[static_cast<std::size_t>(y)] += rho2[static_cast<std::size_t>(x) * ny + y] / z2;
    }
  t.marginal = half_l1(m1, m2);
  std::vector<double> c1(static_cast<std::size_t>(nx)), c2(static_cast<std::size_t>(nx));
  for (int y = 0; y < ny; ++y) {
    const double w = m2[static_cast<std::size_t>(y)];
    if (w == 0.0) continue;
    for (int x = 0; x < nx; ++x) {
      const double a = rho1[static_cast<std::size_t>(x) * ny + y] / z1;
      const double b = rho2[static_cast<std::size_t>(x) * ny + y] / z2;
      c1[static_cast<std::size_t>(x)] = m1[static_cast<std::size_t>(y)] > 0.0 ? a / m1[static_cast<std::size_t>(y)] : 1.0 / nx;
      c2[static_cast<std::size_t>(x)] = b / w;
    }
    t.conditional += w * half_l1(c1, c2);
  }
  return t;
}

JointTvTerms occupancy_tv_terms(const OccupancyTable& a, const OccupancyTable& b) {
  if (a.n_states != b.n_states || a.n_actions != b.n_actions) throw InputError("occupancy shape mismatch");
  // rho_sa is [s][a]; the lemma's x is the action and y the state.
  std::vector<double> ja(a.rho_sa.size()), jb(b.rho_sa.size());
  for (int s = 0; s < a.n_states; ++s)
    for (int act = 0; act < a.n_actions; ++act) {
      ja[static_cast<std::size_t>(act) * a.n_states + s] = a.sa(s, act);
      jb[static_cast<std::size_t>(act) * a.n_states + s] = b.sa(s, act);
    }
  return joint_tv_terms(ja, jb, a.n_actions, a.n_states);
}

std::vector<double> random_distribution(std::size_t n, Rng& rng, bool sparse) {
  if (n == 0) throw InputError("empty distribution");
  std::vector<double> p(n);
  double z = 0.0;
  for (auto& v : p) {
    double u = uniform01(rng);
    while (u <= 0.0) u = uniform01(rng);
    v = (sparse && uniform01(rng) < 1.0 / 3.0) ? 0.0 : -std::log(u);
    z += v;
  }
  if (z == 0.0) {
    p[uniform_index(rng, n)] = 1.0;
    return p;
  }
  for (auto& v : p) v /= z;
  return p;
}

ExactSuiteReport verify_joint_tv_lemma(int n_trials, int max_dim, std::uint64_t seed) {
  if (max_dim < 1 || max_dim > 8) throw InputError("grid sizes are limited to 8 x 8");
  return run_trials("lemma", n_trials, seed, [max_dim](Rng& rng) {
    const int nx = uniform_int(rng, 1, max_dim), ny = uniform_int(rng, 1, max_dim);
    const auto n = static_cast<std::size_t>(nx) * ny;
    const int mode = uniform_int(rng, 0, 9);
    auto rho1 = random_distribution(n, rng, mode >= 5);
    std::vector<double> rho2;
    if (mode == 0) {
      rho2 = rho1;  // identical
    } else if (mode == 1) {
      // shared conditionals, different marginals
      const auto cond = random_distribution(static_cast<std::size_t>(nx), rng);
      const auto my1 = random_distribution(static_cast<std::size_t>(ny), rng);
      const auto my2 = random_distribution(static_cast<std::size_t>(ny), rng);
      rho2.resize(n);
      for (int x = 0; x < nx; ++x)
        for (int y = 0; y < ny; ++y) {
          rho1[static_cast<std::size_t>(x) * ny + y] = cond[static_cast<std::size_t>(x)] * my1[static_cast<std::size_t>(y)];
          rho2[static_cast<std::size_t>(x) * ny + y] = cond[static_cast<std::size_t>(x)] * my2[static_cast<std::size_t>(y)];
        }
    } else {
      rho2 = random_distribution(n, rng, mode >= 7);
    }
    const auto t = joint_tv_terms(rho1, rho2, nx, ny);
    TrialOutcome o{t.joint, t.rhs(), t.joint > t.rhs() + kExactSlack, {}};
    if (o.violated)
      o.record = json{{"kind", "lemma"}, {"nx", nx}, {"ny", ny}, {"rho1", rho1}, {"rho2", rho2},
                      {"lhs", t.joint}, {"rhs", t.rhs()}}.dump();
    return o;
  });
}

TabularMdp random_mdp(int n_states, int n_actions, Rng& rng, double gamma, int horizon_cap) {
  std::vector<double> trans, reward;
  for (int s = 0; s < n_states; ++s)
    for (int a = 0; a < n_actions; ++a) {
      auto row = random_distribution(static_cast<std::size_t>(n_states), rng);
      trans.insert(trans.end(), row.begin(), row.end());
      reward.push_back(uniform01(rng));
    }
  // Renormalize in long double so rows sum to 1 within the constructor's 1e-12.
  for (std::size_t i = 0; i < trans.size(); i += static_cast<std::size_t>(n_states)) {
    long double z = 0.0L;
    for (int k = 0; k < n_states; ++k) z += trans[i + k];
    for (int k = 0; k < n_states; ++k) trans[i + k] = static_cast<double>(trans[i + k] / z);
  }
  auto rho0 = random_distribution(static_cast<std::size_t>(n_states), rng);
  return TabularMdp(n_states, n_actions, std::move(trans), std::move(reward), gamma, std::move(rho0), horizon_cap);
}

PolicyTable random_policy(int n_states, int n_actions, Rng& rng, bool sparse) {
  std::vector<double> probs;
  for (int s = 0; s < n_states; ++s) {
    auto row = random_distribution(static_cast<std::size_t>(n_actions), rng, sparse);
    probs.insert(probs.end(), row.begin(), row.end());
  }
  return PolicyTable(n_states, n_actions, std::move(probs));
}

ExactSuiteReport verify_occupancy_proposition(int n_triples, std::uint64_t seed) {
  return run_trials("proposition", n_triples, seed, [](Rng& rng) {
    const int ns = uniform_int(rng, 2, 8), na = uniform_int(rng, 2, 4);
    const auto mdp = random_mdp(ns, na, rng, 0.5 + 0.49 * uniform01(rng));
    const auto pi = random_policy(ns, na, rng, uniform01(rng) < 0.3);
    const auto pib = random_policy(ns, na, rng, uniform01(rng) < 0.3);
    const auto occ = occupancy_measure(mdp, pi, true);
    const auto occ_b = occupancy_measure(mdp, pib, true);
    const double lhs = tv_distance(occ.rho_sa, occ_b.rho_sa);
    double expected_policy_tv = 0.0;
    for (int s = 0; s < ns; ++s) expected_policy_tv += occ_b.rho_s[static_cast<std::size_t>(s)] * half_l1(pi.row(s), pib.row(s));
    const double rhs = tv_distance(occ.rho_s, occ_b.rho_s) + expected_policy_tv;
    TrialOutcome o{lhs, rhs, lhs > rhs + kExactSlack, {}};
    if (o.violated)
      o.record = json{{"kind", "proposition"}, {"mdp", mdp_json(mdp)}, {"pi", table_json(pi)}, {"pi_b", table_json(pib)},
                      {"lhs", lhs}, {"rhs", rhs}}.dump();
    return o;
  });
}

namespace {

struct FuzzCase {
  std::vector<double> probs;
  double beta = 0.0;
  double eps_c = 0.0;
};

FuzzCase fuzz_case(Rng& rng) {
  FuzzCase c;
  const int n = uniform_int(rng, 1, 60);
  c.eps_c = std::max(uniform01(rng), 1e-3);
  // Boundary-heavy betas: half the cases sit exactly on k / n.
  c.beta = uniform01(rng) < 0.5 ? static_cast<double>(uniform_int(rng, 0, n - 1)) / n : 0.999 * uniform01(rng);
  c.probs.resize(static_cast<std::size_t>(n));
  for (auto& p : c.probs) {
    const double u = uniform01(rng);
    if (u < 0.2) p = c.eps_c;  // ties with the threshold
    else if (u < 0.6) p = c.eps_c + (1.0 - c.eps_c) * uniform01(rng);
    else p = c.eps_c * uniform01(rng);
  }
  return c;
}

json fuzz_json(const FuzzCase& c) { return json{{"probs", c.probs}, {"beta", c.beta}, {"eps_c", c.eps_c}}; }

}  // namespace

ExactSuiteReport verify_observation_chain(int n_cases, std::uint64_t seed) {
  return run_trials("observation", n_cases, seed, [](Rng& rng) {
    const auto c = fuzz_case(rng);
    TrialOutcome o;
    if (!neighboring_condition_from_probs(c.probs, c.beta, c.eps_c)) {
      o.lhs = -1.0;  // vacuous
      return o;
    }
    const double mean = std::accumulate(c.probs.begin(), c.probs.end(), 0.0) / static_cast<double>(c.probs.size());
    const double bound = (1.0 - c.beta) * c.eps_c;
    // Reported as lhs <= rhs: the bound must not exceed the mean.
    o.lhs = bound;
    o.rhs = mean;
    o.violated = bound > mean + kExactSlack;
    if (o.violated) o.record = json{{"kind", "observation"}, {"case", fuzz_json(c)}, {"mean", mean}, {"bound", bound}}.dump();
    return o;
  });
}

ExactSuiteReport verify_criterion_equivalence(int n_cases, std::uint64_t seed) {
  return run_trials("criterion_equivalence", n_cases, seed, [](Rng& rng) {
    const auto c = fuzz_case(rng);
    auto sorted = c.probs;
    const double crit = criterion_from_probs(sorted, c.beta);
    const bool by_criterion = crit >= c.eps_c;
    const bool by_fraction = neighboring_condition_from_probs(c.probs, c.beta, c.eps_c);
    TrialOutcome o;
    o.lhs = by_criterion ? 1.0 : 0.0;
    o.rhs = by_fraction ? 1.0 : 0.0;
    o.violated = by_criterion != by_fraction;
    if (o.violated)
      o.record = json{{"kind", "criterion_equivalence"}, {"case", fuzz_json(c)}, {"criterion", crit},
                      {"criterion_clears", by_criterion}, {"fraction_holds", by_fraction}}.dump();
    return o;
  });
}

// ------------------------------------------------------------ BC bound

std::pair<double, double> hoeffding_terms(int n_states, int n_actions, std::size_t n_pairs, double delta) {
  if (n_pairs == 0) throw InputError("|D| must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InputError("delta must lie in (0, 1)");
  const double d = static_cast<double>(n_pairs);
  const double log_pi = static_cast<double>(n_states) * std::log(static_cast<double>(n_actions));
  return {std::sqrt((std::log(static_cast<double>(n_states)) + std::log(2.0 / delta)) / (2.0 * d)),
          std::sqrt((log_pi + std::log(2.0 / delta)) / (2.0 * d))};
}

BoundReport compute_theorem1_bound(const TabularMdp& mdp, const PolicyTable& pi_learner, const PolicyTable& pi_0,
                                   const PolicyTable& pi_b, const Dataset& data, double delta) {
  const std::size_t n_pairs = data.n_pairs();
  if (n_pairs == 0) throw InputError("|D| must be positive");
  const int ns = mdp.n_states(), na = mdp.n_actions();
  const auto occ = occupancy_measure(mdp, pi_learner, true);
  const auto occ_0 = occupancy_measure(mdp, pi_0, true);
  const auto occ_b = occupancy_measure(mdp, pi_b, true);
  const auto occ_hat = occupancy_measure(mdp, empirical_behavior_policy(data, ns, na), true);
  const auto visits = state_visit_counts(data, ns);

  double outside_b = 0.0, outside_gap = 0.0, init_gap = 0.0, inside_gap = 0.0;
  for (int s = 0; s < ns; ++s) {
    const auto i = static_cast<std::size_t>(s);
    if (visits[i] == 0) {
      outside_b += occ_b.rho_s[i];
      outside_gap += std::abs(occ.rho_s[i] - occ_0.rho_s[i]);
      init_gap += std::abs(occ_0.rho_s[i] - occ_b.rho_s[i]);
    } else {
      inside_gap += std::abs(occ.rho_s[i] - occ_hat.rho_s[i]);
    }
  }
  std::size_t mismatches = 0;
  for (const auto& t : data.trajectories)
    for (const auto& st : t.steps) mismatches += pi_learner.argmax(st.state) != st.action ? 1 : 0;
  const auto [h_states, h_policies] = hoeffding_terms(ns, na, n_pairs, delta);

  BoundReport r;
  r.delta = delta;
  r.n_pairs = n_pairs;
  r.lhs = tv_distance(occ.rho_sa, occ_b.rho_sa);
  r.rhs_terms = {{"mass_outside_data", 0.5 * outside_b},
                 {"state_marginal_gap", 0.5 * outside_gap},
                 {"initialization_gap", 0.5 * init_gap},
                 {"bc_gap_state_term", 0.5 * inside_gap},
                 {"bc_gap_empirical_error", static_cast<double>(mismatches) / static_cast<double>(n_pairs)},
                 {"data_gap_hoeffding_states", h_states},
                 {"data_gap_hoeffding_policies", h_policies}};
  r.rhs_total = 0.0;
  for (const auto& [k, v] : r.rhs_terms) r.rhs_total += v;
  r.holds = r.lhs <= r.rhs_total + 1e-12;
  return r;
}

Theorem1Study theorem1_rate_study(int draws, double delta, std::uint64_t seed) {
  if (draws < 1) throw InputError("draws must be at least 1");
  Theorem1Study study;
  study.draws = draws;
  study.reports.resize(static_cast<std::size_t>(draws));
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < draws; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const int ns = uniform_int(rng, 3, 12), na = uniform_int(rng, 2, 4);
    const auto mdp = random_mdp(ns, na, rng, 0.9, 20);
    const auto pi_b = random_policy(ns, na, rng);
    const std::size_t target = static_cast<std::size_t>(uniform_int(rng, 50, 500));
    Dataset data;
    std::int64_t id = 0;
    while (data.n_pairs() < target) {
      Rng roll(derive_seed(rng(), static_cast<std::uint64_t>(id)));
      data.trajectories.push_back(rollout(mdp, pi_b, roll, mdp.horizon_cap(), id));
      ++id;
    }
    const PolicyTable pi_0(ns, na);
    TabularSoftmaxPolicy learner(ns, na);
    BcTrainer<TabularSoftmaxPolicy> trainer({0.5, 64, OptimizerKind::sgd}, rng());
    trainer.train(learner, std::span<const Trajectory>(data.trajectories), 300);
    study.reports[static_cast<std::size_t>(i)] = compute_theorem1_bound(mdp, learner.table(), pi_0, pi_b, data, delta);
  }
  for (const auto& r : study.reports) study.holds += r.holds ? 1 : 0;
  return study;
}

// ------------------------------------------------------------ limitation

LimitationReport verify_limitation_decomposition(const TabularMdp& mdp_in, const PolicyTable& pi_e,
                                                 const PolicyTable& pi_b, const Dataset& data, double gamma) {
  const auto mdp = mdp_in.with_gamma(gamma);
  const auto pi_hat = empirical_behavior_policy(data, mdp.n_states(), mdp.n_actions());
  const auto occ_e = occupancy_measure(mdp, pi_e, true);
  const auto occ_b = occupancy_measure(mdp, pi_b, true);
  const auto occ_hat = occupancy_measure(mdp, pi_hat, true);
  LimitationReport r;
  r.lhs = tv_distance(occ_e.rho_sa, occ_b.rho_sa);
  r.state_term = tv_distance(occ_e.rho_s, occ_hat.rho_s);
  for (int s = 0; s < mdp.n_states(); ++s) r.policy_term = std::max(r.policy_term, half_l1(pi_e.row(s), pi_hat.row(s)));
  r.data_gap = tv_distance(occ_hat.rho_sa, occ_b.rho_sa);
  return r;
}

ExactSuiteReport verify_limitation_suite(int n_instances, std::uint64_t seed) {
  return run_trials("limitation", n_instances, seed, [](Rng& rng) {
    const int ns = uniform_int(rng, 2, 10), na = uniform_int(rng, 2, 4);
    const double gamma = 0.5 + 0.49 * uniform01(rng);
    const auto mdp = random_mdp(ns, na, rng, gamma, uniform_int(rng, 5, 30));
    const auto pi_b = random_policy(ns, na, rng, uniform01(rng) < 0.3);
    const auto pi_e = random_policy(ns, na, rng, uniform01(rng) < 0.3);
    const auto data = generate_single_policy(mdp, pi_b, uniform_int(rng, 1, 30), rng());
    const auto r = verify_limitation_decomposition(mdp, pi_e, pi_b, data, gamma);
    TrialOutcome o{r.lhs, r.rhs(), !r.holds(), {}};
    if (o.violated) {
      json traj = json::array();
      for (const auto& t : data.trajectories) traj.push_back(json::parse(trajectory_record(t)));
      o.record = json{{"kind", "limitation"}, {"mdp", mdp_json(mdp)}, {"pi_e", table_json(pi_e)},
                      {"pi_b", table_json(pi_b)}, {"data", traj}, {"lhs", r.lhs}, {"rhs", r.rhs()}}.dump();
    }
    return o;
  });
}

bool DataGapStudy::non_increasing() const {
  for (std::size_t i = 1; i < mean_gap.size(); ++i)
    if (mean_gap[i] > mean_gap[i - 1]) return false;
  return true;
}

DataGapStudy data_gap_study(const std::vector<int>& sizes, int n_seeds, std::uint64_t seed) {
  if (sizes.empty() || n_seeds < 1) throw InputError("data gap study needs sizes and seeds");
  Rng inst(derive_seed(seed, 0));
  const auto mdp = random_mdp(8, 3, inst, 0.9, 20);
  const auto pi_b = random_policy(8, 3, inst);
  const auto occ_b = occupancy_measure(mdp, pi_b, true);

  DataGapStudy study;
  study.sizes = sizes;
  study.per_seed.assign(sizes.size(), std::vector<double>(static_cast<std::size_t>(n_seeds)));
  const int jobs = static_cast<int>(sizes.size()) * n_seeds;
#pragma omp parallel for schedule(dynamic, 1)
  for (int job = 0; job < jobs; ++job) {
    const int i = job / n_seeds, k = job % n_seeds;
    const auto data = generate_single_policy(mdp, pi_b, sizes[static_cast<std::size_t>(i)],
                                             derive_seed(seed, 1 + static_cast<std::uint64_t>(job)));
    const auto pi_hat = empirical_behavior_policy(data, 8, 3);
    const auto occ_hat = occupancy_measure(mdp, pi_hat, true);
    study.per_seed[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = tv_distance(occ_hat.rho_sa, occ_b.rho_sa);
  }
  std::vector<double> log_size, log_gap;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    study.mean_gap.push_back(summarize(study.per_seed[i]).mean);
    log_size.push_back(std::log(static_cast<double>(sizes[i])));
    log_gap.push_back(std::log(std::max(study.mean_gap.back(), 1e-300)));
  }
  study.log_slope = sizes.size() >= 2 ? linear_slope(log_size, log_gap) : 0.0;
  return study;
}

// ------------------------------------------------------------ initialization

std::vector<InitGapRow> initialization_gap_study(const TabularMdp& mdp, const std::vector<PolicyTable>& checkpoints,
                                                 const std::vector<std::string>& labels,
                                                 const PolicyTable& demo_policy, const std::vector<int>& demo_sizes,
                                                 const InitGapConfig& cfg) {
  if (checkpoints.empty() || demo_sizes.empty()) throw InputError("init-gap study needs checkpoints and demo sizes");
  if (labels.size() != checkpoints.size()) throw InputError("one label per checkpoint");
  if (cfg.n_seeds < 1) throw InputError("n_seeds must be at least 1");
  const std::size_t nc = checkpoints.size(), nd = demo_sizes.size();
  const auto seeds = static_cast<std::size_t>(cfg.n_seeds);
  std::vector<double> ret(nc * nd * seeds), disc(nc * nd * seeds);
  const int jobs = static_cast<int>(nc * nd * seeds);
#pragma omp parallel for schedule(dynamic, 1)
  for (int job = 0; job < jobs; ++job) {
    const auto j = static_cast<std::size_t>(job);
    const std::size_t c = j / (nd * seeds), d = (j / seeds) % nd, k = j % seeds;
    // The demo depends on (size, seed) only, so every checkpoint imitates the same data.
    const auto demo = generate_single_policy(mdp, demo_policy, demo_sizes[d],
                                             derive_seed(cfg.seed, 1000 * k + static_cast<std::uint64_t>(demo_sizes[d])));
    auto policy = TabularSoftmaxPolicy::from_table(checkpoints[c]);
    BcTrainer<TabularSoftmaxPolicy> trainer(cfg.bc, derive_seed(cfg.seed, 7 + 1000 * k + d));
    trainer.train(policy, std::span<const Trajectory>(demo.trajectories), cfg.bc_steps);
    const auto learned = policy.table();
    ret[j] = expected_episode_return(mdp, learned);
    const auto occ = occupancy_measure(mdp, learned, true);
    const auto occ_0 = occupancy_measure(mdp, checkpoints[c], true);
    const auto visits = state_visit_counts(demo, mdp.n_states());
    double gap = 0.0;
    for (int s = 0; s < mdp.n_states(); ++s)
      if (visits[static_cast<std::size_t>(s)] == 0)
        gap += std::abs(occ.rho_s[static_cast<std::size_t>(s)] - occ_0.rho_s[static_cast<std::size_t>(s)]);
    disc[j] = 0.5 * gap;
  }
  std::vector<InitGapRow> rows;
  for (std::size_t c = 0; c < nc; ++c)
    for (std::size_t d = 0; d < nd; ++d) {
      InitGapRow row;
      row.checkpoint = static_cast<int>(c);
      row.label = labels[c];
      row.n_demo = demo_sizes[d];
      const std::size_t base = (c * nd + d) * seeds;
      row.returns.assign(ret.begin() + static_cast<std::ptrdiff_t>(base), ret.begin() + static_cast<std::ptrdiff_t>(base + seeds));
      row.mean_return = summarize(row.returns).mean;
      std::vector<double> dd(disc.begin() + static_cast<std::ptrdiff_t>(base), disc.begin() + static_cast<std::ptrdiff_t>(base + seeds));
      row.mean_discrepancy = summarize(dd).mean;
      rows.push_back(std::move(row));
    }
  return rows;
}

// ------------------------------------------------------------ output

void write_exact_report_csv(std::ostream& out, const std::vector<ExactSuiteReport>& reports) {
  out << "suite,trials,violations,max_excess,passed\n";
  for (const auto& r : reports)
    out << r.name << ',' << r.trials << ',' << r.violations << ',' << format_real(r.max_excess) << ','
        << (r.passed() ? "true" : "false") << '\n';
}

void write_counterexamples(std::ostream& out, const std::vector<ExactSuiteReport>& reports) {
  for (const auto& r : reports)
    for (const auto& c : r.counterexamples) out << c.record << '\n';
}

void write_theorem1_csv(std::ostream& out, const Theorem1Study& study) {
  out << "draw,n_pairs,lhs,mass_outside_data,state_marginal_gap,initialization_gap,bc_gap_state_term,"
         "bc_gap_empirical_error,data_gap_hoeffding_states,data_gap_hoeffding_policies,rhs_total,holds\n";
  for (std::size_t i = 0; i < study.reports.size(); ++i) {
    const auto& r = study.reports[i];
    out << i << ',' << r.n_pairs << ',' << format_real(r.lhs);
    for (const char* k : {"mass_outside_data", "state_marginal_gap", "initialization_gap", "bc_gap_state_term",
                          "bc_gap_empirical_error", "data_gap_hoeffding_states", "data_gap_hoeffding_policies"})
      out << ',' << format_real(r.rhs_terms.at(k));
    out << ',' << format_real(r.rhs_total) << ',' << (r.holds ? "true" : "false") << '\n';
  }
}

void write_data_gap_csv(std::ostream& out, const DataGapStudy& study) {
  out << "n_trajectories,mean_gap\n";
  for (std::size_t i = 0; i < study.sizes.size(); ++i)
    out << study.sizes[i] << ',' << format_real(study.mean_gap[i]) << '\n';
}

void write_init_gap_csv(std::ostream& out, const std::vector<InitGapRow>& rows) {
  out << "checkpoint,label,n_demo,mean_return,mean_out_of_data_discrepancy\n";
  for (const auto& r : rows)
    out << r.checkpoint << ',' << r.label << ',' << r.n_demo << ',' << format_real(r.mean_return) << ','
        << format_real(r.mean_discrepancy) << '\n';
}

}  // namespace coil
