// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "coil/analysis.hpp"
#include "coil/baselines.hpp"
#include "coil/bc.hpp"
#include "coil/curriculum.hpp"
#include "coil/datagen.hpp"
#include "coil/envs.hpp"
#include "coil/stats.hpp"
#include "oracles.hpp"

using namespace coil;

namespace {

constexpr int kSeeds = 5;

int failures = 0;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SeedRun {
  Dataset data;
  double best1 = 0.0;
  double coil_exact = 0.0;
  double coil_eval = 0.0;
  std::vector<double> bc_exact;  // top-10/25/50/100%
  TrainResult<TabularSoftmaxPolicy> coil;
  double seconds = 0.0;
};

const std::vector<double> kFractions{0.10, 0.25, 0.50, 1.00};

std::vector<SeedRun> chain_runs(const TabularMdp& mdp) {
  std::vector<SeedRun> runs;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    SeedRun r;
    OnlineAgentConfig agent;
    agent.seed = static_cast<std::uint64_t>(seed);
    r.data = generate_final_buffer(mdp, agent);
    r.best1 = best_one_percent_mean(r.data);
    const TabularSoftmaxPolicy init(mdp.n_states(), mdp.n_actions());
    CoilConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(seed);
    r.coil = coil_train(r.data, mdp, init, cfg);
    r.coil_exact = expected_episode_return(mdp, r.coil.policy.table());
    r.coil_eval = r.coil.log.records.empty() ? 0.0 : r.coil.log.records.back().eval_return_mean;
    for (double f : kFractions) {
      BaselineConfig b;
      b.fraction = f;
      b.seed = static_cast<std::uint64_t>(seed);
      r.bc_exact.push_back(expected_episode_return(mdp, bc_topk(r.data, mdp, init, b).policy.table()));
    }
    r.seconds = seconds_since(t0);
    runs.push_back(std::move(r));
  }
  return runs;
}

void criterion_dilemma(const std::vector<SeedRun>& runs) {
  int seeds_ok = 0;
  double slowest = 0.0;
  std::ostringstream d;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    bool ok = r.coil_exact >= 0.9 * r.best1;
    d << "seed " << i << " coil " << fmt("%.3f", r.coil_exact / r.best1) << " bc";
    for (double v : r.bc_exact) {
      ok = ok && v < 0.9 * r.best1;
      d << " " << fmt("%.3f", v / r.best1);
    }
    d << (ok ? "; " : " (miss); ");
    seeds_ok += ok ? 1 : 0;
    slowest = std::max(slowest, r.seconds);
  }
  d << "ratios to best-1% by exact expected return, top-10/25/50/100%; " << seeds_ok << "/" << runs.size()
    << " seeds; slowest seed " << fmt("%.1f", slowest) << " s";
  report(1, "quantity-quality dilemma", seeds_ok >= 4 && slowest <= 120.0, d.str());
}

void criterion_order(const std::vector<SeedRun>& runs) {
  double sum = 0.0;
  std::ostringstream d;
  for (const auto& r : runs) {
    std::vector<double> k, c;
    for (const auto& rec : r.coil.log.records)
      for (int ci : rec.selected_collection_indices) {
        k.push_back(rec.curriculum);
        c.push_back(ci);
      }
    const double rho = spearman(k, c);
    sum += rho;
    d << fmt("%.3f", rho) << " ";
  }
  const double mean = sum / static_cast<double>(runs.size());
  d << "mean " << fmt("%.3f", mean) << " (need >= 0.6)";
  report(2, "curriculum-order fidelity", mean >= 0.6, d.str());
}

void criterion_naive(const TabularMdp& mdp, const std::vector<SeedRun>& runs) {
  // Each baseline spends exactly the gradient steps the curriculum loop spent on that seed.
  std::vector<double> coil_eval, rbc_eval, bsbc_eval, coil_ex, rbc_ex, bsbc_ex;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    const TabularSoftmaxPolicy init(mdp.n_states(), mdp.n_actions());
    BaselineConfig b;
    b.seed = static_cast<std::uint64_t>(i);
    b.total_steps = r.coil.log.records.back().grad_steps;
    b.kind = BaselineKind::return_ordered;
    const auto rbc = run_baseline(r.data, mdp, init, b);
    b.kind = BaselineKind::buffer_shrinking;
    const auto bsbc = run_baseline(r.data, mdp, init, b);
    coil_eval.push_back(r.coil_eval);
    rbc_eval.push_back(rbc.log.records.back().eval_return_mean);
    bsbc_eval.push_back(bsbc.log.records.back().eval_return_mean);
    coil_ex.push_back(r.coil_exact);
    rbc_ex.push_back(expected_episode_return(mdp, rbc.policy.table()));
    bsbc_ex.push_back(expected_episode_return(mdp, bsbc.policy.table()));
  }
  const double c = summarize(coil_eval).mean, rb = summarize(rbc_eval).mean, bs = summarize(bsbc_eval).mean;
  std::ostringstream d;
  d << "final eval coil " << fmt("%.3f", c) << " rbc " << fmt("%.3f", rb) << " bsbc " << fmt("%.3f", bs)
    << "; exact coil " << fmt("%.3f", summarize(coil_ex).mean) << " rbc " << fmt("%.3f", summarize(rbc_ex).mean)
    << " bsbc " << fmt("%.3f", summarize(bsbc_ex).mean) << " (per-seed matched steps)";
  report(3, "naive-curriculum comparison", c >= rb && c >= bs, d.str());
}

void criterion_termination(const std::vector<SeedRun>& runs) {
  bool ok = true;
  std::ostringstream d;
  for (const auto& r : runs) {
    const auto n = static_cast<std::size_t>(r.data.size());
    const std::size_t cap = (n + 1) / 2;  // ceil(N_traj / N), N = 2
    const auto& recs = r.coil.log.records;
    ok = ok && !r.coil.diverged && !recs.empty() && recs.size() <= cap && recs.back().pool_after == 0;
    d << recs.size() << "/" << cap << " ";
  }
  d << "curricula used / allowed, all ending with an empty pool";
  report(4, "automatic termination", ok, d.str());
}

void criterion_filter(const TabularMdp& mdp, const Dataset& data) {
  const TabularSoftmaxPolicy init(mdp.n_states(), mdp.n_actions());
  bool nonneg = true;
  for (const auto& t : data.trajectories) nonneg = nonneg && t.accumulated_return >= 0.0;

  CoilConfig cfg;
  cfg.alpha = 1.0;
  const auto frozen = coil_train(data, mdp, init, cfg);
  bool ok1 = nonneg;
  std::size_t pool = data.size();
  for (const auto& rec : frozen.log.records) {
    pool -= rec.selected_ids.size();
    ok1 = ok1 && rec.filter_v == 0.0 && rec.pool_after == pool;
  }
  ok1 = ok1 && pool == 0;

  cfg.alpha = 0.0;
  const auto follow = coil_train(data, mdp, init, cfg);
  bool ok0 = !follow.log.records.empty();
  for (const auto& rec : follow.log.records) ok0 = ok0 && rec.filter_v == rec.min_sel_return;

  std::ostringstream d;
  d << "alpha=1: " << frozen.log.records.size() << " curricula, V frozen at 0 and nothing filtered: "
    << (ok1 ? "yes" : "no") << "; alpha=0: " << follow.log.records.size()
    << " curricula, V == min selected return bitwise: " << (ok0 ? "yes" : "no");
  report(5, "filter-ablation semantics", ok1 && ok0, d.str());
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a[i] - b[i]) / std::max(1.0, std::max(std::abs(a[i]), std::abs(b[i]))));
  return worst;
}

void criterion_gradients() {
  Rng rng(2024);
  double worst_tab = 0.0, worst_gauss = 0.0;
  for (int c = 0; c < 100; ++c) {
    const int ns = 1 + static_cast<int>(uniform_index(rng, 6)), na = 2 + static_cast<int>(uniform_index(rng, 4));
    std::vector<double> logits(static_cast<std::size_t>(ns) * na);
    for (auto& l : logits) l = 4.0 * (uniform01(rng) - 0.5);
    DiscreteBatch batch;
    const int n = 1 + static_cast<int>(uniform_index(rng, 30));
    for (int i = 0; i < n; ++i)
      batch.pairs.emplace_back(static_cast<int>(uniform_index(rng, ns)), static_cast<int>(uniform_index(rng, na)));
    std::vector<double> grad(logits.size());
    bc_loss_and_gradient(TabularSoftmaxPolicy(ns, na, logits), batch, grad);
    const auto fd = oracle::finite_difference(
        [&](const std::vector<double>& x) { return bc_loss(TabularSoftmaxPolicy(ns, na, x), batch); }, logits);
    worst_tab = std::max(worst_tab, max_rel_error(grad, fd));
  }
  for (int c = 0; c < 100; ++c) {
    const int sd = 1 + static_cast<int>(uniform_index(rng, 3)), ad = 1 + static_cast<int>(uniform_index(rng, 2));
    LinearGaussianPolicy pi(sd, ad);
    for (auto& p : pi.params()) p = uniform01(rng) - 0.5;
    ContinuousBatch batch;
    const int n = 1 + static_cast<int>(uniform_index(rng, 12));
    for (int i = 0; i < n; ++i) {
      std::vector<double> s(static_cast<std::size_t>(sd)), a(static_cast<std::size_t>(ad));
      for (auto& x : s) x = standard_normal(rng);
      for (auto& x : a) x = standard_normal(rng);
      batch.pairs.emplace_back(s, a);
    }
    std::vector<double> grad(pi.params().size());
    bc_loss_and_gradient(pi, batch, grad);
    const std::vector<double> theta(pi.params().begin(), pi.params().end());
    const auto fd = oracle::finite_difference(
        [&](const std::vector<double>& x) {
          LinearGaussianPolicy q(sd, ad);
          std::copy(x.begin(), x.end(), q.params().begin());
          return bc_loss(q, batch);
        },
        theta);
    worst_gauss = std::max(worst_gauss, max_rel_error(grad, fd));
  }
  report(6, "gradient correctness", worst_tab < 1e-6 && worst_gauss < 1e-6,
         "max relative error tabular " + fmt("%.2e", worst_tab) + ", gaussian " + fmt("%.2e", worst_gauss) +
             " over 100 cases each");
}

void criterion_exact() {
  const std::vector<ExactSuiteReport> suites{verify_joint_tv_lemma(1000, 8, 7), verify_occupancy_proposition(100, 7),
                                             verify_limitation_suite(100, 7), verify_observation_chain(1000, 7)};
  bool ok = true;
  std::ostringstream d;
  for (const auto& s : suites) {
    ok = ok && s.violations == 0 && s.max_excess <= kExactSlack;
    d << s.name << " " << s.trials << " trials, " << s.violations << " violations, max excess "
      << fmt("%.2e", s.max_excess) << "; ";
  }
  report(7, "exact-theorem suites", ok, d.str());
}

void criterion_rate() {
  const auto study = theorem1_rate_study(100, 0.1, 11);
  double worst = 0.0;
  for (int ns : {3, 8, 12})
    for (int na : {2, 4}) {
      const auto [s2, p2] = hoeffding_terms(ns, na, 100, 0.1);
      const auto [s3, p3] = hoeffding_terms(ns, na, 1000, 0.1);
      const auto [s4, p4] = hoeffding_terms(ns, na, 10000, 0.1);
      for (double ratio : {s2 / s3, s3 / s4, p2 / p3, p3 / p4})
        worst = std::max(worst, std::abs(ratio - std::sqrt(10.0)) / std::sqrt(10.0));
    }
  report(8, "bound rate check", study.holds >= 90 && worst <= 1e-12,
         std::to_string(study.holds) + "/100 instances hold at delta 0.1; radical ratio error " + fmt("%.1e", worst));
}

void criterion_data_gap() {
  const auto study = data_gap_study({10, 100, 1000, 10000}, 20, 3);
  std::ostringstream d;
  for (std::size_t i = 0; i < study.sizes.size(); ++i)
    d << "|D|=" << study.sizes[i] << " " << fmt("%.4f", study.mean_gap[i]) << "; ";
  d << "log-log slope " << fmt("%.3f", study.log_slope);
  report(9, "data-gap decay", study.non_increasing(), d.str());
}

void criterion_init_gap() {
  const auto mdp = build_gridworld(5, 4, true, 40, 0.1);
  OnlineAgentConfig agent;
  agent.seed = 0;
  const auto cps = q_learning_checkpoints(mdp, agent);
  const auto& expert = cps.back();
  InitGapConfig cfg;
  cfg.n_seeds = kSeeds;
  const auto rows =
      initialization_gap_study(mdp, {cps.front(), cps.back()}, {"random", "expert"}, expert, {1}, cfg);
  const double v = expected_episode_return(mdp, expert);
  const double tol = 0.05 * std::abs(v);
  const double random_ret = rows[0].mean_return, expert_ret = rows[1].mean_return;
  const bool expert_close = std::abs(expert_ret - v) <= tol;
  const bool random_far = std::abs(random_ret - v) > tol;
  report(10, "initialization study", expert_close && random_far,
         "expert value " + fmt("%.3f", v) + "; one demo: expert init " + fmt("%.3f", expert_ret) + ", random init " +
             fmt("%.3f", random_ret) + " (5-seed means, exact return)");
}

void criterion_determinism() {
  const auto mdp = build_chain(12, 0.0, 40);
  auto once = [&] {
    OnlineAgentConfig agent;
    agent.seed = 9;
    agent.n_episodes = 120;
    const auto data = generate_final_buffer(mdp, agent);
    std::ostringstream ds, ls, cs;
    write_dataset(ds, data, {1, env_hash(EnvSpec{}), mdp.n_states(), mdp.n_actions()});
    CoilConfig cfg;
    cfg.seed = 9;
    const auto res = coil_train(data, mdp, TabularSoftmaxPolicy(12, 2), cfg);
    res.log.write_csv(ls);
    write_checkpoint(cs, res.policy);
    return std::vector<std::string>{ds.str(), ls.str(), cs.str()};
  };
  const auto a = once(), b = once();
  report(11, "determinism", a == b,
         std::string("dataset ") + (a[0] == b[0] ? "same" : "differs") + ", log " + (a[1] == b[1] ? "same" : "differs") +
             ", checkpoint " + (a[2] == b[2] ? "same" : "differs"));
}

void criterion_equivalence() {
  const auto r = verify_criterion_equivalence(1000, 5);
  std::string detail = std::to_string(r.violations) + " violations in 1000 fuzz cases";
  if (!r.counterexamples.empty()) detail += "; first: " + r.counterexamples.front().record;
  report(12, "criterion equivalence", r.passed(), detail);
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto chain = build_chain(12, 0.0, 40);
  const auto runs = chain_runs(chain);
  criterion_dilemma(runs);
  criterion_order(runs);
  criterion_naive(chain, runs);
  criterion_termination(runs);
  criterion_filter(chain, runs.front().data);
  criterion_gradients();
  criterion_exact();
  criterion_rate();
  criterion_data_gap();
  criterion_init_gap();
  criterion_determinism();
  criterion_equivalence();
  std::printf("%d of 12 criteria failed; total %.1f s\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
