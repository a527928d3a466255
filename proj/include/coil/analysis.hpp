#pragma once
// Numerical checks of the distributional inequalities on exactly solvable
// tabular instances.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "coil/bc.hpp"
#include "coil/mdp.hpp"
#include "coil/policy.hpp"

namespace coil {

inline constexpr double kExactSlack = 1e-10;

// ------------------------------------------------------------ joint TV lemma

/// Joint tables are [x][y] row-major (nx * ny entries).
struct JointTvTerms {
  double joint = 0.0;        // TV(rho1(x,y), rho2(x,y))
  double marginal = 0.0;     // TV(rho1(y), rho2(y))
  double conditional = 0.0;  // E_{y~rho2}[TV(rho1(x|y), rho2(x|y))]
  double rhs() const { return marginal + conditional; }
};

/// Conditionals of zero-mass columns default to uniform (any choice keeps the
/// inequality valid).
JointTvTerms joint_tv_terms(std::span<const double> rho1, std::span<const double> rho2, int nx, int ny);

/// Same for occupancy tables: x = action, y = state.
JointTvTerms occupancy_tv_terms(const OccupancyTable& a, const OccupancyTable& b);

/// Random probability vector; with `sparse`, roughly a third of the entries are
/// exact zeros (at least one entry stays positive).
std::vector<double> random_distribution(std::size_t n, Rng& rng, bool sparse = false);

struct Counterexample {
  std::string kind;
  std::uint64_t seed = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  std::string record;  // JSON line with everything needed to replay
};

struct ExactSuiteReport {
  std::string name;
  int trials = 0;
  int violations = 0;
  double max_excess = -1e300;  // max over trials of lhs - rhs
  std::vector<Counterexample> counterexamples;  // first few
  bool passed() const { return violations == 0; }
};

/// Lemma on `n_trials` random pairs with grids up to max_dim x max_dim.
/// Trial i draws from derive_seed(seed, i); trials run in parallel.
ExactSuiteReport verify_joint_tv_lemma(int n_trials, int max_dim, std::uint64_t seed);

/// Random finite MDP with n_states x n_actions, Dirichlet-style rows.
TabularMdp random_mdp(int n_states, int n_actions, Rng& rng, double gamma = 0.9, int horizon_cap = 20);
PolicyTable random_policy(int n_states, int n_actions, Rng& rng, bool sparse = false);

/// Proposition: the lemma applied to rho_pi(s,a) = rho_pi(s) pi(a|s).
ExactSuiteReport verify_occupancy_proposition(int n_triples, std::uint64_t seed);

/// Order-statistic chain: condition holds => mean prob >= (1 - beta) eps_c.
ExactSuiteReport verify_observation_chain(int n_cases, std::uint64_t seed);

/// criterion >= eps_c  <=>  fraction condition, on fuzzed inputs.
ExactSuiteReport verify_criterion_equivalence(int n_cases, std::uint64_t seed);

// ------------------------------------------------------------ BC bound

struct BoundReport {
  double lhs = 0.0;
  std::map<std::string, double> rhs_terms;
  double rhs_total = 0.0;
  double delta = 0.1;
  bool holds = false;
  std::size_t n_pairs = 0;
};

/// Every term from normalized occupancies; |D| counts state-action pairs and
/// the indicator term uses the learner's argmax (ties to the lowest action).
BoundReport compute_theorem1_bound(const TabularMdp& mdp, const PolicyTable& pi_learner, const PolicyTable& pi_0,
                                   const PolicyTable& pi_b, const Dataset& data, double delta = 0.1);

/// The two radicals of the bound for a given |D|.
std::pair<double, double> hoeffding_terms(int n_states, int n_actions, std::size_t n_pairs, double delta);

struct Theorem1Study {
  int draws = 0;
  int holds = 0;
  std::vector<BoundReport> reports;
  double hold_rate() const { return draws ? static_cast<double>(holds) / draws : 0.0; }
};

/// Random instances: MDP with 3..12 states, random behavior policy, data of at
/// least 50 pairs, learner trained by BC from a uniform start.
Theorem1Study theorem1_rate_study(int draws, double delta, std::uint64_t seed);

// ------------------------------------------------------------ limitation

struct LimitationReport {
  double lhs = 0.0;                // TV(rho_e(s,a), rho_b(s,a))
  double state_term = 0.0;         // TV(rho_e(s), rho_hat_b(s))
  double policy_term = 0.0;        // max_s TV(pi_e(.|s), pi_hat_b(.|s))
  double data_gap = 0.0;           // TV(rho_hat_b(s,a), rho_b(s,a))
  double rhs() const { return state_term + policy_term + data_gap; }
  bool holds() const { return lhs <= rhs() + kExactSlack; }
};

/// rho_hat_b is the occupancy of the empirical behavior policy (uniform
/// completion); the MDP's own discount is replaced by `gamma`.
LimitationReport verify_limitation_decomposition(const TabularMdp& mdp, const PolicyTable& pi_e,
                                                 const PolicyTable& pi_b, const Dataset& data, double gamma);

ExactSuiteReport verify_limitation_suite(int n_instances, std::uint64_t seed);

struct DataGapStudy {
  std::vector<int> sizes;          // trajectories
  std::vector<double> mean_gap;    // averaged over seeds
  std::vector<std::vector<double>> per_seed;
  double log_slope = 0.0;          // slope of log(mean gap) vs log(size)
  bool non_increasing() const;
};

/// Measured TV(rho_hat_b, rho_b) on a fixed random instance.
DataGapStudy data_gap_study(const std::vector<int>& sizes, int n_seeds, std::uint64_t seed);

// ------------------------------------------------------------ initialization

struct InitGapRow {
  int checkpoint = 0;
  std::string label;
  int n_demo = 0;
  double mean_return = 0.0;       // exact expected episode return of the BC result, seed mean
  double mean_discrepancy = 0.0;  // 1/2 sum_{s not in D} |rho_pi(s) - rho_pi0(s)|, seed mean
  std::vector<double> returns;
};

struct InitGapConfig {
  BcParams bc{};
  std::int64_t bc_steps = 2000;
  int n_seeds = 5;
  std::uint64_t seed = 0;
};

/// For every (checkpoint, demo count): draw demos from `demo_policy`, run plain
/// BC from the checkpoint, record the exact return and the out-of-data state
/// discrepancy between the result and its initialization.
std::vector<InitGapRow> initialization_gap_study(const TabularMdp& mdp, const std::vector<PolicyTable>& checkpoints,
                                                 const std::vector<std::string>& labels,
                                                 const PolicyTable& demo_policy, const std::vector<int>& demo_sizes,
                                                 const InitGapConfig& cfg);

// ------------------------------------------------------------ output

void write_exact_report_csv(std::ostream& out, const std::vector<ExactSuiteReport>& reports);
void write_counterexamples(std::ostream& out, const std::vector<ExactSuiteReport>& reports);
void write_theorem1_csv(std::ostream& out, const Theorem1Study& study);
void write_data_gap_csv(std::ostream& out, const DataGapStudy& study);
void write_init_gap_csv(std::ostream& out, const std::vector<InitGapRow>& rows);

}  // namespace coil
