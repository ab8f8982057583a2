#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "benfrag/fragmentation.hpp"
#include "benfrag/mellin.hpp"

namespace benfrag {

/// One experiment: a fragmentation template, a trial count, and sweeps.
/// Trial tau runs with stream derive(frag.rng, tau).
struct ExperimentPlan {
  FragConfig frag;
  int trials = 1;
  std::vector<double> s_values;
  /// Empty means {frag.N}.
  std::vector<int> n_sweep;
  std::vector<int> d_targets;
  int base = 10;
  int ell_max = 1000;
  unsigned threads = 1;
  /// Default result path; the CLI's --out takes precedence.
  std::string output;

  std::vector<int> sweep() const;

  static ExperimentPlan from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

void validate(const ExperimentPlan& plan);

/// Dependency cutoff M(N) = ceil(ln N).
int dependency_cutoff(int n);

struct ConvergenceRow {
  int N = 0;
  int m = 0;
  double s = 0.0;
  int trials = 0;
  double mean_P = 0.0;
  double var_P = 0.0;  // NaN when trials < 2
  double theory = 0.0;
  double bound = 0.0;  // expectation_error_bound at N m factors
  double abs_error = 0.0;
  /// |mean_P - theory| <= bound + 3 sqrt(var_P / trials)
  bool within_bound = false;
  /// Empty unless the row could not be computed normally (cap, T = 1, ...).
  std::string flag;
};

/// E[P_N(s)] over trials for each (N, s); full or sampled leaves.
std::vector<ConvergenceRow> run_expectation(const ExperimentPlan& plan);

/// Var(P_N(s)) over trials; needs full mode, since the within-tree dependence
/// is what drives the variance.
std::vector<ConvergenceRow> run_variance(const ExperimentPlan& plan);

/// Pair statistics of one full run, stratified by the number mu of shared cuts.
struct DependencyStratum {
  int mu = 0;
  std::uint64_t pair_count = 0;   // unordered pairs i < j
  std::uint64_t both_count = 0;   // pairs with phi_s(V_i) phi_s(V_j) = 1
  double mean_phiphi() const;
};

struct DependencyProfile {
  int m = 0;
  int N = 0;
  double s = 0.0;
  int base = 10;
  int runs = 0;
  std::uint64_t leaves = 0;
  double reference = 0.0;  // (log_B s)^2
  int cutoff = 0;          // M = ceil(ln N)
  std::vector<DependencyStratum> strata;  // mu = 0..Nm

  /// Ordered pairs (i, j), i = j included, sharing at least cutoff + 1 cuts.
  std::uint64_t high_dependence_ordered_pairs() const;
  /// Above divided by leaves^2; the counting argument gives 2^-(M+1) exactly.
  double high_dependence_fraction() const;
  /// Mean phi phi over strata mu <= M, minus (log_B s)^2.
  double low_dependence_deviation() const;
};

/// Exact per-stratum counts from subtree aggregation, O(leaves * Nm).
DependencyProfile dependency_profile(const FragmentationRun& run, double s, int base = 10);

/// Adds the counts of `other` (same m, N, s) into `into`.
void accumulate(DependencyProfile& into, const DependencyProfile& other);

/// Profiles pooled over all trials, one per (N, s).
std::vector<DependencyProfile> run_dependency_profile(const ExperimentPlan& plan);

struct ConjectureRow {
  int m = 0;
  int d = 0;
  int N = 0;
  std::uint64_t count = 0;   // pieces per trial
  double ks = 0.0;           // mean over trials
  double chi_square = 0.0;   // mean over trials; NaN if too few pieces
  bool monotone = false;     // KS nonincreasing in N across the whole sweep for this d
  std::string flag;
};

/// Benford fit of the d-dimensional contents C_d across the N sweep. Reports
/// trends only.
std::vector<ConjectureRow> run_conjecture(const ExperimentPlan& plan);

}  // namespace benfrag
