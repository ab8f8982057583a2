#include "benfrag/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "benfrag/benford.hpp"
#include "benfrag/error.hpp"
#include "benfrag/parallel.hpp"

namespace benfrag {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Wide = unsigned __int128;

/// Splits the thread budget: across trials when there are enough of them,
/// otherwise inside each run.
struct ThreadSplit {
  unsigned outer = 1;
  unsigned inner = 1;
};

ThreadSplit split_threads(unsigned threads, int trials) {
  threads = std::max(1u, threads);
  if (static_cast<unsigned>(trials) >= threads) return {threads, 1};
  return {1, threads};
}

FragConfig trial_config(const ExperimentPlan& plan, int n, int trial, unsigned inner) {
  FragConfig cfg = plan.frag;
  cfg.N = n;
  cfg.rng = derive(plan.frag.rng, static_cast<std::uint64_t>(trial));
  cfg.threads = inner;
  return cfg;
}

/// counts[trial][s] = number of leaves with significand <= s.
struct TrialCounts {
  std::uint64_t leaves = 0;
  std::vector<std::vector<std::uint64_t>> counts;
};

TrialCounts count_trials(const ExperimentPlan& plan, int n) {
  const auto split = split_threads(plan.threads, plan.trials);
  TrialCounts out;
  out.counts.assign(static_cast<std::size_t>(plan.trials), {});
  std::vector<std::uint64_t> leaves(static_cast<std::size_t>(plan.trials), 0);
  parallel_for(static_cast<std::size_t>(plan.trials), split.outer, [&](std::size_t tau) {
    const FragmentationRun run =
        fragment(trial_config(plan, n, static_cast<int>(tau), split.inner));
    const SignificandStats stats(plan.base, run.log10_volumes());
    auto& row = out.counts[tau];
    for (double s : plan.s_values) row.push_back(stats.count_at_most(s));
    leaves[tau] = run.size();
  });
  out.leaves = leaves.empty() ? 0 : leaves.front();
  return out;
}

std::vector<ConvergenceRow> convergence_rows(const ExperimentPlan& plan) {
  validate(plan);
  const MellinSpectrum spectrum =
      mellin_spectrum(plan.frag.density, plan.base, plan.ell_max, plan.threads);
  std::vector<ConvergenceRow> rows;
  for (int n : plan.sweep()) {
    FragConfig probe = plan.frag;
    probe.N = n;
    std::string cap_error;
    try {
      validate(probe);
    } catch (const ValidationError& e) {
      cap_error = e.what();
    }
    TrialCounts counts;
    if (cap_error.empty()) counts = count_trials(plan, n);

    for (std::size_t si = 0; si < plan.s_values.size(); ++si) {
      const double s = plan.s_values[si];
      ConvergenceRow row;
      row.N = n;
      row.m = plan.frag.m;
      row.s = s;
      row.trials = plan.trials;
      row.theory = benford_cdf(plan.base, s);
      row.bound = expectation_error_bound(spectrum, n * plan.frag.m, {0.0, row.theory});
      if (!cap_error.empty()) {
        row.mean_P = row.var_P = row.abs_error = kNaN;
        row.flag = cap_error;
        rows.push_back(row);
        continue;
      }
      // Integer sums keep mean and variance independent of trial order.
      Wide sum = 0;
      Wide sum_sq = 0;
      for (const auto& trial : counts.counts) {
        const Wide c = trial[si];
        sum += c;
        sum_sq += c * c;
      }
      const long double t = plan.trials;
      const long double l = static_cast<long double>(counts.leaves);
      row.mean_P = static_cast<double>(static_cast<long double>(sum) / (t * l));
      if (plan.trials >= 2) {
        const Wide numerator = static_cast<Wide>(plan.trials) * sum_sq - sum * sum;
        row.var_P = static_cast<double>(static_cast<long double>(numerator) /
                                        (t * (t - 1.0L) * l * l));
      } else {
        row.var_P = kNaN;
        row.flag = "variance undefined for a single trial";
      }
      row.abs_error = std::abs(row.mean_P - row.theory);
      row.within_bound =
          std::isfinite(row.var_P) &&
          row.abs_error <= row.bound + 3.0 * std::sqrt(row.var_P / plan.trials);
      if (!row.within_bound && row.flag.empty())
        row.flag = "abs_error exceeds mellin_bound + 3 sqrt(var_P / trials)";
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace

std::vector<int> ExperimentPlan::sweep() const {
  return n_sweep.empty() ? std::vector<int>{frag.N} : n_sweep;
}

void validate(const ExperimentPlan& plan) {
  if (plan.trials < 1) throw ValidationError("trials must be at least 1");
  if (plan.base < 2) throw ValidationError("base must be at least 2");
  if (plan.ell_max < 1) throw ValidationError("ell_max must be at least 1");
  for (double s : plan.s_values)
    if (!(s >= 1.0 && s < plan.base)) throw ValidationError("every s must lie in [1, B)");
  for (int n : plan.sweep())
    if (n < 1) throw ValidationError("every N in the sweep must be at least 1");
  for (int d : plan.d_targets)
    if (d < 1 || d > plan.frag.m) throw ValidationError("every d target must lie in 1..m");
  FragConfig probe = plan.frag;
  probe.N = 1;
  validate(probe);
}

ExperimentPlan ExperimentPlan::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("plan must be a JSON object");
  static const std::set<std::string> known{"frag",   "trials",  "s_values", "N_sweep", "d_targets",
                                           "base",   "ell_max", "threads",  "output"};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ValidationError("unknown plan key '" + key + "'");
  ExperimentPlan plan;
  try {
    if (j.contains("frag")) plan.frag = FragConfig::from_json(j.at("frag"));
    if (j.contains("trials")) plan.trials = j.at("trials").get<int>();
    if (j.contains("s_values")) plan.s_values = j.at("s_values").get<std::vector<double>>();
    if (j.contains("N_sweep")) plan.n_sweep = j.at("N_sweep").get<std::vector<int>>();
    if (j.contains("d_targets")) plan.d_targets = j.at("d_targets").get<std::vector<int>>();
    if (j.contains("base")) plan.base = j.at("base").get<int>();
    if (j.contains("ell_max")) plan.ell_max = j.at("ell_max").get<int>();
    if (j.contains("threads")) plan.threads = j.at("threads").get<unsigned>();
    if (j.contains("output")) plan.output = j.at("output").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("bad plan: ") + e.what());
  }
  return plan;
}

nlohmann::json ExperimentPlan::to_json() const {
  nlohmann::json j;
  j["frag"] = frag.to_json();
  j["trials"] = trials;
  j["s_values"] = s_values;
  j["N_sweep"] = sweep();
  j["d_targets"] = d_targets;
  j["base"] = base;
  j["ell_max"] = ell_max;
  if (!output.empty()) j["output"] = output;
  return j;
}

int dependency_cutoff(int n) {
  if (n < 1) throw ValidationError("N must be at least 1");
  return static_cast<int>(std::ceil(std::log(static_cast<double>(n))));
}

std::vector<ConvergenceRow> run_expectation(const ExperimentPlan& plan) {
  return convergence_rows(plan);
}

std::vector<ConvergenceRow> run_variance(const ExperimentPlan& plan) {
  if (plan.frag.mode != FragMode::full)
    throw ValidationError(
        "variance needs full mode: Var(P_N) is driven by the dependence between pieces of the "
        "same tree, which independent sampled leaves do not have");
  return convergence_rows(plan);
}

// ---------------------------------------------------------------------------
// Dependency profile

double DependencyStratum::mean_phiphi() const {
  return pair_count == 0 ? kNaN
                         : static_cast<double>(both_count) / static_cast<double>(pair_count);
}

std::uint64_t DependencyProfile::high_dependence_ordered_pairs() const {
  std::uint64_t pairs = 0;
  for (const auto& st : strata)
    if (st.mu >= cutoff + 1) pairs += 2 * st.pair_count;
  return pairs + static_cast<std::uint64_t>(runs) * leaves;
}

double DependencyProfile::high_dependence_fraction() const {
  const long double total = static_cast<long double>(runs) * leaves * leaves;
  return static_cast<double>(static_cast<long double>(high_dependence_ordered_pairs()) / total);
}

double DependencyProfile::low_dependence_deviation() const {
  std::uint64_t pairs = 0;
  std::uint64_t both = 0;
  for (const auto& st : strata) {
    if (st.mu > cutoff) continue;
    pairs += st.pair_count;
    both += st.both_count;
  }
  if (pairs == 0) return kNaN;
  return static_cast<double>(both) / static_cast<double>(pairs) - reference;
}

DependencyProfile dependency_profile(const FragmentationRun& run, double s, int base) {
  const FragConfig& cfg = run.config();
  const int depth = run.path_length();
  if (cfg.mode != FragMode::full || depth > kMaxFullCutSteps ||
      run.size() != (std::size_t{1} << depth))
    throw ValidationError("dependency profile needs a full-mode run");
  DependencyProfile profile;
  profile.m = cfg.m;
  profile.N = cfg.N;
  profile.s = s;
  profile.base = base;
  profile.runs = 1;
  profile.leaves = run.size();
  profile.reference = std::pow(benford_cdf(base, s), 2);
  profile.cutoff = dependency_cutoff(cfg.N);
  profile.strata.resize(static_cast<std::size_t>(depth) + 1);
  for (int mu = 0; mu <= depth; ++mu) profile.strata[static_cast<std::size_t>(mu)].mu = mu;

  // ones[v] = leaves under node v (at the current depth) with phi_s = 1.
  std::vector<std::uint64_t> ones(run.size());
  for (std::size_t i = 0; i < run.size(); ++i)
    ones[i] = static_cast<std::uint64_t>(phi_s(base, s, run.log10_volume(i)));
  for (int mu = depth - 1; mu >= 0; --mu) {
    const std::size_t nodes = std::size_t{1} << mu;
    const std::uint64_t half = std::uint64_t{1} << (depth - mu - 1);
    auto& stratum = profile.strata[static_cast<std::size_t>(mu)];
    stratum.pair_count = static_cast<std::uint64_t>(nodes) * half * half;
    std::vector<std::uint64_t> parent(nodes);
    for (std::size_t v = 0; v < nodes; ++v) {
      stratum.both_count += ones[2 * v] * ones[2 * v + 1];
      parent[v] = ones[2 * v] + ones[2 * v + 1];
    }
    ones.swap(parent);
  }
  return profile;
}

void accumulate(DependencyProfile& into, const DependencyProfile& other) {
  if (into.m != other.m || into.N != other.N || into.s != other.s || into.base != other.base ||
      into.strata.size() != other.strata.size())
    throw ValidationError("dependency profiles describe different experiments");
  into.runs += other.runs;
  for (std::size_t i = 0; i < into.strata.size(); ++i) {
    into.strata[i].pair_count += other.strata[i].pair_count;
    into.strata[i].both_count += other.strata[i].both_count;
  }
}

std::vector<DependencyProfile> run_dependency_profile(const ExperimentPlan& plan) {
  validate(plan);
  if (plan.frag.mode != FragMode::full)
    throw ValidationError("dependency profiles need full mode");
  if (plan.s_values.empty()) throw ValidationError("dependency profiles need at least one s");
  const auto split = split_threads(plan.threads, plan.trials);
  std::vector<DependencyProfile> out;
  for (int n : plan.sweep()) {
    std::vector<std::vector<DependencyProfile>> per_trial(static_cast<std::size_t>(plan.trials));
    parallel_for(per_trial.size(), split.outer, [&](std::size_t tau) {
      const FragmentationRun run =
          fragment_full(trial_config(plan, n, static_cast<int>(tau), split.inner));
      for (double s : plan.s_values) per_trial[tau].push_back(dependency_profile(run, s, plan.base));
    });
    for (std::size_t si = 0; si < plan.s_values.size(); ++si) {
      DependencyProfile pooled = per_trial.front()[si];
      for (std::size_t tau = 1; tau < per_trial.size(); ++tau)
        accumulate(pooled, per_trial[tau][si]);
      out.push_back(std::move(pooled));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lower-dimensional contents

std::vector<ConjectureRow> run_conjecture(const ExperimentPlan& plan) {
  validate(plan);
  if (plan.d_targets.empty()) throw ValidationError("conjecture runs need at least one d target");
  const auto split = split_threads(plan.threads, plan.trials);
  const auto sweep = plan.sweep();
  const std::size_t nd = plan.d_targets.size();

  // rows[d][N]
  std::vector<std::vector<ConjectureRow>> table(nd);
  for (int n : sweep) {
    FragConfig probe = plan.frag;
    probe.N = n;
    std::string cap_error;
    try {
      validate(probe);
    } catch (const ValidationError& e) {
      cap_error = e.what();
    }
    std::vector<std::vector<double>> ks(static_cast<std::size_t>(plan.trials),
                                        std::vector<double>(nd, kNaN));
    std::vector<std::vector<double>> chi = ks;
    std::uint64_t count = 0;
    if (cap_error.empty()) {
      std::vector<std::uint64_t> sizes(static_cast<std::size_t>(plan.trials), 0);
      parallel_for(static_cast<std::size_t>(plan.trials), split.outer, [&](std::size_t tau) {
        const FragmentationRun run =
            fragment(trial_config(plan, n, static_cast<int>(tau), split.inner));
        sizes[tau] = run.size();
        for (std::size_t di = 0; di < nd; ++di) {
          const auto contents = run.log10_contents(plan.d_targets[di]);
          const SignificandStats stats(plan.base, contents);
          ks[tau][di] = mantissa_discrepancy(stats);
          try {
            chi[tau][di] = chi_square_digits(stats).statistic;
          } catch (const ValidationError&) {
            chi[tau][di] = kNaN;
          }
        }
      });
      count = sizes.front();
    }
    for (std::size_t di = 0; di < nd; ++di) {
      ConjectureRow row;
      row.m = plan.frag.m;
      row.d = plan.d_targets[di];
      row.N = n;
      row.count = count;
      row.flag = cap_error;
      double ks_sum = 0.0;
      double chi_sum = 0.0;
      for (int tau = 0; tau < plan.trials; ++tau) {
        ks_sum += ks[static_cast<std::size_t>(tau)][di];
        chi_sum += chi[static_cast<std::size_t>(tau)][di];
      }
      row.ks = ks_sum / plan.trials;
      row.chi_square = chi_sum / plan.trials;
      if (cap_error.empty() && std::isnan(row.chi_square))
        row.flag = "too few pieces for chi-square";
      table[di].push_back(row);
    }
  }

  std::vector<ConjectureRow> out;
  for (auto& column : table) {
    bool monotone = true;
    for (std::size_t i = 1; i < column.size(); ++i)
      if (!(column[i].ks <= column[i - 1].ks)) monotone = false;
    for (auto& row : column) {
      row.monotone = monotone;
      out.push_back(row);
    }
  }
  return out;
}

}  // namespace benfrag
