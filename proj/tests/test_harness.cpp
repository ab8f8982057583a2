#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "benfrag/benford.hpp"
#include "benfrag/error.hpp"
#include "benfrag/harness.hpp"

using namespace benfrag;

namespace {

// E[P_1(sqrt 10)] for m = 1, N = 1, uniform cuts: (sqrt(10) - 1) / 9.
constexpr double kOneCutSqrt10 = 0.24025307335204216;

ExperimentPlan plan(int m, int n, int trials, std::vector<double> s, std::uint64_t seed = 1) {
  ExperimentPlan p;
  p.frag.m = m;
  p.frag.N = n;
  p.frag.rng = {seed, 0};
  p.trials = trials;
  p.s_values = std::move(s);
  p.ell_max = 200;
  return p;
}

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

void check_same_rows(const std::vector<ConvergenceRow>& a, const std::vector<ConvergenceRow>& b) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].N == b[i].N);
    CHECK(a[i].s == b[i].s);
    CHECK(same(a[i].mean_P, b[i].mean_P));
    CHECK(same(a[i].var_P, b[i].var_P));
    CHECK(a[i].flag == b[i].flag);
  }
}

}  // namespace

TEST_CASE("dependency cutoff is ceil(ln N)") {
  CHECK(dependency_cutoff(1) == 0);
  CHECK(dependency_cutoff(2) == 1);
  CHECK(dependency_cutoff(3) == 2);
  CHECK(dependency_cutoff(10) == 3);
  CHECK(dependency_cutoff(20) == 3);
  CHECK(dependency_cutoff(21) == 4);
  CHECK_THROWS_AS(dependency_cutoff(0), ValidationError);
}

TEST_CASE("plan json") {
  ExperimentPlan p = plan(2, 3, 7, {2.0, 5.0}, 99);
  p.n_sweep = {2, 4};
  p.d_targets = {1, 2};
  p.output = "out.csv";
  const ExperimentPlan back = ExperimentPlan::from_json(p.to_json());
  CHECK(back.to_json() == p.to_json());
  CHECK(back.sweep() == std::vector<int>{2, 4});
  CHECK(plan(2, 3, 1, {}).sweep() == std::vector<int>{3});
  CHECK_THROWS_AS(ExperimentPlan::from_json({{"trails", 3}}), ValidationError);
  CHECK_THROWS_AS(ExperimentPlan::from_json({{"trials", "many"}}), ValidationError);
  CHECK_THROWS_AS(ExperimentPlan::from_json(nlohmann::json::array()), ValidationError);
}

TEST_CASE("plan validation") {
  CHECK_NOTHROW(validate(plan(2, 3, 4, {2.0})));
  CHECK_THROWS_AS(validate(plan(2, 3, 0, {2.0})), ValidationError);
  CHECK_THROWS_AS(validate(plan(2, 3, 4, {10.0})), ValidationError);
  CHECK_THROWS_AS(validate(plan(2, 3, 4, {0.5})), ValidationError);
  ExperimentPlan p = plan(2, 3, 4, {2.0});
  p.d_targets = {3};
  CHECK_THROWS_AS(validate(p), ValidationError);
  p = plan(2, 3, 4, {2.0});
  p.n_sweep = {0};
  CHECK_THROWS_AS(validate(p), ValidationError);
  p = plan(2, 3, 4, {2.0});
  p.ell_max = 0;
  CHECK_THROWS_AS(validate(p), ValidationError);
}

TEST_CASE("expectation of a single cut") {
  const auto rows = run_expectation(plan(1, 1, 40000, {std::sqrt(10.0)}, 5));
  REQUIRE(rows.size() == 1);
  const ConvergenceRow& r = rows[0];
  CHECK(r.trials == 40000);
  CHECK(r.theory == doctest::Approx(0.5));
  const double sigma = std::sqrt(r.var_P / r.trials);
  CAPTURE(r.mean_P);
  CHECK(std::abs(r.mean_P - kOneCutSqrt10) < 4.0 * sigma);
  CHECK(r.abs_error == doctest::Approx(std::abs(r.mean_P - r.theory)));
}

TEST_CASE("rows carry the Mellin bound and the within-bound test") {
  ExperimentPlan p = plan(2, 2, 30, {2.0, 5.0}, 3);
  p.n_sweep = {1, 3};
  const auto rows = run_expectation(p);
  REQUIRE(rows.size() == 4);
  const auto spectrum = mellin_spectrum(p.frag.density, 10, p.ell_max);
  for (const auto& r : rows) {
    CAPTURE(r.N);
    CAPTURE(r.s);
    CHECK(r.m == 2);
    CHECK(r.theory == doctest::Approx(std::log10(r.s)));
    CHECK(r.bound == expectation_error_bound(spectrum, r.N * 2, {0.0, std::log10(r.s)}));
    CHECK(r.within_bound ==
          (r.abs_error <= r.bound + 3.0 * std::sqrt(r.var_P / r.trials)));
  }
  CHECK(rows[0].N == 1);
  CHECK(rows[0].s == 2.0);
  CHECK(rows[1].s == 5.0);
  CHECK(rows[2].N == 3);
}

TEST_CASE("expectation matches direct per-trial averages") {
  ExperimentPlan p = plan(2, 2, 5, {3.0}, 11);
  const auto rows = run_expectation(p);
  double sum = 0.0;
  double sq = 0.0;
  for (int t = 0; t < p.trials; ++t) {
    FragConfig cfg = p.frag;
    cfg.rng = derive(p.frag.rng, static_cast<std::uint64_t>(t));
    const double v = SignificandStats(10, fragment_full(cfg).log10_volumes()).proportion(3.0);
    sum += v;
    sq += v * v;
  }
  const double mean = sum / p.trials;
  CHECK(rows[0].mean_P == doctest::Approx(mean).epsilon(1e-14));
  CHECK(rows[0].var_P ==
        doctest::Approx((sq - p.trials * mean * mean) / (p.trials - 1)).epsilon(1e-9));
}

TEST_CASE("sampled expectation") {
  ExperimentPlan p = plan(3, 30, 4, {std::sqrt(10.0)}, 2);
  p.frag.mode = FragMode::sample;
  p.frag.sample_leaves = 20000;
  const auto rows = run_expectation(p);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].flag.empty());
  CHECK(std::abs(rows[0].mean_P - 0.5) < 0.02);
}

TEST_CASE("variance") {
  ExperimentPlan p = plan(2, 2, 40, {1.0, 2.0}, 6);
  const auto rows = run_variance(p);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].var_P == 0.0);
  CHECK(rows[0].mean_P == 0.0);
  CHECK(rows[1].var_P > 0.0);

  const auto single = run_variance(plan(2, 2, 1, {2.0}));
  CHECK(std::isnan(single[0].var_P));
  CHECK(single[0].flag == "variance undefined for a single trial");

  ExperimentPlan sampled = plan(2, 2, 4, {2.0});
  sampled.frag.mode = FragMode::sample;
  sampled.frag.sample_leaves = 10;
  CHECK_THROWS_AS(run_variance(sampled), ValidationError);
}

TEST_CASE("rows beyond the full-mode cap are flagged, not fatal") {
  ExperimentPlan p = plan(3, 2, 3, {2.0}, 1);
  p.n_sweep = {2, 9};
  const auto rows = run_expectation(p);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].flag.empty() == !std::isnan(rows[0].mean_P));
  CHECK(std::isnan(rows[1].mean_P));
  CHECK(std::isnan(rows[1].var_P));
  CHECK(rows[1].flag.find("capped") != std::string::npos);
  CHECK_FALSE(rows[1].within_bound);
}

TEST_CASE("results do not depend on thread count") {
  ExperimentPlan p = plan(2, 3, 12, {2.0, 7.0}, 77);
  p.n_sweep = {1, 2, 3};
  p.threads = 1;
  const auto a = run_expectation(p);
  p.threads = 5;
  const auto b = run_expectation(p);
  check_same_rows(a, b);
  // Fewer trials than threads parallelizes inside each trial instead.
  p.trials = 2;
  p.threads = 1;
  const auto c = run_variance(p);
  p.threads = 8;
  check_same_rows(c, run_variance(p));
}

TEST_CASE("dependency profile matches brute force") {
  for (int m : {1, 2}) {
    FragConfig cfg;
    cfg.m = m;
    cfg.N = m == 1 ? 6 : 3;
    cfg.rng = {404, 0};
    const FragmentationRun run = fragment_full(cfg);
    const double s = 2.5;
    const DependencyProfile prof = dependency_profile(run, s);
    const int depth = cfg.cut_steps();
    std::vector<std::uint64_t> pairs(static_cast<std::size_t>(depth) + 1, 0);
    std::vector<std::uint64_t> both(pairs.size(), 0);
    for (std::size_t i = 0; i < run.size(); ++i)
      for (std::size_t j = i + 1; j < run.size(); ++j) {
        const int mu = shared_factor_count(run.path(i), run.path(j));
        ++pairs[static_cast<std::size_t>(mu)];
        both[static_cast<std::size_t>(mu)] +=
            phi_s(10, s, run.log10_volume(i)) * phi_s(10, s, run.log10_volume(j));
      }
    REQUIRE(prof.strata.size() == pairs.size());
    for (std::size_t mu = 0; mu < pairs.size(); ++mu) {
      CAPTURE(mu);
      CHECK(prof.strata[mu].mu == static_cast<int>(mu));
      CHECK(prof.strata[mu].pair_count == pairs[mu]);
      CHECK(prof.strata[mu].both_count == both[mu]);
    }
    CHECK(prof.leaves == run.size());
    CHECK(prof.runs == 1);
    CHECK(prof.reference == doctest::Approx(std::pow(std::log10(s), 2)));
  }
}

TEST_CASE("three binary cuts give 28 pairs") {
  FragConfig cfg;
  cfg.m = 1;
  cfg.N = 3;
  cfg.rng = {2, 0};
  const DependencyProfile prof = dependency_profile(fragment_full(cfg), 3.0);
  REQUIRE(prof.strata.size() == 4);
  CHECK(prof.strata[0].pair_count == 16);
  CHECK(prof.strata[1].pair_count == 8);
  CHECK(prof.strata[2].pair_count == 4);
  CHECK(prof.strata[3].pair_count == 0);
}

TEST_CASE("high-dependence fraction is exactly 2^-(M+1)") {
  FragConfig cfg;
  cfg.m = 1;
  cfg.N = 10;
  cfg.rng = {1, 0};
  const DependencyProfile prof = dependency_profile(fragment_full(cfg), 2.0);
  CHECK(prof.cutoff == 3);
  CHECK(prof.high_dependence_ordered_pairs() == 16u * 64u * 64u);
  CHECK(prof.high_dependence_fraction() == 1.0 / 16.0);
  double low_pairs = 0.0;
  double low_both = 0.0;
  for (const auto& st : prof.strata)
    if (st.mu <= prof.cutoff) {
      low_pairs += static_cast<double>(st.pair_count);
      low_both += static_cast<double>(st.both_count);
    }
  CHECK(prof.low_dependence_deviation() ==
        doctest::Approx(low_both / low_pairs - prof.reference).epsilon(1e-14));
}

TEST_CASE("dependency profiles pool over trials") {
  ExperimentPlan p = plan(1, 5, 3, {2.0, 4.0}, 8);
  const auto pooled = run_dependency_profile(p);
  REQUIRE(pooled.size() == 2);
  DependencyProfile manual;
  for (int t = 0; t < 3; ++t) {
    FragConfig cfg = p.frag;
    cfg.rng = derive(p.frag.rng, static_cast<std::uint64_t>(t));
    const DependencyProfile one = dependency_profile(fragment_full(cfg), 2.0);
    if (t == 0)
      manual = one;
    else
      accumulate(manual, one);
  }
  CHECK(pooled[0].runs == 3);
  for (std::size_t mu = 0; mu < manual.strata.size(); ++mu) {
    CHECK(pooled[0].strata[mu].pair_count == manual.strata[mu].pair_count);
    CHECK(pooled[0].strata[mu].both_count == manual.strata[mu].both_count);
  }
  CHECK(pooled[0].high_dependence_fraction() == 1.0 / 8.0);
  DependencyProfile other = dependency_profile(fragment_full(p.frag), 4.0);
  CHECK_THROWS_AS(accumulate(manual, other), ValidationError);
}

TEST_CASE("conjecture rows") {
  ExperimentPlan p = plan(2, 4, 3, {}, 10);
  p.n_sweep = {2, 4};
  p.d_targets = {1, 2};
  const auto rows = run_conjecture(p);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.count == (std::uint64_t{1} << (2 * r.N)));
    CHECK(r.ks > 0.0);
  }
  // d = m is the volume itself.
  double ks = 0.0;
  double chi = 0.0;
  for (int t = 0; t < 3; ++t) {
    FragConfig cfg = p.frag;
    cfg.N = 4;
    cfg.rng = derive(p.frag.rng, static_cast<std::uint64_t>(t));
    const FragmentationRun run = fragment_full(cfg);
    ks += mantissa_discrepancy(run.log10_volumes(), 10);
    chi += chi_square_digits(run.log10_volumes(), 10).statistic;
  }
  const ConjectureRow* volume_row = nullptr;
  for (const auto& r : rows)
    if (r.d == 2 && r.N == 4) volume_row = &r;
  REQUIRE(volume_row != nullptr);
  CHECK(volume_row->ks == doctest::Approx(ks / 3.0).epsilon(1e-14));
  CHECK(volume_row->chi_square == doctest::Approx(chi / 3.0).epsilon(1e-12));

  for (int d : {1, 2}) {
    std::vector<double> series;
    bool flag = true;
    for (const auto& r : rows)
      if (r.d == d) series.push_back(r.ks);
    for (std::size_t i = 1; i < series.size(); ++i) flag = flag && series[i] <= series[i - 1];
    for (const auto& r : rows)
      if (r.d == d) CHECK(r.monotone == flag);
  }

  // N = 1, m = 2: four pieces are too few for chi-square.
  ExperimentPlan small = plan(2, 1, 2, {}, 10);
  small.d_targets = {1};
  const auto few = run_conjecture(small);
  CHECK(std::isnan(few[0].chi_square));
  CHECK(few[0].flag == "too few pieces for chi-square");
  ExperimentPlan none = plan(2, 1, 2, {});
  CHECK_THROWS_AS(run_conjecture(none), ValidationError);
}
