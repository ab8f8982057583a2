#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "benfrag/benford.hpp"
#include "benfrag/density.hpp"
#include "benfrag/error.hpp"
#include "benfrag/fragmentation.hpp"
#include "benfrag/harness.hpp"
#include "benfrag/mellin.hpp"
#include "benfrag/output.hpp"

namespace benfrag::cli {

namespace {

using nlohmann::json;

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string out;
  std::string format;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

struct FragmentArgs {
  std::string config;
  int m = 1;
  int N = 1;
  std::string density = R"({"kind":"uniform"})";
  std::string mode = "full";
  std::size_t leaves = 0;
  std::vector<double> edges;
  std::vector<int> axis_order;
  std::uint64_t stream = 0;
};

struct AnalyzeArgs {
  std::string in;
  std::string column = "log10_volume";
  std::string scale = "auto";
  int base = 10;
  int s_grid = 64;
};

struct MellinArgs {
  std::string density = R"({"kind":"uniform"})";
  int base = 10;
  int factors = 1;
  int lmax = 1000;
  std::vector<double> interval{0.0, 1.0};
  std::string csv;
};

struct PlanArgs {
  std::string plan;
  int trials = 1;
  std::vector<int> n_sweep;
  std::vector<double> s_values;
  std::vector<int> d_targets;
  int lmax = 1000;
};

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(what + " is not valid JSON: " + e.what());
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json_text(buf.str(), "'" + path + "'");
}

bool given(const CLI::App* app, const std::string& name) { return app->count(name) > 0; }

Format choose_format(const Globals& g, const std::string& out_path, Format fallback) {
  if (!g.format.empty()) return parse_format(g.format);
  auto ends_with = [&](const std::string& suffix) {
    return out_path.size() >= suffix.size() &&
           out_path.compare(out_path.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".json")) return Format::json;
  if (ends_with(".csv")) return Format::csv;
  return fallback;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text << std::flush;
  else
    write_text(path, text);
}

// ---------------------------------------------------------------------------

int cmd_fragment(const CLI::App* sub, const FragmentArgs& a, const Globals& g, std::ostream& out) {
  FragConfig cfg;
  if (!a.config.empty()) cfg = FragConfig::from_json(read_json_file(a.config));
  if (a.config.empty() || given(sub, "--m")) cfg.m = a.m;
  if (a.config.empty() || given(sub, "--N")) cfg.N = a.N;
  if (a.config.empty() || given(sub, "--density"))
    cfg.density = Density::from_json(parse_json_text(a.density, "--density"));
  if (a.config.empty() || given(sub, "--mode")) cfg.mode = a.mode == "sample" ? FragMode::sample : FragMode::full;
  if (given(sub, "--leaves")) cfg.sample_leaves = a.leaves;
  if (given(sub, "--edges")) cfg.initial_edges = a.edges;
  if (given(sub, "--axis-order")) cfg.axis_order = a.axis_order;
  if (given(sub, "--stream")) cfg.rng.stream = a.stream;
  if (a.config.empty() || g.seed_opt->count() > 0) cfg.rng.seed = g.seed;
  if (a.config.empty() || g.threads_opt->count() > 0) cfg.threads = g.threads;
  validate(cfg);

  const FragmentationRun run = fragment(cfg);
  const Format f = choose_format(g, g.out, Format::csv);
  emit(g.out, f == Format::csv ? pieces_csv(run) : render(pieces_json(run)), out);
  return kOk;
}

int cmd_analyze(const AnalyzeArgs& a, const Globals& g, std::ostream& out) {
  std::vector<double> values = read_csv_column(a.in, a.column);
  if (values.empty()) throw ValidationError("column '" + a.column + "' has no values");
  bool is_log = a.scale == "log10";
  if (a.scale == "auto")
    is_log = a.column.rfind("log10_", 0) == 0 || a.column.rfind("edge_", 0) == 0;
  if (!is_log) {
    for (double& v : values) {
      if (!(v > 0.0) || !std::isfinite(v))
        throw ValidationError("column '" + a.column + "' holds a non-positive value");
      v = std::log10(v);
    }
  }
  const auto grid = log_spaced_grid(a.base, a.s_grid);
  const ProportionCurve curve = proportion_curve(values, a.base, grid);
  const Format f = choose_format(g, g.out, Format::json);
  emit(g.out, f == Format::json ? render(stats_json(curve)) : stats_csv(curve), out);
  return kOk;
}

int cmd_mellin(const MellinArgs& a, const Globals& g, std::ostream& out) {
  if (a.interval.size() != 2) throw ValidationError("--interval takes a,b");
  const UnitInterval interval{a.interval[0], a.interval[1]};
  validate(interval);
  if (a.factors < 1) throw ValidationError("--factors must be at least 1");
  const Density d = Density::from_json(parse_json_text(a.density, "--density"));
  const MellinSpectrum spectrum = mellin_spectrum(d, a.base, a.lmax, g.threads);
  const MellinReport report = condition_sum(spectrum, a.factors);
  json j = to_json(report);
  j["interval"] = {interval.a, interval.b};
  j["error_bound"] = json_number(expectation_error_bound(spectrum, a.factors, interval));
  if (!a.csv.empty()) write_text(a.csv, mellin_csv(report));
  const Format f = choose_format(g, g.out, Format::json);
  emit(g.out, f == Format::json ? render(j) : mellin_csv(report), out);
  return kOk;
}

ExperimentPlan load_plan(const CLI::App* sub, const PlanArgs& a, const Globals& g) {
  ExperimentPlan plan = ExperimentPlan::from_json(read_json_file(a.plan));
  if (given(sub, "--trials")) plan.trials = a.trials;
  if (given(sub, "--N-sweep")) plan.n_sweep = a.n_sweep;
  if (given(sub, "--s")) plan.s_values = a.s_values;
  if (given(sub, "--d")) plan.d_targets = a.d_targets;
  if (given(sub, "--lmax")) plan.ell_max = a.lmax;
  if (g.seed_opt->count() > 0) plan.frag.rng.seed = g.seed;
  if (g.threads_opt->count() > 0) plan.threads = g.threads;
  if (!g.out.empty()) plan.output = g.out;
  validate(plan);
  return plan;
}

int cmd_convergence(bool variance, const CLI::App* sub, const PlanArgs& a, const Globals& g,
                    std::ostream& out) {
  const ExperimentPlan plan = load_plan(sub, a, g);
  if (plan.s_values.empty()) throw ValidationError("the plan needs at least one s value");
  const auto rows = variance ? run_variance(plan) : run_expectation(plan);
  const Format f = choose_format(g, plan.output, Format::csv);
  emit(plan.output, f == Format::csv ? convergence_csv(rows) : render(convergence_json(rows)), out);
  return kOk;
}

int cmd_conjecture(const CLI::App* sub, const PlanArgs& a, const Globals& g, std::ostream& out) {
  const ExperimentPlan plan = load_plan(sub, a, g);
  const auto rows = run_conjecture(plan);
  const Format f = choose_format(g, plan.output, Format::csv);
  emit(plan.output, f == Format::csv ? conjecture_csv(rows) : render(conjecture_json(rows)), out);
  return kOk;
}

int cmd_depprofile(const CLI::App* sub, const PlanArgs& a, const Globals& g, std::ostream& out) {
  const ExperimentPlan plan = load_plan(sub, a, g);
  const auto profiles = run_dependency_profile(plan);
  const MellinSpectrum spectrum =
      mellin_spectrum(plan.frag.density, plan.base, plan.ell_max, plan.threads);
  std::vector<double> bounds;
  for (const auto& p : profiles)
    bounds.push_back(dependence_bound(spectrum, p.N * p.m, p.cutoff,
                                      {0.0, benford_cdf(p.base, p.s)}));
  const Format f = choose_format(g, plan.output, Format::csv);
  emit(plan.output,
       f == Format::csv ? dependency_csv(profiles, bounds) : render(dependency_json(profiles, bounds)),
       out);
  return kOk;
}

// ---------------------------------------------------------------------------

struct Check {
  std::string name;
  double value;
  double tolerance;
};

int cmd_selftest(std::ostream& out) {
  std::vector<Check> checks;

  // Closed-form leaves and conservation on small full runs.
  double leaf_err = 0.0;
  double mass_err = 0.0;
  for (int m = 1; m <= 3; ++m) {
    for (int n = 1; n <= 2; ++n) {
      FragConfig cfg;
      cfg.m = m;
      cfg.N = n;
      cfg.rng = {2024, static_cast<std::uint64_t>(10 * m + n)};
      cfg.initial_edges.assign(static_cast<std::size_t>(m), 1.5);
      const FragmentationRun run = fragment_full(cfg);
      const auto cuts = draw_cuts(cfg);
      double total = 0.0;
      for (std::size_t i = 0; i < run.size(); ++i) {
        const double direct = closed_form_leaf(cfg, cuts, run.path(i));
        const double stored = std::pow(10.0, run.log10_volume(i));
        leaf_err = std::max(leaf_err, std::abs(stored - direct) / direct);
        total += stored;
      }
      const double volume = std::pow(1.5, m);
      mass_err = std::max(mass_err, std::abs(total - volume) / volume);
    }
  }
  checks.push_back({"closed-form leaves (max relative error)", leaf_err, 1e-12});
  checks.push_back({"volume conservation (max relative error)", mass_err, 1e-9});

  double mellin_err = 0.0;
  for (int ell = -20; ell <= 20; ++ell)
    mellin_err = std::max(mellin_err, std::abs(mellin_quadrature(Density::uniform(), ell, 10) -
                                               uniform_mellin(ell, 10)));
  checks.push_back({"uniform Mellin analytic vs quadrature (max abs error)", mellin_err, 1e-8});

  bool ok = true;
  for (const auto& c : checks) {
    const bool pass = c.value < c.tolerance;
    ok = ok && pass;
    char line[64];
    std::snprintf(line, sizeof line, "%.3e < %.0e", c.value, c.tolerance);
    out << (pass ? "ok   " : "FAIL ") << c.name << ": " << line << "\n";
  }
  out << std::flush;
  return ok ? kOk : kNumerical;
}

std::string one_line(std::string msg) {
  std::replace(msg.begin(), msg.end(), '\n', ' ');
  return msg;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Random box fragmentation and Benford's law experiments", "benfrag"};
  app.require_subcommand(1);
  app.fallthrough();
  app.footer(
      "Precedence: explicit flags override values from --config/--plan files, which override\n"
      "built-in defaults. Output goes to stdout unless --out is given; the format follows\n"
      "--format, else the --out extension, else the subcommand default.");

  Globals g;
  g.seed_opt = app.add_option("--seed", g.seed, "Root seed")->capture_default_str();
  g.threads_opt = app.add_option("--threads", g.threads, "Worker threads (never changes output)")
                      ->capture_default_str()
                      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Output file ('-' for stdout)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  FragmentArgs fa;
  auto* frag = app.add_subcommand("fragment", "Fragment a box and list the pieces");
  frag->add_option("--config", fa.config, "FragConfig JSON file")->check(CLI::ExistingFile);
  frag->add_option("--m", fa.m, "Dimension")->capture_default_str();
  frag->add_option("--N", fa.N, "Iterations")->capture_default_str();
  frag->add_option("--density", fa.density, "Cut density as JSON")->capture_default_str();
  frag->add_option("--mode", fa.mode, "full or sample")
      ->capture_default_str()
      ->check(CLI::IsMember({"full", "sample"}));
  frag->add_option("--leaves", fa.leaves, "Leaves drawn in sample mode");
  frag->add_option("--edges", fa.edges, "Initial edge lengths a,b,...")->delimiter(',');
  frag->add_option("--axis-order", fa.axis_order, "Axis cut at each step of an iteration")
      ->delimiter(',');
  frag->add_option("--stream", fa.stream, "Stream id under the seed");

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand("analyze", "Benford statistics of a CSV column");
  analyze->add_option("--in", aa.in, "Input CSV")->required()->check(CLI::ExistingFile);
  analyze->add_option("--column", aa.column, "Column to analyze")->capture_default_str();
  analyze->add_option("--scale", aa.scale, "auto: log10_* and edge_* columns are log10 values")
      ->capture_default_str()
      ->check(CLI::IsMember({"auto", "log10", "linear"}));
  analyze->add_option("--base", aa.base, "Base B")->capture_default_str();
  analyze->add_option("--s-grid", aa.s_grid, "Points in the log-spaced s grid")
      ->capture_default_str();

  MellinArgs ma;
  auto* mellin = app.add_subcommand("mellin", "Mellin condition sum of a density");
  mellin->add_option("--density", ma.density, "Cut density as JSON")->capture_default_str();
  mellin->add_option("--base", ma.base, "Base B")->capture_default_str();
  mellin->add_option("--factors", ma.factors, "Number n of independent factors")
      ->capture_default_str();
  mellin->add_option("--lmax", ma.lmax, "Truncation ell_max")->capture_default_str();
  mellin->add_option("--interval", ma.interval, "Mantissa interval a,b for the error bound")
      ->delimiter(',')
      ->expected(2);
  mellin->add_option("--csv", ma.csv, "Also write per-ell magnitudes here");

  PlanArgs pa;
  std::vector<CLI::App*> plan_cmds;
  for (const auto& [name, desc] :
       std::vector<std::pair<std::string, std::string>>{
           {"expectation", "Mean of P_N(s) across trials"},
           {"variance", "Variance of P_N(s) across trials (full mode)"},
           {"conjecture", "Benford fit of lower-dimensional contents"},
           {"depprofile", "Pair dependence by number of shared cuts (full mode)"}}) {
    auto* sub = app.add_subcommand(name, desc);
    sub->add_option("--plan", pa.plan, "ExperimentPlan JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--trials", pa.trials, "Override trials");
    sub->add_option("--N-sweep", pa.n_sweep, "Override N_sweep")->delimiter(',');
    sub->add_option("--s", pa.s_values, "Override s_values")->delimiter(',');
    sub->add_option("--d", pa.d_targets, "Override d_targets")->delimiter(',');
    sub->add_option("--lmax", pa.lmax, "Override ell_max");
    plan_cmds.push_back(sub);
  }

  auto* selftest = app.add_subcommand("selftest", "Run the built-in oracle checks");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << one_line(e.what()) << "\n";
    return kValidation;
  }

  try {
    if (frag->parsed()) return cmd_fragment(frag, fa, g, out);
    if (analyze->parsed()) return cmd_analyze(aa, g, out);
    if (mellin->parsed()) return cmd_mellin(ma, g, out);
    if (selftest->parsed()) return cmd_selftest(out);
    if (plan_cmds[0]->parsed()) return cmd_convergence(false, plan_cmds[0], pa, g, out);
    if (plan_cmds[1]->parsed()) return cmd_convergence(true, plan_cmds[1], pa, g, out);
    if (plan_cmds[2]->parsed()) return cmd_conjecture(plan_cmds[2], pa, g, out);
    if (plan_cmds[3]->parsed()) return cmd_depprofile(plan_cmds[3], pa, g, out);
  } catch (const ValidationError& e) {
    err << "error: " << one_line(e.what()) << "\n";
    return kValidation;
  } catch (const json::exception& e) {
    err << "error: " << one_line(e.what()) << "\n";
    return kValidation;
  } catch (const NumericalError& e) {
    err << "numerical error: " << one_line(e.what())
        << " (achieved " << format_double(e.achieved_error()) << ")\n";
    return kNumerical;
  } catch (const std::exception& e) {
    err << "numerical error: " << one_line(e.what()) << "\n";
    return kNumerical;
  }
  return kValidation;
}

}  // namespace benfrag::cli
