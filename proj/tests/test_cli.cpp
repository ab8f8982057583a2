#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"

#include "benfrag/output.hpp"

using namespace benfrag;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "benfrag_test_cli";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string write_plan(const std::string& name, const nlohmann::json& j) {
  const fs::path p = scratch() / name;
  std::ofstream(p) << j.dump();
  return p.string();
}

nlohmann::json small_plan() {
  return {{"frag", {{"m", 2}, {"N", 2}, {"seed", 7}}},
          {"trials", 6},
          {"s_values", {2.0, 5.0}},
          {"N_sweep", {1, 2, 3}},
          {"d_targets", {1, 2}},
          {"ell_max", 100}};
}

}  // namespace

TEST_CASE("usage errors exit 1, help exits 0") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"fragment", "--m", "zero"}).code == 1);
  CHECK(run({"fragment", "--format", "xml"}).code == 1);
  CHECK(run({"fragment", "--bogus", "1"}).code == 1);
  CHECK(run({"selftest", "extra"}).code == 1);
  const Result help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("fragment") != std::string::npos);
  CHECK(run({"fragment", "--help"}).code == 0);
}

TEST_CASE("selftest") {
  const Result r = run({"selftest"});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("ok") != std::string::npos);
}

TEST_CASE("full mode beyond the cap is a validation error") {
  const Result r = run({"fragment", "--m", "3", "--N", "99", "--mode", "full"});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("error: ", 0) == 0);
  CHECK(r.err.find("sample") != std::string::npos);
  CHECK(r.out.empty());
}

TEST_CASE("fragment output matches the library") {
  const Result r = run({"fragment", "--m", "2", "--N", "2", "--seed", "11", "--edges", "1,3"});
  REQUIRE(r.code == 0);
  FragConfig cfg;
  cfg.m = 2;
  cfg.N = 2;
  cfg.rng = {11, 0};
  cfg.initial_edges = {1.0, 3.0};
  CHECK(r.out == pieces_csv(fragment_full(cfg)));

  const Result j = run({"fragment", "--m", "2", "--N", "2", "--seed", "11", "--edges", "1,3",
                        "--format", "json"});
  CHECK(nlohmann::json::parse(j.out) == pieces_json(fragment_full(cfg)));

  const fs::path config = scratch() / "frag.json";
  std::ofstream(config) << cfg.to_json().dump();
  CHECK(run({"fragment", "--config", config.string()}).out == r.out);
  // Flags override the config file.
  CHECK(run({"fragment", "--config", config.string(), "--seed", "12"}).out != r.out);
}

TEST_CASE("output format precedence") {
  const fs::path dir = scratch();
  const std::vector<std::string> base{"fragment", "--m", "1", "--N", "2"};
  auto with = [&](std::vector<std::string> extra) {
    std::vector<std::string> args = base;
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  };
  REQUIRE(run(with({"--out", (dir / "a.json").string()})).code == 0);
  CHECK(slurp(dir / "a.json").front() == '{');
  REQUIRE(run(with({"--out", (dir / "b.json").string(), "--format", "csv"})).code == 0);
  CHECK(slurp(dir / "b.json").rfind("path,", 0) == 0);
  REQUIRE(run(with({"--out", (dir / "c.txt").string()})).code == 0);
  CHECK(slurp(dir / "c.txt").rfind("path,", 0) == 0);
  CHECK(run(with({})).out.rfind("path,", 0) == 0);
}

TEST_CASE("analyze reads a pieces file") {
  const fs::path pieces = scratch() / "pieces.csv";
  REQUIRE(run({"fragment", "--m", "3", "--N", "4", "--out", pieces.string()}).code == 0);
  const Result r = run({"analyze", "--in", pieces.string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["count"] == 4096);
  CHECK(j["table"].size() == 64);
  const auto values = read_csv_column(pieces.string(), "log10_volume");
  CHECK(j["ks"].get<double>() == mantissa_discrepancy(values, 10));
  CHECK(run({"analyze", "--in", pieces.string(), "--column", "nope"}).code == 1);
  CHECK(run({"analyze", "--in", (scratch() / "missing.csv").string()}).code == 1);

  const fs::path linear = scratch() / "linear.csv";
  std::ofstream(linear) << "x\n2\n30\n400\n0.5\n";
  const Result lin = run({"analyze", "--in", linear.string(), "--column", "x", "--s-grid", "3"});
  REQUIRE(lin.code == 0);
  CHECK(nlohmann::json::parse(lin.out)["digit_counts"][1] == 1);
  CHECK(run({"analyze", "--in", linear.string(), "--column", "x", "--scale", "log10"}).code == 0);
  std::ofstream(linear) << "x\n-2\n";
  CHECK(run({"analyze", "--in", linear.string(), "--column", "x"}).code == 1);
}

TEST_CASE("mellin command") {
  const Result r = run({"mellin", "--factors", "18", "--lmax", "1000"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["condition_sum"].get<double>() ==
        condition_sum(Density::uniform(), 18, 10, 1000).condition_sum);
  CHECK(j["condition_sum"].get<double>() < 1e-8);
  const fs::path csv = scratch() / "spectrum.csv";
  REQUIRE(run({"mellin", "--factors", "3", "--lmax", "20", "--csv", csv.string()}).code == 0);
  CHECK(read_csv_column(csv.string(), "ell").size() == 20);
  CHECK(run({"mellin", "--density", R"({"kind":"power","alpha":-3})"}).code == 1);
  CHECK(run({"mellin", "--density", "not json"}).code == 1);
  CHECK(run({"mellin", "--factors", "0"}).code == 1);
}

TEST_CASE("plan commands") {
  const std::string plan = write_plan("plan.json", small_plan());
  const Result e = run({"expectation", "--plan", plan});
  REQUIRE(e.code == 0);
  CHECK(e.out.rfind("m,N,s,trials,mean_P", 0) == 0);
  ExperimentPlan p = ExperimentPlan::from_json(small_plan());
  CHECK(e.out == convergence_csv(run_expectation(p)));

  const Result v = run({"variance", "--plan", plan, "--N-sweep", "2", "--trials", "3"});
  REQUIRE(v.code == 0);
  p.n_sweep = {2};
  p.trials = 3;
  CHECK(v.out == convergence_csv(run_variance(p)));

  CHECK(run({"expectation", "--plan", plan, "--seed", "8"}).out != e.out);
  CHECK(run({"conjecture", "--plan", plan}).code == 0);
  const Result d = run({"depprofile", "--plan", plan, "--format", "json"});
  REQUIRE(d.code == 0);
  CHECK(nlohmann::json::parse(d.out).size() == 6);

  CHECK(run({"expectation"}).code == 1);
  CHECK(run({"expectation", "--plan", write_plan("bad.json", {{"trails", 1}})}).code == 1);
  CHECK(run({"expectation", "--plan", plan, "--s", "12"}).code == 1);

  // The plan's output path is used when --out is absent.
  nlohmann::json with_out = small_plan();
  const fs::path target = scratch() / "from_plan.csv";
  with_out["output"] = target.string();
  const Result o = run({"expectation", "--plan", write_plan("out.json", with_out)});
  REQUIRE(o.code == 0);
  CHECK(o.out.empty());
  CHECK(slurp(target) == e.out);
}

TEST_CASE("outputs are byte-identical across thread counts") {
  const std::string plan = write_plan("threads.json", small_plan());
  const std::vector<std::vector<std::string>> commands{
      {"fragment", "--m", "3", "--N", "5", "--seed", "3"},
      {"fragment", "--m", "3", "--N", "40", "--mode", "sample", "--leaves", "3000"},
      {"expectation", "--plan", plan},
      {"variance", "--plan", plan},
      {"conjecture", "--plan", plan},
      {"depprofile", "--plan", plan},
      {"mellin", "--factors", "5", "--lmax", "300"}};
  for (auto args : commands) {
    CAPTURE(args[0]);
    auto one = args;
    one.insert(one.end(), {"--threads", "1"});
    auto eight = args;
    eight.insert(eight.end(), {"--threads", "8"});
    const Result a = run(one);
    const Result b = run(eight);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
  }
}
