#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "doctest.h"
#include "htbnn/bench.hpp"
#include "htbnn/errors.hpp"

using namespace htbnn;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("choose_architecture formulas") {
  auto c = choose_architecture(100, 2, ArchitectureMode::CompositionalWidth, 0.05);
  CHECK(c.theoretical);
  CHECK(c.arch.depth() == 5);
  CHECK(c.arch.widths() == std::vector<int>{2, 10, 10, 10, 10, 10, 1});

  auto w = choose_architecture(100, 2, ArchitectureMode::LargeWidth, 0.05);
  CHECK(w.arch.depth() == 5);
  for (int l = 1; l <= 5; ++l) CHECK(w.arch.width(l) == 100);

  auto g = choose_architecture(100, 3, ArchitectureMode::LogDepth, 0.05);
  CHECK(g.arch.depth() == 5);  // ceil(4.605)
  CHECK(g.arch.width(0) == 3);

  auto o = choose_architecture(100, 2, ArchitectureMode::Override, 0.05, {2, 7, 5, 1});
  CHECK_FALSE(o.theoretical);
  CHECK(o.arch.widths() == std::vector<int>{2, 7, 5, 1});

  CHECK_THROWS_AS(choose_architecture(2, 2, ArchitectureMode::CompositionalWidth, 0.05), PreconditionError);
  CHECK_THROWS_AS(choose_architecture(100, 2, ArchitectureMode::Override, 0.05, {2, 1}), ConfigError);
  CHECK(parse_architecture_mode(to_string(ArchitectureMode::LargeWidth)) == ArchitectureMode::LargeWidth);
}

TEST_CASE("config file parsing") {
  auto f = ConfigFile::parse(
      "# experiment\n"
      "fixture = \"holder1\"  # trailing comment\n"
      "n_grid = [64, 128, 256]\n"
      "alpha = 0.25\n"
      "[vb]\n"
      "on = true\n");
  CHECK(f.string("fixture", "") == "holder1");
  CHECK(f.list("n_grid", {}) == std::vector<double>{64, 128, 256});
  CHECK(f.number("alpha", 0) == 0.25);
  CHECK(f.boolean("vb.on", false));
  CHECK(f.integer("missing", 7) == 7);
  CHECK_THROWS_AS(f.integer("alpha", 0), ConfigError);
  CHECK_THROWS_AS(f.number("fixture", 0), ConfigError);

  CHECK_THROWS_AS(ConfigFile::parse("x = \"open\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse("x = [1, 2\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse("x = \n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse("x = abc\n"), ConfigError);
}

TEST_CASE("experiment config validation") {
  auto cfg = ExperimentConfig::from_config(ConfigFile::parse("fixture = \"holder1\"\nn_grid = [64, 128]\nmethod = \"both\"\n"));
  CHECK(cfg.fixture == "holder1");
  CHECK(cfg.n_grid == std::vector<int>{64, 128});
  CHECK(cfg.method == InferenceMethod::Both);

  CHECK_THROWS_AS(ExperimentConfig::from_config(ConfigFile::parse("no_such_key = 1\n")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_config(ConfigFile::parse("n_grid = [128, 64]\n")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_config(ConfigFile::parse("alpha = 1\n")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_config(ConfigFile::parse("fixture = \"nope\"\n")), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_config(ConfigFile::parse("prior_family = \"cauchy\"\nmethod = \"vb\"\n")),
                  ConfigError);
  CHECK_NOTHROW(ExperimentConfig::from_config(ConfigFile::parse("prior_family = \"cauchy\"\nmethod = \"mcmc\"\n")));

  ExperimentConfig c;
  c.fixture = "zero";
  c.d = 2;
  CHECK(c.clip_bound() == 1.0);
  c.fixture = "additive";
  c.d = 4;
  CHECK(c.reference_exponents() == std::vector<double>{1.0 / 3.0});
}

TEST_CASE("summaries: slope and monotonicity") {
  std::vector<RateRow> rows;
  for (int n : {100, 200, 400, 800})
    for (int r = 0; r < 3; ++r) rows.push_back({n, r, std::pow(n, -1.0 / 3.0) * (1.0 + 0.01 * r), "vb"});
  auto s = summarize(rows, {1.0 / 3.0}, 0.15);
  REQUIRE(s.size() == 1);
  CHECK(s[0].slope == doctest::Approx(-1.0 / 3.0).epsilon(1e-9));
  CHECK(s[0].slope_within_tolerance);
  CHECK(s[0].monotone);
  CHECK(s[0].monotone_violations == 0);

  // A single rise inside the noise is tolerated, a second one is not.
  std::vector<RateRow> bumpy = {{1, 0, 1.0, "m"},  {1, 1, 1.2, "m"},  {2, 0, 1.05, "m"}, {2, 1, 1.25, "m"},
                                {4, 0, 0.5, "m"},  {4, 1, 0.6, "m"},  {8, 0, 0.55, "m"}, {8, 1, 0.65, "m"}};
  auto b = summarize(bumpy, {0.5}, 0.15);
  CHECK(b[0].monotone_violations == 2);
  CHECK_FALSE(b[0].monotone);
  bumpy.resize(6);
  b = summarize(bumpy, {0.5}, 0.15);
  CHECK(b[0].monotone_violations == 1);
  CHECK(b[0].monotone);
}

TEST_CASE("report files round trip") {
  RateReport r;
  r.fixture_label = "synthetic fixture";
  r.design = "uniform";
  r.architecture = "(1, 4, 1)";
  r.reference_exponents = {1.0 / 3.0, 0.25};
  for (int n : {64, 128, 256})
    for (int k = 0; k < 2; ++k) r.rows.push_back({n, k, 0.123456789012345 / n + k * 1e-3, k ? "mcmc" : "vb"});
  r.summaries = summarize(r.rows, r.reference_exponents, 0.15);

  const auto dir = std::filesystem::temp_directory_path() / "htbnn_report_test";
  std::filesystem::remove_all(dir);
  emit_report(r, dir.string());
  auto back = read_results_csv((dir / "results.csv").string());
  REQUIRE(back.size() == r.rows.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].n == r.rows[i].n);
    CHECK(back[i].method == r.rows[i].method);
    CHECK(std::fabs(back[i].error - r.rows[i].error) <= 1e-9 * std::fabs(r.rows[i].error));
  }
  auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(j["methods"].size() == 2);
  CHECK(j["fixture"] == "synthetic fixture");
  const std::string svg = slurp(dir / "rate_plot.svg");
  std::size_t refs = 0;
  for (auto p = svg.find("class=\"reference\""); p != std::string::npos; p = svg.find("class=\"reference\"", p + 1)) ++refs;
  CHECK(refs == 2);
  CHECK(svg.find("data-method=\"vb\"") != std::string::npos);

  // An empty report still produces well-formed files.
  const auto empty_dir = dir / "empty";
  emit_report(RateReport{}, empty_dir.string());
  CHECK(read_results_csv((empty_dir / "results.csv").string()).empty());
  CHECK(nlohmann::json::parse(slurp(empty_dir / "summary.json"))["methods"].empty());
  CHECK(slurp(empty_dir / "rate_plot.svg").find("</svg>") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("a small end-to-end experiment") {
  ExperimentConfig cfg;
  cfg.fixture = "holder1";
  cfg.n_grid = {64, 128};
  cfg.replications = 2;
  cfg.arch_mode = ArchitectureMode::Override;
  cfg.override_depth = 1;
  cfg.override_width = 8;
  cfg.vb_steps = 100;
  cfg.eval_points = 2000;
  auto report = run_experiment(cfg);
  CHECK(report.rows.size() == 4);
  CHECK_FALSE(report.theoretical_architecture);
  REQUIRE(report.summary("vb") != nullptr);
  for (const auto& row : report.rows) CHECK(row.error > 0.0);
  auto again = run_experiment(cfg);
  CHECK(again.rows[3].error == report.rows[3].error);
}
