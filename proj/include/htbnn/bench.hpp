#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "htbnn/architecture.hpp"
#include "htbnn/config.hpp"
#include "htbnn/density.hpp"
#include "htbnn/schedule.hpp"
#include "htbnn/synth.hpp"

namespace htbnn {

enum class ArchitectureMode {
  CompositionalWidth,  // L = ceil(log^{1+delta} n), widths ceil(sqrt n)
  LargeWidth,          // L = ceil(log^{1+delta} n), widths n
  LogDepth,            // L = ceil(log n), widths n
  Override             // user depth and widths, flagged non-theoretical
};

ArchitectureMode parse_architecture_mode(const std::string& s);
std::string to_string(ArchitectureMode m);

struct ArchitectureChoice {
  Architecture arch;
  bool theoretical;
};

/// Override mode takes `override_widths` = (r_0, ..., r_{L+1}) verbatim.
ArchitectureChoice choose_architecture(int n, int d, ArchitectureMode mode, double delta,
                                       const std::vector<int>& override_widths = {});

enum class InferenceMethod { MCMC, VB, Both };

struct ExperimentConfig {
  std::string fixture = "additive";
  double fixture_scale = 1.0;
  int d = 0;  // 0: fixture default
  std::string design = "uniform";  // uniform | curve
  std::vector<int> n_grid{128, 256, 512, 1024, 2048, 4096};
  double alpha = 0.5;
  double delta = 0.05;
  std::string prior_family = "student";  // student | cauchy
  double prior_nu = 3.0;
  std::string schedule = "directed";  // constant | directed
  InferenceMethod method = InferenceMethod::VB;
  int replications = 5;
  std::uint64_t seed = 1;
  std::string output_dir;
  ArchitectureMode arch_mode = ArchitectureMode::CompositionalWidth;
  int override_depth = 3;
  int override_width = 16;
  double clip_B = 0.0;  // 0: 1.25 M0 (or 1 for the zero fixture)
  int eval_points = 100000;
  int predict_draws = 16;
  int threads = 0;

  // Variational fit.
  int vb_steps = 2000;
  double vb_lr = 0.03;
  int vb_mc_samples = 1;
  int vb_batch = 128;
  double vb_warmup = 0.4;
  double vb_init_gain = 0.5;

  // Sampler.
  int mcmc_steps = 500;
  int mcmc_burnin = 500;
  int mcmc_chains = 1;
  int mcmc_thin = 10;

  double slope_tolerance = 0.15;

  /// Reads keys with the field names above; unknown keys are rejected.
  static ExperimentConfig from_config(const ConfigFile& file);
  void validate() const;

  TruthFixture truth() const;
  DesignSpec design_spec() const;
  HeavyTailDensity prior_density() const;
  ScalingSchedule scaling(int n) const;
  double clip_bound() const;
  /// Positive rate exponents the fitted slopes are compared against (slope ~ -exponent).
  std::vector<double> reference_exponents() const;
};

struct RateRow {
  int n;
  int replication;
  double error;
  std::string method;
};

struct MethodSummary {
  std::string method;
  std::vector<int> n;
  std::vector<double> mean_error, stderr;
  double slope = 0.0, slope_stderr = 0.0, slope_ci_low = 0.0, slope_ci_high = 0.0;
  bool slope_within_tolerance = false;
  int monotone_violations = 0;
  bool monotone = false;
};

struct RateReport {
  std::string fixture_label;
  std::string design;
  std::string architecture;
  bool theoretical_architecture = true;
  std::vector<double> reference_exponents;
  double slope_tolerance = 0.15;
  std::vector<RateRow> rows;
  std::vector<MethodSummary> summaries;
  std::vector<std::string> failures;
  bool partial = false;

  const MethodSummary* summary(const std::string& method) const;
};

/// Per-method aggregation of rows: means, standard errors, log-log slope and verdicts.
/// An increase of the mean error between consecutive grid points counts as a violation;
/// monotone means at most one violation and that one within one standard error.
std::vector<MethodSummary> summarize(const std::vector<RateRow>& rows, const std::vector<double>& exponents,
                                     double tolerance);

/// Fits one dataset and returns the clipped-posterior-mean L2(P_X) error.
double fit_and_score(const ExperimentConfig& cfg, int n, int replication, InferenceMethod method);

RateReport run_experiment(const ExperimentConfig& cfg);

/// Writes results.csv, summary.json and rate_plot.svg into dir.
void emit_report(const RateReport& report, const std::string& dir);
std::vector<RateRow> read_results_csv(const std::string& path);

}  // namespace htbnn
