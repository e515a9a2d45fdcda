// Command line front end: experiments, prior certification, approximation checks and data dumps.
#include <CLI11.hpp>
#include <json.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "htbnn/bench.hpp"
#include "htbnn/constructor.hpp"
#include "htbnn/density.hpp"
#include "htbnn/errors.hpp"
#include "htbnn/serialize.hpp"
#include "htbnn/synth.hpp"

using namespace htbnn;

namespace {

// A test function with Hoelder norm below 1 on [-1, 1]^d for the requested smoothness.
SmoothFunction check_function(int d, double beta) {
  if (beta <= 1.0) {
    const TruthFixture f = fixture("holder1", d, 1.0 / (4.0 * std::sqrt(static_cast<double>(d))));
    return f.smooth;
  }
  if (beta <= 2.0) {
    const TruthFixture f = fixture("holder2", d, 1.0 / (8.0 * d));
    return f.smooth;
  }
  return {d, [](const Eigen::VectorXd& x, const std::vector<int>& l) {
            double p = 0.1;
            for (Eigen::Index k = 0; k < x.size(); ++k) {
              switch (l[static_cast<std::size_t>(k)] % 4) {
                case 0: p *= std::sin(x(k)); break;
                case 1: p *= std::cos(x(k)); break;
                case 2: p *= -std::sin(x(k)); break;
                default: p *= -std::cos(x(k)); break;
              }
            }
            return p;
          }};
}

int approx_check(int d, double beta, int M, double F) {
  ApproxConfig cfg;
  cfg.d = d;
  cfg.beta = beta;
  cfg.M = M;
  cfg.F = F;
  cfg.validate();
  const SmoothFunction f = check_function(d, beta);
  const Network net = wide_net(f, cfg);
  const BuildReport rep = build_report("wide_net", net, cfg.coefficient_cap());
  const double worst = sup_error(net, f, verification_points(cfg, 10000));
  std::cout << "depth " << rep.depth << " (threshold " << wide_depth_threshold(cfg) << ")\n"
            << "max width " << rep.max_width << " (threshold " << wide_width_threshold(cfg) << ")\n"
            << "coefficients " << rep.coefficients << ", active " << rep.active << "\n"
            << "max |coefficient| " << rep.max_coefficient << " (cap " << rep.cap << ")\n"
            << "sup error " << worst << "\n";
  return rep.max_coefficient <= rep.cap ? 0 : 1;
}

HeavyTailDensity family_from(const std::string& name, double nu) {
  if (name == "cauchy") return HeavyTailDensity::cauchy();
  if (name == "student") return HeavyTailDensity::student(nu);
  if (name == "gaussian") return gaussian_density();
  throw ConfigError("unknown family '" + name + "'");
}

void print_report(const RateReport& r) {
  std::cout << "fixture " << r.fixture_label << ", design " << r.design << "\narchitecture " << r.architecture << "\n";
  for (const auto& s : r.summaries) {
    std::cout << s.method << ":\n";
    for (std::size_t i = 0; i < s.n.size(); ++i)
      std::cout << "  n=" << s.n[i] << "  error " << s.mean_error[i] << " +- " << s.stderr[i] << "\n";
    std::cout << "  slope " << s.slope << " [" << s.slope_ci_low << ", " << s.slope_ci_high << "]";
    for (double e : r.reference_exponents) std::cout << "  reference " << -e;
    std::cout << "\n  slope " << (s.slope_within_tolerance ? "within" : "outside") << " tolerance, "
              << (s.monotone ? "monotone" : "not monotone") << "\n";
  }
  for (const auto& f : r.failures) std::cout << "failed: " << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heavy-tailed Bayesian neural network regression toolkit"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a rate experiment from a config file");
  std::string config_path, out_dir;
  double alpha = 0.0, clip_B = 0.0, vb_lr = 0.0;
  int chains = 0, steps = 0, burnin = 0, vb_steps = 0, vb_mc = 0;
  long long seed = -1;
  std::string vb_family;
  run->add_option("--config", config_path, "Experiment config file")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory (overrides output_dir)");
  run->add_option("--alpha", alpha, "Tempering exponent in (0, 1)");
  run->add_option("--chains", chains, "Number of MCMC chains");
  run->add_option("--steps", steps, "Kept MCMC sweeps");
  run->add_option("--burnin", burnin, "Adaptive MCMC sweeps");
  run->add_option("--seed", seed, "Master seed");
  run->add_option("--clip-B", clip_B, "Clipping bound for posterior means");
  run->add_option("--vb-family", vb_family, "Variational and prior base family: student[:nu] (cauchy is rejected)");
  run->add_option("--vb-steps", vb_steps, "Optimizer steps");
  run->add_option("--vb-lr", vb_lr, "Optimizer learning rate");
  run->add_option("--vb-mc-samples", vb_mc, "Monte-Carlo draws per gradient step");

  auto* cert = app.add_subcommand("certify-prior", "Check the tail conditions of a base density on a grid");
  std::string family = "cauchy";
  double nu = 3.0;
  cert->add_option("--family", family, "cauchy | student | gaussian");
  cert->add_option("--nu", nu, "Student degrees of freedom");

  auto* approx = app.add_subcommand("approx-check", "Build the grid approximation network and report its size and error");
  int d = 1, M = 8;
  double beta = 1.0, F = 1.0;
  approx->add_option("--d", d, "Input dimension")->check(CLI::Range(1, 4));
  approx->add_option("--beta", beta, "Smoothness");
  approx->add_option("--M", M, "Grid parameter");
  approx->add_option("--F", F, "Hoelder radius");

  auto* report = app.add_subcommand("report", "Summarize an existing results directory");
  std::string report_dir;
  report->add_option("dir", report_dir, "Directory holding results.csv")->required();

  auto* gen = app.add_subcommand("gen-data", "Write a synthetic regression dataset as CSV");
  std::string fix_name = "additive", design = "uniform", csv_path = "data.csv";
  int n = 1000, gd = 0;
  double scale = 1.0;
  long long gseed = 1;
  gen->add_option("--fixture", fix_name, "Fixture name");
  gen->add_option("--design", design, "uniform | curve");
  gen->add_option("--n", n, "Number of observations");
  gen->add_option("--d", gd, "Input dimension (0: fixture default)");
  gen->add_option("--scale", scale, "Fixture amplitude");
  gen->add_option("--seed", gseed, "Seed");
  gen->add_option("--out", csv_path, "Output CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ConfigFile file = ConfigFile::load(config_path);
      if (alpha > 0.0) file.set("alpha", alpha);
      if (chains > 0) file.set("mcmc_chains", static_cast<double>(chains));
      if (steps > 0) file.set("mcmc_steps", static_cast<double>(steps));
      if (burnin > 0) file.set("mcmc_burnin", static_cast<double>(burnin));
      if (seed >= 0) file.set("seed", static_cast<double>(seed));
      if (clip_B > 0.0) file.set("clip_B", clip_B);
      if (vb_steps > 0) file.set("vb_steps", static_cast<double>(vb_steps));
      if (vb_lr > 0.0) file.set("vb_lr", vb_lr);
      if (vb_mc > 0) file.set("vb_mc_samples", static_cast<double>(vb_mc));
      if (!vb_family.empty()) {
        const auto colon = vb_family.find(':');
        const std::string fam = vb_family.substr(0, colon);
        if (fam == "cauchy")
          throw ConfigError("Cauchy has no finite second moment and cannot serve as a variational base");
        if (fam != "student") throw ConfigError("unknown variational family '" + vb_family + "'");
        file.set("prior_family", std::string("student"));
        if (colon != std::string::npos) file.set("prior_nu", std::stod(vb_family.substr(colon + 1)));
      }
      if (!out_dir.empty()) file.set("output_dir", out_dir);
      const ExperimentConfig cfg = ExperimentConfig::from_config(file);
      const RateReport rep = run_experiment(cfg);
      print_report(rep);
      if (!cfg.output_dir.empty()) {
        emit_report(rep, cfg.output_dir);
        std::cout << "wrote " << cfg.output_dir << "\n";
      }
      return rep.partial ? 2 : 0;
    }
    if (*cert) {
      const CertificationReport rep = certify(family_from(family, nu));
      std::cout << family << ": " << rep.summary() << "\n";
      return rep.pass() ? 0 : 1;
    }
    if (*approx) return approx_check(d, beta, M, F);
    if (*report) {
      const auto rows = read_results_csv((std::filesystem::path(report_dir) / "results.csv").string());
      RateReport rep;
      rep.rows = rows;
      const auto summary_path = std::filesystem::path(report_dir) / "summary.json";
      rep.fixture_label = "(from " + report_dir + ")";
      std::ifstream js(summary_path);
      if (js) {
        const auto j = nlohmann::json::parse(js);
        rep.fixture_label = j.value("fixture", rep.fixture_label);
        rep.design = j.value("design", std::string());
        rep.architecture = j.value("architecture", std::string());
        rep.reference_exponents = j.value("reference_exponents", std::vector<double>{});
        rep.slope_tolerance = j.value("slope_tolerance", 0.15);
      }
      rep.summaries = summarize(rep.rows, rep.reference_exponents, rep.slope_tolerance);
      print_report(rep);
      return 0;
    }
    if (*gen) {
      const TruthFixture fix = fixture(fix_name, gd, scale);
      const DesignSpec spec = design == "curve" ? DesignSpec::curve(fix.d) : DesignSpec::uniform_cube(fix.d);
      Rng rng(static_cast<std::uint64_t>(gseed));
      write_data_csv(csv_path, gen_data(fix, spec, n, rng));
      std::cout << "wrote " << n << " rows to " << csv_path << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
