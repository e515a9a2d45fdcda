#include "htbnn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "htbnn/divergences.hpp"
#include "htbnn/errors.hpp"
#include "htbnn/mcmc.hpp"
#include "htbnn/prior.hpp"
#include "htbnn/special.hpp"
#include "htbnn/stats.hpp"
#include "htbnn/vb.hpp"

namespace htbnn {

ArchitectureMode parse_architecture_mode(const std::string& s) {
  if (s == "compwi" || s == "theoretical-compwi") return ArchitectureMode::CompositionalWidth;
  if (s == "largewi" || s == "theoretical-largewi") return ArchitectureMode::LargeWidth;
  if (s == "logdepth" || s == "theoretical-logdepth") return ArchitectureMode::LogDepth;
  if (s == "override") return ArchitectureMode::Override;
  throw ConfigError("unknown architecture mode '" + s + "'");
}

std::string to_string(ArchitectureMode m) {
  switch (m) {
    case ArchitectureMode::CompositionalWidth:
      return "theoretical-compwi";
    case ArchitectureMode::LargeWidth:
      return "theoretical-largewi";
    case ArchitectureMode::LogDepth:
      return "theoretical-logdepth";
    case ArchitectureMode::Override:
      return "override";
  }
  return "?";
}

ArchitectureChoice choose_architecture(int n, int d, ArchitectureMode mode, double delta,
                                       const std::vector<int>& override_widths) {
  if (mode == ArchitectureMode::Override) {
    if (override_widths.size() < 3) throw ConfigError("override architecture needs at least three widths");
    return {Architecture(static_cast<int>(override_widths.size()) - 2, override_widths), false};
  }
  if (n < 3) throw PreconditionError("choose_architecture needs n >= 3");
  if (d < 1) throw PreconditionError("input dimension must be positive");
  const double logn = std::log(static_cast<double>(n));
  const int L = mode == ArchitectureMode::LogDepth ? static_cast<int>(std::ceil(logn))
                                                   : static_cast<int>(std::ceil(std::pow(logn, 1.0 + delta)));
  const int r = mode == ArchitectureMode::CompositionalWidth ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))))
                                                              : n;
  std::vector<int> widths(static_cast<std::size_t>(L) + 2, r);
  widths.front() = d;
  widths.back() = 1;
  return {Architecture(L, widths), true};
}

namespace {

const std::set<std::string> kKeys = {
    "fixture",      "fixture_scale",   "d",           "design",        "n_grid",        "alpha",
    "delta",        "prior_family",    "prior_nu",    "schedule",      "method",        "replications",
    "seed",         "output_dir",      "arch_mode",   "override_depth", "override_width", "clip_B",
    "eval_points",  "predict_draws",   "threads",     "vb_steps",      "vb_lr",         "vb_mc_samples",
    "vb_batch",     "vb_warmup",       "vb_init_gain", "mcmc_steps",   "mcmc_burnin",   "mcmc_chains",
    "mcmc_thin",    "slope_tolerance"};

InferenceMethod parse_method(const std::string& s) {
  if (s == "mcmc") return InferenceMethod::MCMC;
  if (s == "vb") return InferenceMethod::VB;
  if (s == "both") return InferenceMethod::Both;
  throw ConfigError("unknown inference method '" + s + "'");
}

std::string method_name(InferenceMethod m) { return m == InferenceMethod::MCMC ? "mcmc" : "vb"; }

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const ConfigFile& f) {
  for (const auto& [key, value] : f.values())
    if (!kKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  ExperimentConfig c;
  c.fixture = f.string("fixture", c.fixture);
  c.fixture_scale = f.number("fixture_scale", c.fixture_scale);
  c.d = f.integer("d", c.d);
  c.design = f.string("design", c.design);
  if (f.has("n_grid")) {
    c.n_grid.clear();
    for (double v : f.list("n_grid", {})) {
      if (v != std::floor(v) || v < 1) throw ConfigError("n_grid entries must be positive integers");
      c.n_grid.push_back(static_cast<int>(v));
    }
  }
  c.alpha = f.number("alpha", c.alpha);
  c.delta = f.number("delta", c.delta);
  c.prior_family = f.string("prior_family", c.prior_family);
  c.prior_nu = f.number("prior_nu", c.prior_nu);
  c.schedule = f.string("schedule", c.schedule);
  c.method = parse_method(f.string("method", method_name(c.method)));
  c.replications = f.integer("replications", c.replications);
  c.seed = static_cast<std::uint64_t>(f.number("seed", static_cast<double>(c.seed)));
  c.output_dir = f.string("output_dir", c.output_dir);
  c.arch_mode = parse_architecture_mode(f.string("arch_mode", to_string(c.arch_mode)));
  c.override_depth = f.integer("override_depth", c.override_depth);
  c.override_width = f.integer("override_width", c.override_width);
  c.clip_B = f.number("clip_B", c.clip_B);
  c.eval_points = f.integer("eval_points", c.eval_points);
  c.predict_draws = f.integer("predict_draws", c.predict_draws);
  c.threads = f.integer("threads", c.threads);
  c.vb_steps = f.integer("vb_steps", c.vb_steps);
  c.vb_lr = f.number("vb_lr", c.vb_lr);
  c.vb_mc_samples = f.integer("vb_mc_samples", c.vb_mc_samples);
  c.vb_batch = f.integer("vb_batch", c.vb_batch);
  c.vb_warmup = f.number("vb_warmup", c.vb_warmup);
  c.vb_init_gain = f.number("vb_init_gain", c.vb_init_gain);
  c.mcmc_steps = f.integer("mcmc_steps", c.mcmc_steps);
  c.mcmc_burnin = f.integer("mcmc_burnin", c.mcmc_burnin);
  c.mcmc_chains = f.integer("mcmc_chains", c.mcmc_chains);
  c.mcmc_thin = f.integer("mcmc_thin", c.mcmc_thin);
  c.slope_tolerance = f.number("slope_tolerance", c.slope_tolerance);
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (n_grid.empty()) throw ConfigError("n_grid is empty");
  for (std::size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1]) throw ConfigError("n_grid must be increasing");
  if (n_grid.front() < 3) throw ConfigError("n_grid entries must be at least 3");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie strictly inside (0, 1)");
  if (!(delta > 0.0)) throw ConfigError("delta must be positive");
  if (design != "uniform" && design != "curve") throw ConfigError("design must be 'uniform' or 'curve'");
  if (schedule != "constant" && schedule != "directed") throw ConfigError("schedule must be 'constant' or 'directed'");
  if (prior_family != "student" && prior_family != "cauchy") throw ConfigError("prior_family must be 'student' or 'cauchy'");
  if (prior_family == "cauchy" && method != InferenceMethod::MCMC)
    throw ConfigError("variational fits need a base density with a finite second moment; Cauchy is sampler-only");
  if (eval_points < 1 || predict_draws < 1) throw ConfigError("eval_points and predict_draws must be positive");
  if (override_depth < 1 || override_width < 1) throw ConfigError("override depth and width must be positive");
  if (clip_B < 0.0) throw ConfigError("clip_B must be non-negative");
  truth();
}

TruthFixture ExperimentConfig::truth() const {
  try {
    return htbnn::fixture(fixture, d, fixture_scale);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

DesignSpec ExperimentConfig::design_spec() const {
  const int dim = truth().d;
  return design == "curve" ? DesignSpec::curve(dim) : DesignSpec::uniform_cube(dim);
}

HeavyTailDensity ExperimentConfig::prior_density() const {
  return prior_family == "cauchy" ? HeavyTailDensity::cauchy() : HeavyTailDensity::student(prior_nu);
}

ScalingSchedule ExperimentConfig::scaling(int n) const {
  return schedule == "constant" ? ScalingSchedule::constant(n, delta) : ScalingSchedule::directed(n, delta);
}

double ExperimentConfig::clip_bound() const {
  if (clip_B > 0.0) return clip_B;
  const double m0 = truth().M0;
  return m0 > 0.0 ? 1.25 * m0 : 1.0;
}

std::vector<double> ExperimentConfig::reference_exponents() const {
  const TruthFixture t = truth();
  if (design == "curve" && !t.anisotropic) {
    // Smoothness over the intrinsic dimension of the design support.
    const auto bs = RateSpec::effective_smoothness(t.beta);
    const double b = *std::min_element(bs.begin(), bs.end());
    return {b / (2.0 * b + 1.0)};
  }
  return {t.rate_exponent()};
}

const MethodSummary* RateReport::summary(const std::string& method) const {
  for (const auto& s : summaries)
    if (s.method == method) return &s;
  return nullptr;
}

std::vector<MethodSummary> summarize(const std::vector<RateRow>& rows, const std::vector<double>& exponents,
                                     double tolerance) {
  std::map<std::string, std::map<int, std::vector<double>>> grouped;
  for (const auto& r : rows) grouped[r.method][r.n].push_back(r.error);
  std::vector<MethodSummary> out;
  for (const auto& [method, by_n] : grouped) {
    MethodSummary s;
    s.method = method;
    std::vector<double> lx, ly;
    for (const auto& [n, errs] : by_n) {
      s.n.push_back(n);
      s.mean_error.push_back(mean(errs));
      s.stderr.push_back(errs.size() > 1 ? standard_error(errs) : 0.0);
      if (s.mean_error.back() > 0.0) {
        lx.push_back(std::log(static_cast<double>(n)));
        ly.push_back(std::log(s.mean_error.back()));
      }
    }
    if (lx.size() >= 2) {
      const LinearFit fit = linear_fit(lx, ly);
      s.slope = fit.slope;
      s.slope_stderr = std::isfinite(fit.slope_stderr) ? fit.slope_stderr : 0.0;
      const double q = lx.size() > 2 ? special::student_quantile(0.975, static_cast<double>(lx.size()) - 2.0) : 0.0;
      s.slope_ci_low = s.slope - q * s.slope_stderr;
      s.slope_ci_high = s.slope + q * s.slope_stderr;
      for (double e : exponents) s.slope_within_tolerance = s.slope_within_tolerance || std::fabs(s.slope + e) <= tolerance;
    }
    bool large_violation = false;
    for (std::size_t i = 1; i < s.mean_error.size(); ++i) {
      const double rise = s.mean_error[i] - s.mean_error[i - 1];
      if (rise > 0.0) {
        ++s.monotone_violations;
        const double se = std::hypot(s.stderr[i], s.stderr[i - 1]);
        large_violation = large_violation || rise > se;
      }
    }
    s.monotone = s.monotone_violations <= 1 && !large_violation;
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

Eigen::MatrixXd spread_columns(const Eigen::MatrixXd& all, int count) {
  const Eigen::Index k = std::min<Eigen::Index>(all.cols(), count);
  Eigen::MatrixXd out(all.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i) out.col(i) = all.col(i * all.cols() / k);
  return out;
}

}  // namespace

double fit_and_score(const ExperimentConfig& cfg, int n, int replication, InferenceMethod method) {
  const TruthFixture truth = cfg.truth();
  const DesignSpec design = cfg.design_spec();
  const std::uint64_t task = static_cast<std::uint64_t>(n) * 1000u + static_cast<std::uint64_t>(replication);
  Rng data_rng = Rng::stream(cfg.seed, task);
  const RegressionData data = gen_data(truth, design, n, data_rng);

  std::vector<int> widths(static_cast<std::size_t>(cfg.override_depth) + 2, cfg.override_width);
  widths.front() = truth.d;
  widths.back() = 1;
  const Architecture arch = choose_architecture(n, truth.d, cfg.arch_mode, cfg.delta, widths).arch;
  const Prior prior(arch, cfg.prior_density(), cfg.scaling(n));

  Eigen::MatrixXd samples;
  Rng fit_rng = Rng::stream(cfg.seed ^ 0x9e3779b97f4a7c15ULL, task);
  if (method == InferenceMethod::VB) {
    VBConfig vc;
    vc.alpha = cfg.alpha;
    vc.steps = cfg.vb_steps;
    vc.lr = cfg.vb_lr;
    vc.objective.mc_samples = cfg.vb_mc_samples;
    vc.objective.batch_size = cfg.vb_batch;
    vc.kl_warmup = cfg.vb_warmup;
    vc.init_mu_gain = cfg.vb_init_gain;
    vc.eval_every = std::max(1, cfg.vb_steps / 20);
    vc.seed = mix_seed(cfg.seed, task);
    const VBFit fit = fit_vb(data, arch, prior, vc);
    samples.resize(static_cast<Eigen::Index>(arch.size()), cfg.predict_draws);
    for (int m = 0; m < cfg.predict_draws; ++m) samples.col(m) = fit.state.sample(fit_rng);
  } else {
    TemperConfig tc;
    tc.alpha = cfg.alpha;
    tc.steps = cfg.mcmc_steps;
    tc.burnin = cfg.mcmc_burnin;
    tc.chains = cfg.mcmc_chains;
    tc.thin = cfg.mcmc_thin;
    tc.threads = 1;
    tc.seed = mix_seed(cfg.seed, task);
    samples = spread_columns(run_chain(data, arch, prior, tc).pooled(), cfg.predict_draws);
  }

  Rng eval_rng = Rng::stream(cfg.seed ^ 0x2545f4914f6cdd1dULL, task);
  const DesignSample fresh = design.sample(cfg.eval_points, eval_rng);
  const Eigen::VectorXd fhat = clipped_mean(arch, samples, fresh.points, cfg.clip_bound());
  return std::sqrt(l2_px(fhat, truth.batch()(fresh.points)).value);
}

RateReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RateReport rep;
  const TruthFixture truth = cfg.truth();
  rep.fixture_label = truth.name + " (" + truth.label + ")";
  rep.design = cfg.design_spec().name();
  rep.reference_exponents = cfg.reference_exponents();
  rep.slope_tolerance = cfg.slope_tolerance;
  {
    std::vector<int> widths(static_cast<std::size_t>(cfg.override_depth) + 2, cfg.override_width);
    widths.front() = truth.d;
    widths.back() = 1;
    const auto choice = choose_architecture(cfg.n_grid.back(), truth.d, cfg.arch_mode, cfg.delta, widths);
    rep.theoretical_architecture = choice.theoretical;
    rep.architecture = to_string(cfg.arch_mode) + " " + choice.arch.to_string() +
                       (choice.theoretical ? "" : " (non-theoretical architecture)");
  }

  struct Task {
    int n, replication;
    InferenceMethod method;
  };
  std::vector<Task> tasks;
  for (int n : cfg.n_grid)
    for (int r = 0; r < cfg.replications; ++r) {
      if (cfg.method != InferenceMethod::MCMC) tasks.push_back({n, r, InferenceMethod::VB});
      if (cfg.method != InferenceMethod::VB) tasks.push_back({n, r, InferenceMethod::MCMC});
    }

  std::vector<double> errors(tasks.size(), std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> messages(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      try {
        errors[i] = fit_and_score(cfg, tasks[i].n, tasks[i].replication, tasks[i].method);
      } catch (const std::exception& e) {
        messages[i] = e.what();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int threads = std::max(1, std::min<int>(static_cast<int>(tasks.size()), cfg.threads > 0 ? cfg.threads : static_cast<int>(hw)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const std::string m = method_name(tasks[i].method);
    if (std::isfinite(errors[i])) {
      rep.rows.push_back({tasks[i].n, tasks[i].replication, errors[i], m});
    } else {
      rep.partial = true;
      rep.failures.push_back(m + " n=" + std::to_string(tasks[i].n) + " replication=" +
                             std::to_string(tasks[i].replication) + ": " +
                             (messages[i].empty() ? std::string("non-finite error") : messages[i]));
    }
  }
  rep.summaries = summarize(rep.rows, rep.reference_exponents, rep.slope_tolerance);
  return rep;
}

}  // namespace htbnn
