// End-to-end acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.
// Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "htbnn/bench.hpp"
#include "htbnn/calculus.hpp"
#include "htbnn/constructor.hpp"
#include "htbnn/mcmc.hpp"
#include "htbnn/prior.hpp"
#include "htbnn/stats.hpp"
#include "htbnn/vb.hpp"

using namespace htbnn;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

const Architecture kToy(1, {1, 1, 1});

Network toy_net(double w1, double shift2, double w2) {
  return Network(kToy, (Eigen::VectorXd(4) << 0.0, w1, shift2, w2).finished());
}

RegressionData toy_data(const std::vector<double>& x, const std::vector<double>& y) {
  RegressionData d{Eigen::MatrixXd(1, static_cast<Eigen::Index>(x.size())), Eigen::VectorXd(static_cast<Eigen::Index>(y.size()))};
  for (std::size_t i = 0; i < x.size(); ++i) {
    d.X(0, static_cast<Eigen::Index>(i)) = x[i];
    d.Y(static_cast<Eigen::Index>(i)) = y[i];
  }
  return d;
}

DesignSample uniform_design(int d, Eigen::Index m, Rng& rng) {
  DesignSample s{Eigen::MatrixXd(d, m)};
  for (Eigen::Index i = 0; i < s.points.size(); ++i) s.points.data()[i] = rng.uniform();
  return s;
}

// |x - 0.4| realized exactly on (1, 3, 1) by rho(x - 0.4) + rho(0.4 - x); the third unit is off.
const Architecture kSmall(1, {1, 3, 1});
Network exact_kink() {
  Eigen::VectorXd theta(10);
  theta << -0.4, 1.0, 0.4, -1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0;
  return Network(kSmall, theta);
}

// ---------------------------------------------------------------------------

void mult(Outcome& o) {
  const int P = 400;
  Eigen::MatrixXd X(2, P * P);
  for (int i = 0; i < P; ++i)
    for (int j = 0; j < P; ++j) X.col(i * P + j) << -1.0 + 2.0 * i / (P - 1), -1.0 + 2.0 * j / (P - 1);
  const Eigen::ArrayXd xy = X.row(0).transpose().array() * X.row(1).transpose().array();
  for (int R = 1; R <= 8; ++R) {
    const Network m = mult_net(R);
    const double err = (forward(m, X).row(0).transpose().array() - xy).abs().maxCoeff();
    o.detail << "R=" << R << ":" << err << " ";
    o.require(err <= std::pow(4.0, -R), "4^-R bound at R=" + std::to_string(R));
  }
}

void indicator(Outcome& o) {
  Rng rng(2);
  const double R = 50.0;
  long exact = 0, global = 0;
  for (int t = 0; t < 10000; ++t) {
    const int d = 1 + static_cast<int>(rng.index(3));
    Eigen::VectorXd a(d), b(d), x(d);
    for (int k = 0; k < d; ++k) {
      a(k) = rng.uniform(-1.0, 0.5);
      b(k) = rng.uniform(a(k) + 2.0 / R, 1.0);
    }
    const double s = rng.uniform(-5.0, 5.0);
    const Network ind = indicator_net(a, b, R), tst = test_net(a, b, s, R);
    for (int k = 0; k < d; ++k) x(k) = rng.uniform(-1, 1);
    bool inside = true;
    double margin = 1e9;
    for (int k = 0; k < d; ++k) {
      inside = inside && x(k) >= a(k) && x(k) < b(k);
      margin = std::min({margin, std::fabs(x(k) - a(k)), std::fabs(x(k) - b(k))});
    }
    const double vi = evaluate(ind, x), vt = evaluate(tst, x);
    if (margin >= 1.0 / R) {
      exact += vi != (inside ? 1.0 : 0.0);
      exact += vt != (inside ? s : 0.0);
    }
    global += std::fabs(vi - (inside ? 1.0 : 0.0)) > 1.0;
    global += std::fabs(vt - (inside ? s : 0.0)) > std::fabs(s);
  }
  o.detail << "exact-value mismatches " << exact << ", global-bound violations " << global;
  o.require(exact == 0 && global == 0, "exact values");
}

void wide(Outcome& o) {
  // |x - 0.4| / 4 has Hoelder norm below 1 on [-1, 1].
  const SmoothFunction f = fixture("holder1", 1, 0.25).smooth;
  std::vector<double> err;
  for (int M : {4, 8, 16}) {
    ApproxConfig cfg;
    cfg.M = M;
    cfg.F = 1.0;
    const Network net = wide_net(f, cfg);
    assert_coefficient_cap(net, cfg.coefficient_cap(), "wide_net");
    o.require(net.max_abs_coefficient() <= cfg.coefficient_cap(), "coefficient cap");
    err.push_back(sup_error(net, f, verification_points(cfg, 10000)));
  }
  for (int i = 0; i < 2; ++i) {
    const double ratio = err[static_cast<std::size_t>(i)] / err[static_cast<std::size_t>(i) + 1];
    o.detail << "M=" << (4 << i) << ": ratio " << ratio << " ";
    o.require(ratio >= 3.0 && ratio <= 5.0, "error ratio in [3, 5]");
  }
}

void propagation(Outcome& o) {
  Rng rng(4);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int L = 1 + static_cast<int>(rng.index(4));
    std::vector<int> r{1 + static_cast<int>(rng.index(3))};
    for (int l = 0; l < L; ++l) r.push_back(1 + static_cast<int>(rng.index(5)));
    r.push_back(1);
    const Architecture arch(L, r);
    const double b = rng.uniform(0.2, 2.0), delta = rng.uniform(0.0, 0.2);
    Eigen::VectorXd theta(static_cast<Eigen::Index>(arch.size()));
    for (auto& t : theta) t = rng.uniform(-b, b);
    Eigen::VectorXd other = theta;
    for (auto& t : other) t = std::clamp(t + rng.uniform(-delta, delta), -b, b);
    Eigen::MatrixXd X(r[0], 500);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.uniform();
    const double sup = (forward(Network(arch, theta), X) - forward(Network(arch, other), X)).cwiseAbs().maxCoeff();
    violations += sup > propagation_bound(arch, delta, b);
  }
  o.detail << "violations " << violations << "/1000";
  o.require(violations == 0, "no violations");
}

void divergences(Outcome& o) {
  Rng rng(5);
  const DesignSample design = uniform_design(2, 2000, rng);
  auto ridge = [&rng](double M0) -> BatchFunction {
    Eigen::MatrixXd W = Eigen::MatrixXd::NullaryExpr(3, 2, [&] { return rng.uniform(-4, 4); });
    Eigen::VectorXd b = Eigen::VectorXd::NullaryExpr(3, [&] { return rng.uniform(-1, 1); });
    Eigen::VectorXd a = Eigen::VectorXd::NullaryExpr(3, [&] { return rng.uniform(-1, 1); });
    const double amp = M0 * rng.uniform() / a.cwiseAbs().sum();
    return [=](const Eigen::MatrixXd& X) {
      Eigen::MatrixXd z = (W * X).colwise() + b;
      return Eigen::VectorXd(amp * (a.transpose() * z.array().tanh().matrix()).transpose());
    };
  };
  const auto f = ridge(1.0);
  o.require(renyi(f, f, 0.5, design).value == 0.0, "D(f, f) = 0");
  double worst_gap = 0.0;
  for (double alpha : {0.1, 0.5, 0.9})
    for (double gap : {0.3, 1.0, 2.5}) {
      auto c = [gap](const Eigen::MatrixXd& X) { return Eigen::VectorXd::Constant(X.cols(), gap); };
      auto z = [](const Eigen::MatrixXd& X) { return Eigen::VectorXd::Zero(X.cols()); };
      worst_gap = std::max(worst_gap, std::fabs(renyi(c, z, alpha, design).value - alpha * gap * gap / 2));
    }
  o.require(worst_gap <= 1e-9, "constant gap");
  int clip_violations = 0, kl_mismatch = 0;
  for (int t = 0; t < 500; ++t) {
    const auto g = ridge(1.0), h = ridge(1.0);
    const auto l2 = l2_px(g, h, design);
    const auto r = renyi(g, h, 0.5, design);
    clip_violations += r.value < renyi_clip_lower_bound(l2.value, 0.5, 1.0) - 3.0 * r.stderr;
    kl_mismatch += kl_variance(g, h, design).value != 2.0 * kl_regression(g, h, design).value;
  }
  o.detail << "constant-gap error " << worst_gap << ", clip violations " << clip_violations << "/500, KL mismatches "
           << kl_mismatch;
  o.require(clip_violations == 0, "clip inequality");
  o.require(kl_mismatch == 0, "kl_variance = 2 kl_regression");
}

void certification(Outcome& o) {
  const auto cauchy = certify(HeavyTailDensity::cauchy());
  const auto student = certify(HeavyTailDensity::student(3.0));
  const auto gauss = certify(gaussian_density());
  o.detail << "Cauchy c1=" << cauchy.c1 << " c2=" << cauchy.c2 << "; Student(3) c1=" << student.c1 << " c2=" << student.c2
           << "; Gaussian witness " << (gauss.h2.witness ? std::to_string(*gauss.h2.witness) : std::string("none"));
  o.require(cauchy.pass(), "Cauchy passes");
  o.require(cauchy.c2 <= 1.0 / M_PI + 1e-9, "Cauchy c2");
  o.require(student.pass(), "Student(3) passes");
  o.require(!gauss.pass() && gauss.h2.witness.has_value(), "Gaussian fails with a witness");
}

void mcmc(Outcome& o) {
  using GK61 = boost::math::quadrature::gauss_kronrod<double, 61>;
  using GK31 = boost::math::quadrature::gauss_kronrod<double, 31>;
  const Prior prior(kToy, HeavyTailDensity::cauchy(), ScalingSchedule::uniform(0.0));
  {
    const auto data = toy_data({0.1, 0.5, 0.9}, {0.5, 1.2, 0.9});
    auto lp = [&](double t) { return log_tempered_posterior(toy_net(0.0, t, 0.0), data, 0.5, prior); };
    const double ref = lp(0.8);
    const double Z = GK61::integrate([&](double t) { return std::exp(lp(t) - ref); }, -50.0, 50.0, 15, 1e-12);
    const double M = GK61::integrate([&](double t) { return t * std::exp(lp(t) - ref); }, -50.0, 50.0, 15, 1e-12);
    TemperConfig cfg;
    cfg.steps = 100000;
    cfg.burnin = 2000;
    cfg.free = {false, false, true, false};
    cfg.initial = Network::zeros(kToy);
    cfg.seed = 7;
    const double m = run_chain(data, kToy, prior, cfg).pooled().row(2).mean();
    o.detail << "1-parameter mean " << m << " vs " << M / Z << "; ";
    o.require(std::fabs(m - M / Z) < 0.02, "1-parameter mean");
  }
  {
    const auto data = toy_data({0.0, 0.25, 0.5, 0.75, 1.0}, {0.2, 0.9, 0.4, 1.1, 1.3});
    auto lp = [&](double a, double b) { return log_tempered_posterior(toy_net(1.0, a, b), data, 0.5, prior); };
    TemperConfig cfg;
    cfg.steps = 500000;
    cfg.burnin = 5000;
    cfg.free = {false, false, true, true};
    cfg.initial = toy_net(1.0, 0.0, 0.0);
    cfg.seed = 9;
    const Eigen::MatrixXd S = run_chain(data, kToy, prior, cfg).pooled();
    const int bins = 50;
    const double a0 = -3.0, a1 = 4.0, b0 = -4.0, b1 = 5.0, ha = (a1 - a0) / bins, hb = (b1 - b0) / bins;
    const double ref = lp(0.5, 0.8);
    Eigen::MatrixXd exact = Eigen::MatrixXd::Zero(bins, bins), emp = Eigen::MatrixXd::Zero(bins, bins);
    for (int i = 0; i < bins; ++i)
      for (int j = 0; j < bins; ++j)
        for (int u = 0; u < 4; ++u)
          for (int v = 0; v < 4; ++v)
            exact(i, j) += std::exp(lp(a0 + (i + (u + 0.5) / 4) * ha, b0 + (j + (v + 0.5) / 4) * hb) - ref);
    const double total = GK31::integrate(
        [&](double a) { return GK31::integrate([&](double b) { return std::exp(lp(a, b) - ref); }, -200.0, 200.0, 10, 1e-9); },
        -200.0, 200.0, 10, 1e-9);
    exact *= ha * hb / 16.0 / total;
    for (Eigen::Index c = 0; c < S.cols(); ++c) {
      const int i = static_cast<int>(std::floor((S(2, c) - a0) / ha)), j = static_cast<int>(std::floor((S(3, c) - b0) / hb));
      if (i >= 0 && i < bins && j >= 0 && j < bins) emp(i, j) += 1.0;
    }
    emp /= static_cast<double>(S.cols());
    const double tv = 0.5 * ((exact - emp).cwiseAbs().sum() + std::fabs(emp.sum() - exact.sum()));
    o.detail << "2-parameter TV " << tv << "; ";
    o.require(tv < 0.05, "2-parameter TV");
  }
  {
    const Architecture arch(1, {1, 2, 1});
    const auto h = HeavyTailDensity::student(3.0);
    const Prior p(arch, h, ScalingSchedule::directed(64));
    TemperConfig cfg;
    cfg.steps = 100000;
    cfg.burnin = 1000;
    cfg.thin = 10;
    cfg.seed = 10;
    const Eigen::MatrixXd S = run_chain(RegressionData{Eigen::MatrixXd(1, 0), Eigen::VectorXd(0)}, arch, p, cfg).pooled();
    double worst = 0.0;
    for (Eigen::Index k = 0; k < S.rows(); ++k) {
      const double scale = std::exp(-p.log_inv_sigma()(k));
      std::vector<double> z;
      for (Eigen::Index i = 0; i < S.cols(); ++i) z.push_back(S(k, i) / scale);
      worst = std::max(worst, ks_one_sample(z, [&](double x) { return h.cdf(x); }).statistic);
    }
    o.detail << "zero-data max KS " << worst;
    o.require(worst < 0.05, "zero-data KS");
  }
}

void vb(Outcome& o) {
  const auto h = HeavyTailDensity::student(3.0);
  Rng data_rng(8);
  const auto fix = fixture("holder1", 1);
  const RegressionData data = gen_data(fix, DesignSpec::uniform_cube(1), 256, data_rng);

  {
    // Common random numbers: each evaluation restarts the same stream.
    const Prior prior(kSmall, h, ScalingSchedule::uniform(0.0));
    Rng init(9);
    Eigen::VectorXd mu(10), ls(10);
    for (int k = 0; k < 10; ++k) {
      mu(k) = init.uniform(-1, 1);
      ls(k) = std::log(init.uniform(0.05, 0.3));
    }
    VBOptions opt;
    opt.mc_samples = 4;
    auto eval = [&](const Eigen::VectorXd& m, const Eigen::VectorXd& l, bool grad) {
      VBOptions op = opt;
      op.gradient = grad;
      Rng r(77);
      return vb_objective(VariationalState(kSmall, h, m, l), data, 0.5, prior, op, r);
    };
    const auto e = eval(mu, ls, true);
    Eigen::VectorXd fd_mu(10), fd_ls(10);
    const double step = 1e-4;
    for (int k = 0; k < 10; ++k) {
      Eigen::VectorXd up = mu, dn = mu;
      up(k) += step;
      dn(k) -= step;
      fd_mu(k) = (eval(up, ls, false).value - eval(dn, ls, false).value) / (2 * step);
      up = ls;
      dn = ls;
      up(k) += step;
      dn(k) -= step;
      fd_ls(k) = (eval(mu, up, false).value - eval(mu, dn, false).value) / (2 * step);
    }
    const double rel = std::max((e.grad_mu - fd_mu).norm() / fd_mu.norm(), (e.grad_log_scale - fd_ls).norm() / fd_ls.norm());
    o.detail << "gradient rel. error " << rel << "; ";
    o.require(rel < 1e-3, "gradient");
  }

  const Prior prior(kSmall, h, ScalingSchedule::directed(256));
  {
    const VariationalState at_prior(kSmall, h, Eigen::VectorXd::Zero(10), -prior.log_inv_sigma());
    Rng r(10);
    const double kq = kl_quadrature(at_prior, prior);
    const double kt = vb_objective(at_prior, RegressionData{Eigen::MatrixXd(1, 0), Eigen::VectorXd(0)}, 0.5, prior, {}, r).kl;
    o.detail << "KL at prior " << kq << "/" << kt << "; ";
    o.require(kq == 0.0 && kt == 0.0, "KL(prior, prior) = 0");
  }
  {
    VBConfig cfg;
    cfg.steps = 2000;
    cfg.lr = 0.03;
    cfg.kl_warmup = 0.4;
    cfg.init_mu_gain = 0.5;
    const VBFit fit = fit_vb(data, kSmall, prior, cfg);
    const VariationalState oracle = oracle_q_star(exact_kink(), prior);
    const double fitted = vb_objective_fixed(fit.state, data, 0.5, prior, 256, 11);
    const double at_oracle = vb_objective_fixed(oracle, data, 0.5, prior, 256, 11);
    o.detail << "objective fitted " << fitted << " vs oracle " << at_oracle << "; ";
    o.require(fitted <= at_oracle, "fitted <= oracle");
  }
  {
    // KL(Q*_k, Pi_k) / (1 + log(1 + 2r)) at r = |theta~| / sigma; bounded by nu + 1.
    double worst = 0.0;
    for (int e = 0; e <= 12; ++e) {
      const double r = std::pow(10.0, e);
      worst = std::max(worst, kl_coordinate(h, r, 1.0, 1.0) / (1.0 + std::log1p(2.0 * r)));
    }
    o.detail << "KL shape constant " << worst;
    o.require(worst <= h.nu() + 1.0, "KL shape constant bounded");
  }
}

ExperimentConfig rate_config() {
  ExperimentConfig c;
  c.fixture = "additive";
  c.d = 4;
  c.fixture_scale = 4.0;
  c.n_grid = {128, 256, 512, 1024, 2048, 4096};
  c.replications = 5;
  c.method = InferenceMethod::VB;
  c.schedule = "directed";
  c.arch_mode = ArchitectureMode::Override;
  c.override_depth = 3;
  c.override_width = 16;
  c.clip_B = 2.5;
  c.vb_steps = 2000;
  c.vb_lr = 0.03;
  c.vb_batch = 128;
  c.vb_warmup = 0.4;
  c.vb_init_gain = 0.5;
  c.eval_points = 20000;
  c.threads = 1;
  return c;
}

void rate(Outcome& o) {
  const RateReport rep = run_experiment(rate_config());
  const MethodSummary* s = rep.summary("vb");
  o.require(s != nullptr && rep.failures.empty(), "all fits completed");
  if (!s) return;
  for (std::size_t i = 0; i < s->n.size(); ++i) o.detail << s->n[i] << ":" << s->mean_error[i] << " ";
  o.detail << "slope " << s->slope << " [" << s->slope_ci_low << ", " << s->slope_ci_high << "], violations "
           << s->monotone_violations;
  o.require(s->monotone, "monotone");
  o.require(s->slope_within_tolerance, "slope within 0.15 of -1/3");
}

void minkowski(Outcome& o) {
  ExperimentConfig c = rate_config();
  c.fixture = "manifold";
  c.d = 3;
  c.fixture_scale = 1.0;
  c.clip_B = 0.0;
  c.n_grid = {2048};
  c.design = "curve";
  const MethodSummary curve = run_experiment(c).summaries.at(0);
  c.design = "uniform";
  const MethodSummary cube = run_experiment(c).summaries.at(0);
  const double gap = cube.mean_error[0] - curve.mean_error[0];
  const double se = std::hypot(cube.stderr[0], curve.stderr[0]);
  o.detail << "curve " << curve.mean_error[0] << " +- " << curve.stderr[0] << ", cube " << cube.mean_error[0] << " +- "
           << cube.stderr[0] << "; ";
  o.require(gap > 2.0 * se, "2-stderr separation");

  Rng rng(12);
  const auto pts = DesignSpec::curve(3).sample(100000, rng);
  std::vector<double> radii;
  for (int k = 3; k <= 9; ++k) radii.push_back(std::ldexp(1.0, -k));
  const double dim = minkowski_estimate(pts.points, radii);
  o.detail << "box-counting dimension " << dim;
  o.require(std::fabs(dim - 1.0) <= 0.2, "d* within 0.2");
}

void pac(Outcome& o) {
  // Exact kink truth on (1, 3, 1): the oracle state is centred on a zero-error network.
  const auto h = HeavyTailDensity::student(3.0);
  const auto fix = fixture("holder1", 1);
  const BatchFunction f0 = fix.batch();
  const int n = 256, reps = 10;
  const double alpha = 0.5;
  const Prior prior(kSmall, h, ScalingSchedule::directed(n));
  const VariationalState oracle = oracle_q_star(exact_kink(), prior);
  int fitted_violations = 0, oracle_violations = 0;
  for (int r = 0; r < reps; ++r) {
    Rng rng = Rng::stream(13, static_cast<std::uint64_t>(r));
    const RegressionData data = gen_data(fix, DesignSpec::uniform_cube(1), n, rng);
    VBConfig cfg;
    cfg.alpha = alpha;
    cfg.steps = 2000;
    cfg.lr = 0.03;
    cfg.kl_warmup = 0.4;
    cfg.init_mu_gain = 0.5;
    cfg.seed = 100 + static_cast<std::uint64_t>(r);
    const VBFit fit = fit_vb(data, kSmall, prior, cfg);
    const DesignSample design = DesignSpec::uniform_cube(1).sample(5000, rng);
    const MCEstimate lhs = expected_renyi(fit.state, f0, design, alpha, 200, rng);
    const MCEstimate at_fit = pac_bound(fit.state, f0, design, alpha, prior, n, 200, rng);
    const MCEstimate at_oracle = pac_bound(oracle, f0, design, alpha, prior, n, 200, rng);
    fitted_violations += lhs.value > at_fit.value + 3.0 * std::hypot(lhs.stderr, at_fit.stderr);
    oracle_violations += lhs.value > at_oracle.value + 3.0 * std::hypot(lhs.stderr, at_oracle.stderr);
    if (r == 0)
      o.detail << "first dataset: E D_alpha " << lhs.value << ", bound at fit " << at_fit.value << ", at oracle "
               << at_oracle.value << "; ";
  }
  o.detail << "violations fitted " << fitted_violations << "/" << reps << ", oracle " << oracle_violations << "/" << reps;
  o.require(fitted_violations <= reps / 10, "fitted-state violation rate");
  o.require(oracle_violations <= reps / 10, "oracle-state violation rate");
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> all = {
      {1, "multiplication net", 10, mult},
      {2, "indicator and test nets", 10, indicator},
      {3, "wide net error ratio and coefficient cap", 120, wide},
      {4, "propagation bound", 0, propagation},
      {5, "divergence identities", 0, divergences},
      {6, "prior certification", 5, certification},
      {7, "sampler stationarity", 300, mcmc},
      {8, "variational inference", 300, vb},
      {9, "rate experiment", 7200, rate},
      {10, "curve versus cube design", 0, minkowski},
      {11, "PAC-Bayes monitor", 0, pac},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && secs > c.budget_s) o.require(false, "runtime over budget");
    failures += !o.pass;
    std::string detail = o.detail.str();
    while (!detail.empty() && (detail.back() == ' ' || detail.back() == ';')) detail.pop_back();
    std::printf("%s criterion %d (%s): %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name, detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
