#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include "doctest.h"
#include "htbnn/calculus.hpp"
#include "htbnn/stats.hpp"
#include "htbnn/vb.hpp"

using namespace htbnn;

namespace {

const Architecture kSmall(1, {1, 3, 1});  // 10 coefficients

RegressionData line_data(int n, Rng& rng) {
  RegressionData d{Eigen::MatrixXd(1, n), Eigen::VectorXd(n)};
  for (int i = 0; i < n; ++i) {
    d.X(0, i) = rng.uniform();
    d.Y(i) = std::fabs(d.X(0, i) - 0.4) + 0.3 * rng.normal();
  }
  return d;
}

// KL(h_{mu,s} || h_{0,sigma}) for Student(nu) by an independent quadrature.
double student_kl(double nu, double mu, double s, double sigma) {
  boost::math::students_t_distribution<double> t(nu);
  boost::math::quadrature::sinh_sinh<double> ss;
  return ss.integrate([&](double z) {
    const double q = boost::math::pdf(t, z);
    if (q == 0.0) return 0.0;
    const double theta = mu + s * z;
    return q * (std::log(q / s) - std::log(boost::math::pdf(t, theta / sigma) / sigma));
  });
}

}  // namespace

TEST_CASE("Cauchy base densities are rejected for VB") {
  CHECK_THROWS_AS(VariationalState(kSmall, HeavyTailDensity::cauchy(), Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(10)),
                  ConfigError);
  CHECK_NOTHROW(VariationalState(kSmall, HeavyTailDensity::student(3.0), Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(10)));
  // The family of the state must be that of the prior.
  Prior prior(kSmall, HeavyTailDensity::student(4.0), ScalingSchedule::uniform(0.0));
  VariationalState q(kSmall, HeavyTailDensity::student(3.0), Eigen::VectorXd::Zero(10), Eigen::VectorXd::Zero(10));
  Rng rng(1);
  RegressionData empty{Eigen::MatrixXd(1, 0), Eigen::VectorXd(0)};
  CHECK_THROWS_AS(vb_objective(q, empty, 0.5, prior, {}, rng), ConfigError);
}

TEST_CASE("coordinate KL against an independent quadrature") {
  auto h = HeavyTailDensity::student(3.0);
  CHECK(kl_coordinate(h, 0.0, 2.0, 2.0) == 0.0);
  CHECK(kl_table(h, 0.0, 1e-20, 1e-20).value == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));
  struct P {
    double mu, s, sigma;
  };
  for (const P& p : {P{0.0, 2.0, 1.0}, P{1.0, 1.0, 1.0}, P{-3.0, 0.5, 2.0}, P{50.0, 1e-3, 1.0}, P{0.2, 0.01, 1e-4}}) {
    const double ref = student_kl(3.0, p.mu, p.s, p.sigma);
    CHECK(kl_coordinate(h, p.mu, p.s, p.sigma) == doctest::Approx(ref).epsilon(1e-6));
    CHECK(kl_table(h, p.mu, p.s, p.sigma).value == doctest::Approx(ref).epsilon(2e-3).scale(1.0));
  }
  // Strictly positive away from the prior.
  Rng rng(2);
  for (int t = 0; t < 20; ++t) {
    const double mu = rng.uniform(-2, 2), s = std::exp(rng.uniform(-2, 2));
    CHECK(kl_coordinate(h, mu, s, 1.0) > 0.0);
  }
}

TEST_CASE("Monte-Carlo KL agrees with quadrature") {
  // One coordinate, Student(3), mu = 0 and s = 2 sigma.
  Architecture one(0, {1, 1});
  const double sigma = std::exp(-1.5);
  Prior prior(one, HeavyTailDensity::student(3.0), ScalingSchedule::uniform(1.5));
  VariationalState q(one, prior.density(), Eigen::VectorXd::Zero(2),
                     Eigen::VectorXd::Constant(2, std::log(2.0 * sigma)));
  RegressionData empty{Eigen::MatrixXd(1, 0), Eigen::VectorXd(0)};
  VBOptions opt;
  opt.kl_mode = KLMode::MonteCarlo;
  opt.kl_mc_samples = 64;
  opt.gradient = false;
  Rng rng(3);
  std::vector<double> est;
  for (int r = 0; r < 400; ++r) est.push_back(vb_objective(q, empty, 0.5, prior, opt, rng).kl / 2.0);
  const double ref = kl_coordinate(prior.density(), 0.0, 2.0 * sigma, sigma);
  CHECK(std::fabs(mean(est) - ref) <= 3.0 * standard_error(est));
}

TEST_CASE("objective is zero at the prior without data") {
  Prior prior(kSmall, HeavyTailDensity::student(3.0), ScalingSchedule::directed(256));
  VariationalState q(kSmall, prior.density(), Eigen::VectorXd::Zero(10), -prior.log_inv_sigma());
  RegressionData empty{Eigen::MatrixXd(1, 0), Eigen::VectorXd(0)};
  Rng rng(4);
  auto e = vb_objective(q, empty, 0.5, prior, {}, rng);
  CHECK(e.kl == 0.0);
  CHECK(e.value == 0.0);
  CHECK(kl_quadrature(q, prior) == 0.0);
  CHECK(e.grad_mu.cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("reparameterized gradient matches finite differences") {
  Rng data_rng(5);
  auto data = line_data(40, data_rng);
  Prior prior(kSmall, HeavyTailDensity::student(3.0), ScalingSchedule::uniform(0.0));
  Rng init(6);
  Eigen::VectorXd mu(10), ls(10);
  for (int k = 0; k < 10; ++k) {
    mu(k) = init.uniform(-1, 1);
    ls(k) = std::log(init.uniform(0.05, 0.3));
  }
  VariationalState q(kSmall, prior.density(), mu, ls);
  VBOptions opt;
  opt.mc_samples = 4;
  // Common random numbers: every evaluation starts from the same seed.
  auto value = [&](const Eigen::VectorXd& m, const Eigen::VectorXd& l) {
    VariationalState s(kSmall, prior.density(), m, l);
    Rng r(77);
    VBOptions o = opt;
    o.gradient = false;
    return vb_objective(s, data, 0.5, prior, o, r).value;
  };
  Rng r(77);
  auto e = vb_objective(q, data, 0.5, prior, opt, r);
  const double h = 1e-4;
  Eigen::VectorXd fd_mu(10), fd_ls(10);
  for (int k = 0; k < 10; ++k) {
    Eigen::VectorXd up = mu, dn = mu;
    up(k) += h;
    dn(k) -= h;
    fd_mu(k) = (value(up, ls) - value(dn, ls)) / (2 * h);
    up = ls;
    dn = ls;
    up(k) += h;
    dn(k) -= h;
    fd_ls(k) = (value(mu, up) - value(mu, dn)) / (2 * h);
  }
  CHECK((e.grad_mu - fd_mu).norm() / fd_mu.norm() < 1e-3);
  CHECK((e.grad_log_scale - fd_ls).norm() / fd_ls.norm() < 1e-3);
}

TEST_CASE("oracle state") {
  auto h = HeavyTailDensity::student(3.0);
  Prior prior(kSmall, h, ScalingSchedule::directed(256));
  auto q0 = oracle_q_star(Network::zeros(kSmall), prior);
  CHECK(kl_quadrature(q0, prior) == 0.0);

  // KL(Q*_k, Pi_k) grows like log(1 + 2|theta|/sigma): the ratio to that shape settles.
  std::vector<double> C;
  for (double r : {1.0, 1e3, 1e6}) C.push_back(kl_coordinate(h, r, 1.0, 1.0) / (1.0 + std::log1p(2.0 * r)));
  MESSAGE("KL shape constants " << C[0] << " " << C[1] << " " << C[2]);
  for (double c : C) CHECK(c < h.nu() + 1.0);
  CHECK(C[2] / C[1] == doctest::Approx(1.0).epsilon(0.25));

  // E max_k |theta_k - theta~_k|^2 <= m_2(h) sum sigma_k^2.
  Rng rng(8);
  Eigen::VectorXd centre = Eigen::VectorXd::LinSpaced(10, -3, 3);
  auto q = oracle_q_star(Network(kSmall, centre), prior);
  std::vector<double> mx;
  for (int t = 0; t < 20000; ++t) mx.push_back((q.sample(rng) - centre).cwiseAbs2().maxCoeff());
  const double rhs = moment(h, 2.0) * (-2.0 * prior.log_inv_sigma()).array().exp().sum();
  CHECK(mean(mx) <= rhs + 3.0 * standard_error(mx));
}

TEST_CASE("fit_vb without data returns to the prior") {
  Prior prior(kSmall, HeavyTailDensity::student(3.0), ScalingSchedule::uniform(0.0));
  RegressionData empty{Eigen::MatrixXd(1, 0), Eigen::VectorXd(0)};
  VBConfig cfg;
  cfg.steps = 1500;
  cfg.lr = 0.05;
  cfg.init_mu_gain = 0.0;
  cfg.init_scale_ratio = 0.5;
  auto fit = fit_vb(empty, kSmall, prior, cfg);
  CHECK(std::fabs(fit.best_objective) <= 1e-3);
  CHECK(kl_quadrature(fit.state, prior) <= 1e-3);
}

TEST_CASE("fit_vb on a one-coefficient model") {
  // f = theta_0 at x = 0 (the weight never sees a non-zero input).
  Architecture one(0, {1, 1});
  Prior prior(one, HeavyTailDensity::student(3.0), ScalingSchedule::uniform(0.0));
  RegressionData data{Eigen::MatrixXd::Zero(1, 3), (Eigen::VectorXd(3) << 0.5, 1.2, 0.9).finished()};
  auto lp = [&](double t) {
    return log_tempered_posterior(Network(one, (Eigen::VectorXd(2) << t, 0.0).finished()), data, 0.5, prior);
  };
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  const double ref = lp(0.8);
  const double Z = GK::integrate([&](double t) { return std::exp(lp(t) - ref); }, -50.0, 50.0, 15, 1e-12);
  const double M = GK::integrate([&](double t) { return t * std::exp(lp(t) - ref); }, -50.0, 50.0, 15, 1e-12);
  VBConfig cfg;
  cfg.steps = 3000;
  cfg.lr = 0.02;
  cfg.objective.mc_samples = 8;
  cfg.init_mu_gain = 0.0;
  auto fit = fit_vb(data, one, prior, cfg);
  MESSAGE("fitted mean " << fit.state.mu()(0) << ", tempered posterior mean " << M / Z);
  CHECK(std::fabs(fit.state.mu()(0) - M / Z) < 0.05);
}

TEST_CASE("fit_vb trace, determinism and the argmin property") {
  Rng data_rng(9);
  auto data = line_data(64, data_rng);
  Prior prior(kSmall, HeavyTailDensity::student(3.0), ScalingSchedule::directed(64));
  VBConfig cfg;
  cfg.steps = 600;
  cfg.lr = 0.03;
  cfg.eval_every = 20;
  auto a = fit_vb(data, kSmall, prior, cfg);
  auto b = fit_vb(data, kSmall, prior, cfg);
  CHECK(a.state.mu() == b.state.mu());
  CHECK(a.best_objective == b.best_objective);
  for (std::size_t i = 1; i < a.trace.best.size(); ++i) CHECK(a.trace.best[i] <= a.trace.best[i - 1]);

  // An exact representation of |x - 0.4| on the same architecture.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(10);
  theta << -0.4, 1.0, 0.4, -1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0;
  auto oracle = oracle_q_star(Network(kSmall, theta), prior);
  const double fitted = vb_objective_fixed(a.state, data, 0.5, prior, 64, 123);
  const double at_oracle = vb_objective_fixed(oracle, data, 0.5, prior, 64, 123);
  MESSAGE("objective fitted " << fitted << ", oracle " << at_oracle);
  CHECK(fitted <= at_oracle);

  VBConfig bad = cfg;
  bad.alpha = 1.5;
  CHECK_THROWS(fit_vb(data, kSmall, prior, bad));
}

TEST_CASE("PAC-Bayes monitor") {
  Architecture arch(1, {1, 4, 1});
  Prior prior(arch, HeavyTailDensity::student(3.0), ScalingSchedule::constant(1024));
  Rng rng(10);
  DesignSample design{Eigen::MatrixXd(1, 2000)};
  for (Eigen::Index i = 0; i < design.size(); ++i) design.points(0, i) = rng.uniform();
  auto zero = as_batch([](const Eigen::VectorXd&) { return 0.0; });
  VariationalState at_prior(arch, prior.density(), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.size())),
                            -prior.log_inv_sigma());
  auto bound = pac_bound(at_prior, zero, design, 0.5, prior, 100, 20, rng);
  CHECK(bound.value <= 1e-20);
  CHECK(expected_renyi(at_prior, zero, design, 0.5, 20, rng).value <= 1e-20);

  // Nonincreasing in n at a fixed state; the KL term is the only n-dependent part.
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(arch.size()), 0.3);
  VariationalState q(arch, prior.density(), mu, Eigen::VectorXd::Constant(mu.size(), -3.0));
  auto f0 = as_batch([](const Eigen::VectorXd& x) { return std::fabs(x(0) - 0.4); });
  double prev = 1e300;
  for (int n : {10, 100, 1000, 10000}) {
    Rng same(11);
    const double v = pac_bound(q, f0, design, 0.5, prior, n, 20, same).value;
    CHECK(v <= prev);
    prev = v;
  }
  Rng r1(12), r2(12);
  auto lhs = expected_renyi(q, f0, design, 0.5, 50, r1);
  auto rhs = pac_bound(q, f0, design, 0.5, prior, 1000, 50, r2);
  CHECK(lhs.value >= 0.0);
  CHECK(lhs.value <= rhs.value + 3.0 * rhs.stderr);
}

TEST_CASE("vb_predict clips") {
  Architecture one(0, {1, 1});
  VariationalState q(one, HeavyTailDensity::student(3.0), (Eigen::VectorXd(2) << 5.0, 0.0).finished(),
                     Eigen::VectorXd::Constant(2, -30.0));
  Rng rng(13);
  auto band = vb_predict(q, Eigen::MatrixXd::Constant(1, 4, 0.5), 2.0, 50, rng);
  CHECK((band.mean.array() == 2.0).all());
  CHECK((band.upper.array() == 2.0).all());
}
