#include "htbnn/vb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>

#include "htbnn/errors.hpp"
#include "htbnn/quadrature.hpp"

namespace htbnn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VariationalState::VariationalState(Architecture arch, HeavyTailDensity h, VectorXd mu, VectorXd log_scale)
    : arch_(std::move(arch)), h_(std::move(h)) {
  const double order = std::max(2.0, 1.0 + h_.kappa());
  if (!std::isfinite(moment(h_, order)))
    throw ConfigError("variational base '" + h_.name() + "' has no finite moment of order " + std::to_string(order) +
                      "; use a Student family with nu > 2");
  set(std::move(mu), std::move(log_scale));
}

void VariationalState::set(VectorXd mu, VectorXd log_scale) {
  if (static_cast<std::size_t>(mu.size()) != arch_.size() || log_scale.size() != mu.size())
    throw StructuralError("variational parameters do not match the architecture");
  if (!mu.allFinite() || !log_scale.allFinite()) throw NumericalError("variational parameters must be finite");
  mu_ = std::move(mu);
  log_scale_ = std::move(log_scale);
}

VectorXd VariationalState::sample(Rng& rng) const {
  VectorXd theta(mu_.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] = mu_[k] + std::exp(log_scale_[k]) * h_.sample(rng);
  return theta;
}

namespace {

// d/dx log h(x).
double score(const HeavyTailDensity& h, double x) {
  switch (h.family()) {
    case DensityFamily::Cauchy:
      return -2.0 * x / (1.0 + x * x);
    case DensityFamily::Student:
      return -(h.nu() + 1.0) * x / (h.nu() + x * x);
    case DensityFamily::Custom: {
      const double e = 1e-5 * std::max(1.0, std::fabs(x));
      return (h.log_density(x + e) - h.log_density(x - e)) / (2.0 * e);
    }
  }
  return 0.0;
}

Eigen::Index batch_size(const VBOptions& opt, const RegressionData& data) {
  return opt.batch_size > 0 && opt.batch_size < data.n() ? opt.batch_size : data.n();
}

}  // namespace

double kl_coordinate(const HeavyTailDensity& h, double mu, double scale, double sigma) {
  if (!(scale > 0.0) || !(sigma > 0.0)) throw PreconditionError("scales must be positive");
  if (mu == 0.0 && scale == sigma) return 0.0;
  // With x = mu + scale z and z = sinh(w):
  // KL = log(sigma / scale) + integral h(z) cosh(w) [log h(z) - log h((mu + scale z) / sigma)] dw.
  // The substitution turns polynomial tails into exponential ones on a finite w-range.
  auto integrand = [&](double w) {
    const double z = std::sinh(w);
    const double lz = h.log_density(z);
    const double lcosh = std::fabs(w) + std::log1p(std::exp(-2.0 * std::fabs(w))) - std::log(2.0);
    const double weight = std::exp(lz + lcosh);
    if (weight == 0.0) return 0.0;
    return weight * (lz - h.log_density((mu + scale * z) / sigma));
  };
  constexpr double kW = 700.0;
  std::vector<double> cuts{-20.0, -5.0, -1.0, 0.0, 1.0, 5.0, 20.0};
  // log h((mu + scale z)/sigma) bends where z is within sigma/scale of -mu/scale.
  const double z0 = -mu / scale, width = sigma / scale;
  for (double k : {-10.0, -1.0, 0.0, 1.0, 10.0}) {
    const double z = z0 + k * width;
    if (std::isfinite(z)) cuts.push_back(std::asinh(z));
  }
  const auto r = integrate(integrand, -kW, kW, cuts, QuadratureOptions{1e-13, 1e-11, 4000, 2});
  return r.value + std::log(sigma / scale);
}

double kl_quadrature(const VariationalState& state, const Prior& prior) {
  const VectorXd s = state.scale();
  double kl = 0.0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    kl += kl_coordinate(state.density(), state.mu()[k], s[k], std::exp(-prior.log_inv_sigma()[k]));
  return kl;
}

namespace {

// KL(h_{a,e^b} || h_{0,1}) on a grid in u = asinh|a| and b, read back by Catmull-Rom interpolation.
class KLGrid {
 public:
  static constexpr double kDu = 0.1, kUMax = 16.0, kDb = 0.25, kBMin = -20.0, kBMax = 6.0;

  explicit KLGrid(const HeavyTailDensity& h) : h_(h) {
    nu_ = static_cast<int>(std::lround(kUMax / kDu)) + 1;
    nb_ = static_cast<int>(std::lround((kBMax - kBMin) / kDb)) + 1;
    v_.resize(static_cast<std::size_t>(nu_) * static_cast<std::size_t>(nb_));
    for (int i = 0; i < nu_; ++i)
      for (int j = 0; j < nb_; ++j)
        v_[idx(i, j)] = kl_coordinate(h, std::sinh(i * kDu), std::exp(kBMin + j * kDb), 1.0);
  }

  // Value and partial derivatives in a and b.
  KLValue at(double a, double b) const {
    const double abs_a = std::fabs(a);
    const double u = std::asinh(abs_a);
    double extra = 0.0, extra_da = 0.0, extra_db = 0.0;
    double uu = u, bb = b;
    // Beyond the grid the dependence is asymptotically -log h(a) - b.
    if (uu > kUMax) {
      const double a_max = std::sinh(kUMax);
      extra += h_.log_density(a_max) - h_.log_density(abs_a);
      extra_da -= score(abs_a);
      uu = kUMax;
    }
    const bool below = bb < kBMin;
    if (below) {
      extra -= bb - kBMin;
      extra_db = -1.0;
      bb = kBMin;
    }
    if (bb > kBMax) bb = kBMax;
    const double x = uu / kDu, y = (bb - kBMin) / kDb;
    const int i = std::min(static_cast<int>(x), nu_ - 2), j = std::min(static_cast<int>(y), nb_ - 2);
    const double tx = x - i, ty = y - j;
    double col[4], dcol[4];
    for (int q = 0; q < 4; ++q) {
      const int ii = i - 1 + q;
      double p[4];
      for (int r = 0; r < 4; ++r) p[r] = node(ii, j - 1 + r);
      col[q] = cubic(p, ty);
      dcol[q] = cubic_slope(p, ty) / kDb;
    }
    const double value = cubic(col, tx);
    const double d_u = cubic_slope(col, tx) / kDu;
    const double d_b = cubic(dcol, tx);
    const double du_da = 1.0 / std::sqrt(1.0 + abs_a * abs_a);
    const double sign = a < 0 ? -1.0 : 1.0;
    const double d_a = (u > kUMax ? 0.0 : d_u * du_da) + extra_da;
    return {value + extra, sign * d_a, (below || b > kBMax ? 0.0 : d_b) + extra_db};
  }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * static_cast<std::size_t>(nb_) + static_cast<std::size_t>(j); }

  // Even in u across 0; linear continuation past the other edges.
  double node(int i, int j) const {
    if (i < 0) i = -i;
    if (i >= nu_) return 2.0 * node(nu_ - 1, j) - node(nu_ - 2, j);
    if (j < 0) return 2.0 * node(i, 0) - node(i, 1);
    if (j >= nb_) return 2.0 * node(i, nb_ - 1) - node(i, nb_ - 2);
    return v_[idx(i, j)];
  }

  static double cubic(const double* p, double t) {
    return p[1] + 0.5 * t * (p[2] - p[0] + t * (2 * p[0] - 5 * p[1] + 4 * p[2] - p[3] + t * (3 * (p[1] - p[2]) + p[3] - p[0])));
  }
  static double cubic_slope(const double* p, double t) {
    return 0.5 * (p[2] - p[0] + 2 * t * (2 * p[0] - 5 * p[1] + 4 * p[2] - p[3]) + 3 * t * t * (3 * (p[1] - p[2]) + p[3] - p[0]));
  }
  double score(double x) const {
    switch (h_.family()) {
      case DensityFamily::Cauchy:
        return -2.0 * x / (1.0 + x * x);
      case DensityFamily::Student:
        return -(h_.nu() + 1.0) * x / (h_.nu() + x * x);
      case DensityFamily::Custom:
        break;
    }
    const double e = 1e-5 * std::max(1.0, x);
    return (h_.log_density(x + e) - h_.log_density(x - e)) / (2.0 * e);
  }

  HeavyTailDensity h_;
  int nu_ = 0, nb_ = 0;
  std::vector<double> v_;
};

const KLGrid& kl_grid(const HeavyTailDensity& h) {
  static std::mutex mu;
  static std::map<std::string, std::unique_ptr<KLGrid>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[h.name()];
  if (!slot) slot = std::make_unique<KLGrid>(h);
  return *slot;
}

}  // namespace

KLValue kl_table(const HeavyTailDensity& h, double mu, double scale, double sigma) {
  if (!(scale > 0.0) || !(sigma > 0.0)) throw PreconditionError("scales must be positive");
  if (mu == 0.0 && scale == sigma) return {0.0, 0.0, 0.0};
  const KLValue v = kl_grid(h).at(mu / sigma, std::log(scale / sigma));
  return {v.value, v.d_mu / sigma, v.d_log_scale};
}

VBObjectiveEstimate vb_objective(const VariationalState& state, const RegressionData& data, double alpha,
                                 const Prior& prior, const VBOptions& opt, Rng& rng) {
  if (opt.mc_samples < 1) throw PreconditionError("vb_objective needs mc_samples >= 1");
  if (!(state.architecture() == prior.architecture())) throw StructuralError("state and prior architectures differ");
  if (state.density().name() != prior.density().name())
    throw ConfigError("variational base density differs from the prior density");
  const Architecture& arch = state.architecture();
  const auto T = static_cast<Eigen::Index>(arch.size());
  const HeavyTailDensity& h = state.density();
  const VectorXd& mu = state.mu();
  const VectorXd s = state.scale();
  const VectorXd sigma = (-prior.log_inv_sigma()).array().exp();

  VBObjectiveEstimate est;
  est.mc_samples = opt.mc_samples;
  est.grad_mu = VectorXd::Zero(T);
  est.grad_log_scale = VectorXd::Zero(T);

  // Likelihood term through theta = mu + s * zeta.
  const Eigen::Index b = batch_size(opt, data);
  const double weight = b ? static_cast<double>(data.n()) / static_cast<double>(b) : 0.0;
  std::vector<double> values;
  VectorXd zeta(T);
  for (int m = 0; m < opt.mc_samples; ++m) {
    for (Eigen::Index k = 0; k < T; ++k) zeta[k] = h.sample(rng);
    const VectorXd theta = mu + s.cwiseProduct(zeta);
    if (b == 0) {
      values.push_back(0.0);
      continue;
    }
    MatrixXd X(data.d(), b);
    VectorXd Y(b);
    if (b == data.n()) {
      X = data.X;
      Y = data.Y;
    } else {
      for (Eigen::Index i = 0; i < b; ++i) {
        const auto j = static_cast<Eigen::Index>(rng.index(static_cast<std::uint64_t>(data.n())));
        X.col(i) = data.X.col(j);
        Y[i] = data.Y[j];
      }
    }
    const Network net(arch, theta);
    const Eigen::RowVectorXd resid = Y.transpose() - forward(net, X).row(0);
    values.push_back(0.5 * alpha * weight * resid.squaredNorm());
    if (opt.gradient) {
      const VectorXd g = coefficient_gradient(net, X, (-alpha * weight) * resid);
      est.grad_mu += g;
      est.grad_log_scale += g.cwiseProduct(s).cwiseProduct(zeta);
    }
  }
  const double S = opt.mc_samples;
  double lmean = 0.0;
  for (double v : values) lmean += v;
  lmean /= S;
  double lvar = 0.0;
  for (double v : values) lvar += (v - lmean) * (v - lmean);
  est.likelihood = lmean;
  est.stderr = opt.mc_samples > 1 ? std::sqrt(lvar / (S - 1.0) / S) : 0.0;
  est.grad_mu /= S;
  est.grad_log_scale /= S;

  if (opt.kl_mode == KLMode::Table) {
    for (Eigen::Index k = 0; k < T; ++k) {
      const KLValue v = kl_table(h, mu[k], s[k], sigma[k]);
      est.kl += v.value;
      if (!opt.gradient) continue;
      est.grad_mu[k] += v.d_mu;
      est.grad_log_scale[k] += v.d_log_scale;
    }
  } else if (opt.kl_mode == KLMode::Quadrature) {
    for (Eigen::Index k = 0; k < T; ++k) {
      est.kl += kl_coordinate(h, mu[k], s[k], sigma[k]);
      if (!opt.gradient) continue;
      constexpr double e = 1e-5;
      est.grad_mu[k] += (kl_coordinate(h, mu[k] + e, s[k], sigma[k]) - kl_coordinate(h, mu[k] - e, s[k], sigma[k])) / (2 * e);
      est.grad_log_scale[k] += (kl_coordinate(h, mu[k], s[k] * std::exp(e), sigma[k]) -
                                kl_coordinate(h, mu[k], s[k] * std::exp(-e), sigma[k])) /
                               (2 * e);
    }
  } else {
    // log(sigma/s) + mean[log h(zeta) - log h((mu + s zeta)/sigma)]: zero at the prior itself.
    const int R = std::max(1, opt.kl_mc_samples);
    double kl_var = 0.0;
    for (Eigen::Index k = 0; k < T; ++k) {
      double acc = 0.0, acc2 = 0.0, gm = 0.0, gs = 0.0;
      for (int r = 0; r < R; ++r) {
        const double z = h.sample(rng);
        const double u = (mu[k] + s[k] * z) / sigma[k];
        const double term = h.log_density(z) - h.log_density(u);
        acc += term;
        acc2 += term * term;
        if (opt.gradient) {
          const double psi = score(h, u) / sigma[k];
          gm -= psi;
          gs -= psi * s[k] * z;
        }
      }
      const double m = acc / R;
      est.kl += std::log(sigma[k] / s[k]) + m;
      if (R > 1) kl_var += std::max(0.0, acc2 / R - m * m) / (R - 1);
      if (opt.gradient) {
        est.grad_mu[k] += gm / R;
        est.grad_log_scale[k] += gs / R - 1.0;
      }
    }
    est.stderr = std::sqrt(est.stderr * est.stderr + kl_var);
  }
  est.value = est.likelihood + est.kl;
  return est;
}

double vb_objective_fixed(const VariationalState& state, const RegressionData& data, double alpha, const Prior& prior,
                          int mc_samples, std::uint64_t seed, KLMode kl_mode) {
  Rng rng(seed);
  VBOptions opt;
  opt.mc_samples = mc_samples;
  opt.kl_mode = kl_mode;
  opt.kl_mc_samples = 32;
  opt.gradient = false;
  return vb_objective(state, data, alpha, prior, opt, rng).value;
}

namespace {

void kl_gradient(const VariationalState& state, const Prior& prior, VectorXd& g_mu, VectorXd& g_ls) {
  const VectorXd s = state.scale();
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    const KLValue v = kl_table(state.density(), state.mu()[k], s[k], std::exp(-prior.log_inv_sigma()[k]));
    g_mu[k] = v.d_mu;
    g_ls[k] = v.d_log_scale;
  }
}

}  // namespace

void VBConfig::validate() const {
  if (kl_warmup < 0.0 || kl_warmup >= 1.0) throw PreconditionError("kl_warmup must lie in [0, 1)");
  if (kl_warmup > 0.0 && objective.kl_mode != KLMode::Table) throw PreconditionError("KL warm-up needs the table KL mode");
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie strictly inside (0, 1)");
  if (steps < 0 || !(lr > 0.0)) throw PreconditionError("need steps >= 0 and a positive learning rate");
  if (!(final_lr_ratio > 0.0)) throw PreconditionError("final learning-rate ratio must be positive");
  if (objective.mc_samples < 1 || eval_mc_samples < 1) throw PreconditionError("need at least one Monte-Carlo draw");
  if (eval_every < 1) throw PreconditionError("eval_every must be positive");
}

VBFit fit_vb(const RegressionData& data, const Architecture& arch, const Prior& prior, const VBConfig& cfg) {
  cfg.validate();
  if (!(prior.architecture() == arch)) throw StructuralError("prior and fit architectures differ");
  const auto T = static_cast<Eigen::Index>(arch.size());
  Rng rng = Rng::stream(cfg.seed, 0);
  const std::uint64_t eval_seed = mix_seed(cfg.seed, 0x5eedULL);

  std::optional<VariationalState> init = cfg.initial;
  if (!init) {
    VectorXd mu = VectorXd::Zero(T);
    if (cfg.init_mu_gain > 0.0)
      for (int l = 1; l <= arch.depth() + 1; ++l) {
        const double sd = cfg.init_mu_gain * std::sqrt(2.0 / arch.width(l - 1));
        for (int i = 0; i < arch.width(l); ++i)
          for (int j = 1; j <= arch.width(l - 1); ++j)
            mu[static_cast<Eigen::Index>(arch.flat_index(l, i, j))] = sd * rng.normal();
      }
    VectorXd ls = -prior.log_inv_sigma().array() + std::log(cfg.init_scale_ratio);
    init.emplace(arch, prior.density(), mu, ls);
  }
  if (!(init->architecture() == arch)) throw StructuralError("initial state has the wrong architecture");

  VariationalState state = *init;
  VBFit fit{state, vb_objective_fixed(state, data, cfg.alpha, prior, cfg.eval_mc_samples, eval_seed), {}};
  fit.trace.step.push_back(0);
  fit.trace.objective.push_back(fit.best_objective);
  fit.trace.best.push_back(fit.best_objective);
  if (!std::isfinite(fit.best_objective)) fit.best_objective = std::numeric_limits<double>::infinity();

  VectorXd p(2 * T);
  p << state.mu(), state.log_scale();
  VectorXd m1 = VectorXd::Zero(2 * T), m2 = VectorXd::Zero(2 * T);
  double lr = cfg.lr;
  const double decay = cfg.steps > 0 ? std::pow(cfg.final_lr_ratio, 1.0 / cfg.steps) : 1.0;
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  int t_adam = 0;
  VectorXd last_good = p;
  const int warmup_steps = static_cast<int>(std::lround(cfg.kl_warmup * cfg.steps));
  if (warmup_steps > 0) fit.best_objective = std::numeric_limits<double>::infinity();

  for (int step = 1; step <= cfg.steps; ++step) {
    state.set(p.head(T), p.tail(T));
    const VBObjectiveEstimate est = vb_objective(state, data, cfg.alpha, prior, cfg.objective, rng);
    const double kl_weight = warmup_steps > 0 ? std::min(1.0, static_cast<double>(step) / warmup_steps) : 1.0;
    VectorXd g(2 * T);
    if (kl_weight < 1.0) {
      // vb_objective returns the summed gradient; recover the KL part from a gradient-only table pass.
      VectorXd kg_mu(T), kg_ls(T);
      kl_gradient(state, prior, kg_mu, kg_ls);
      g << est.grad_mu - (1.0 - kl_weight) * kg_mu, est.grad_log_scale - (1.0 - kl_weight) * kg_ls;
    } else {
      g << est.grad_mu, est.grad_log_scale;
    }
    if (!std::isfinite(est.value) || !g.allFinite()) {
      if (++fit.trace.restarts > cfg.max_restarts)
        throw NumericalError("variational objective diverged after " + std::to_string(cfg.max_restarts) + " restarts");
      lr *= 0.5;
      p = last_good;
      m1.setZero();
      m2.setZero();
      t_adam = 0;
      continue;
    }
    last_good = p;
    ++t_adam;
    m1 = b1 * m1 + (1 - b1) * g;
    m2 = b2 * m2 + (1 - b2) * g.cwiseAbs2();
    const double c1 = 1 - std::pow(b1, t_adam), c2 = 1 - std::pow(b2, t_adam);
    p.array() -= lr * (m1.array() / c1) / ((m2.array() / c2).sqrt() + eps);
    // Scales stay within a generous window around the prior scales to keep the sampler finite.
    p.tail(T) = p.tail(T).array().max(-prior.log_inv_sigma().array() - 30.0).min(-prior.log_inv_sigma().array() + 5.0).matrix();
    lr *= decay;

    if (step >= warmup_steps && (step % cfg.eval_every == 0 || step == cfg.steps)) {
      VariationalState probe = state;
      probe.set(p.head(T), p.tail(T));
      const double v = vb_objective_fixed(probe, data, cfg.alpha, prior, cfg.eval_mc_samples, eval_seed);
      if (std::isfinite(v) && v < fit.best_objective) {
        fit.best_objective = v;
        fit.state = probe;
      }
      fit.trace.step.push_back(step);
      fit.trace.objective.push_back(v);
      fit.trace.best.push_back(fit.best_objective);
    }
  }
  fit.trace.final_lr = lr;
  return fit;
}

VariationalState oracle_q_star(const Network& approximant, const Prior& prior) {
  if (!(approximant.architecture() == prior.architecture()))
    throw StructuralError("approximant architecture differs from the prior");
  return VariationalState(approximant.architecture(), prior.density(), approximant.coefficients(), -prior.log_inv_sigma());
}

MCEstimate pac_bound(const VariationalState& state, const BatchFunction& f0, const DesignSample& design, double alpha,
                     const Prior& prior, int n, int draws, Rng& rng, KLMode kl_mode) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw PreconditionError("alpha must lie strictly inside (0, 1)");
  if (n < 1 || draws < 1) throw PreconditionError("pac_bound needs n >= 1 and draws >= 1");
  const VectorXd target = f0(design.points);
  std::vector<double> l2;
  for (int m = 0; m < draws; ++m) {
    const Network net(state.architecture(), state.sample(rng));
    l2.push_back(l2_px(forward(net, design.points).row(0).transpose(), target).value);
  }
  double kl;
  if (kl_mode == KLMode::Quadrature) {
    kl = kl_quadrature(state, prior);
  } else {
    VBOptions opt;
    opt.mc_samples = 1;
    opt.kl_mc_samples = 64;
    opt.gradient = false;
    RegressionData empty{MatrixXd(state.architecture().input_dim(), 0), VectorXd(0)};
    kl = vb_objective(state, empty, alpha, prior, opt, rng).kl;
  }
  double mean = 0.0, var = 0.0;
  for (double v : l2) mean += v;
  mean /= draws;
  for (double v : l2) var += (v - mean) * (v - mean);
  const double se = draws > 1 ? std::sqrt(var / (draws - 1.0) / draws) : 0.0;
  const double c = alpha / (2.0 * (1.0 - alpha));
  return {c * mean + kl / (n * (1.0 - alpha)), c * se};
}

MCEstimate expected_renyi(const VariationalState& state, const BatchFunction& f0, const DesignSample& design,
                          double alpha, int draws, Rng& rng) {
  if (draws < 1) throw PreconditionError("expected_renyi needs draws >= 1");
  const VectorXd target = f0(design.points);
  std::vector<double> d;
  for (int m = 0; m < draws; ++m) {
    const Network net(state.architecture(), state.sample(rng));
    d.push_back(renyi(forward(net, design.points).row(0).transpose(), target, alpha).value);
  }
  double mean = 0.0, var = 0.0;
  for (double v : d) mean += v;
  mean /= draws;
  for (double v : d) var += (v - mean) * (v - mean);
  return {mean, draws > 1 ? std::sqrt(var / (draws - 1.0) / draws) : 0.0};
}

PredictiveBand vb_predict(const VariationalState& state, const MatrixXd& X, double B, int draws, Rng& rng) {
  if (draws < 1) throw PreconditionError("vb_predict needs draws >= 1");
  MatrixXd samples(static_cast<Eigen::Index>(state.size()), draws);
  for (int m = 0; m < draws; ++m) samples.col(m) = state.sample(rng);
  return posterior_predict(state.architecture(), samples, X, B);
}

}  // namespace htbnn
