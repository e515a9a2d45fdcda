#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "htbnn/divergences.hpp"
#include "htbnn/mcmc.hpp"
#include "htbnn/prior.hpp"
#include "htbnn/synth.hpp"

namespace htbnn {

/// Mean-field family Q = prod_k h((theta_k - mu_k) / s_k) / s_k with the scales stored as log s_k.
/// h is the base density of the prior the state is compared against.
class VariationalState {
 public:
  /// Throws ConfigError when h lacks a finite moment of order max(2, 1 + kappa).
  VariationalState(Architecture arch, HeavyTailDensity h, Eigen::VectorXd mu, Eigen::VectorXd log_scale);

  const Architecture& architecture() const noexcept { return arch_; }
  const HeavyTailDensity& density() const noexcept { return h_; }
  const Eigen::VectorXd& mu() const noexcept { return mu_; }
  const Eigen::VectorXd& log_scale() const noexcept { return log_scale_; }
  Eigen::VectorXd scale() const { return log_scale_.array().exp(); }
  std::size_t size() const noexcept { return arch_.size(); }

  void set(Eigen::VectorXd mu, Eigen::VectorXd log_scale);
  Eigen::VectorXd sample(Rng& rng) const;
  Network mean_network() const { return Network(arch_, mu_); }

 private:
  Architecture arch_;
  HeavyTailDensity h_;
  Eigen::VectorXd mu_, log_scale_;
};

/// KL(h_{mu,s} || h_{0,sigma}) by adaptive quadrature.
double kl_coordinate(const HeavyTailDensity& h, double mu, double scale, double sigma);
/// Sum of kl_coordinate over all coefficients against the prior scales.
double kl_quadrature(const VariationalState& state, const Prior& prior);

/// Table interpolates a cached quadrature grid over (asinh(mu/sigma), log(s/sigma)).
enum class KLMode { Table, MonteCarlo, Quadrature };

/// KL(h_{mu,s} || h_{0,sigma}) and its derivatives in mu and log s from the cached table.
struct KLValue {
  double value, d_mu, d_log_scale;
};
KLValue kl_table(const HeavyTailDensity& h, double mu, double scale, double sigma);

struct VBOptions {
  int mc_samples = 1;
  KLMode kl_mode = KLMode::Table;
  /// Draws per coordinate for the Monte-Carlo KL term (cheap: no network evaluation).
  int kl_mc_samples = 8;
  /// Minibatch size for the likelihood term; 0 uses all data.
  int batch_size = 0;
  bool gradient = true;
};

struct VBObjectiveEstimate {
  double value = 0.0;
  double likelihood = 0.0;  // (alpha/2) E_Q sum (Y - f)^2
  double kl = 0.0;
  Eigen::VectorXd grad_mu, grad_log_scale;
  int mc_samples = 0;
  double stderr = 0.0;
};

/// Reparameterized estimate of (alpha/2) E_Q sum_i (Y_i - f(X_i))^2 + KL(Q, prior) and its gradient.
VBObjectiveEstimate vb_objective(const VariationalState& state, const RegressionData& data, double alpha,
                                 const Prior& prior, const VBOptions& opt, Rng& rng);

struct VBConfig {
  double alpha = 0.5;
  int steps = 2000;
  double lr = 0.01;
  /// Learning rate decays geometrically to lr * final_lr_ratio at the last step.
  double final_lr_ratio = 0.1;
  VBOptions objective;
  std::uint64_t seed = 1;
  /// Best-seen tracking evaluates the objective with fixed draws every eval_every steps.
  int eval_every = 50;
  int eval_mc_samples = 8;
  /// Initial scale s_k = init_scale_ratio * sigma_k; ignored when `initial` is set.
  double init_scale_ratio = 0.1;
  /// He-style initial means; 0 starts from mu = 0.
  double init_mu_gain = 1.0;
  std::optional<VariationalState> initial;
  int max_restarts = 10;
  /// The KL weight ramps linearly from 0 to 1 over this fraction of the steps; best-seen
  /// tracking starts once the full objective is in force.
  double kl_warmup = 0.0;

  void validate() const;
};

struct VBTrace {
  std::vector<int> step;
  std::vector<double> objective;  // fixed-draw evaluation at step
  std::vector<double> best;       // best seen so far
  int restarts = 0;
  double final_lr = 0.0;
};

struct VBFit {
  VariationalState state;
  double best_objective;
  VBTrace trace;
};

VBFit fit_vb(const RegressionData& data, const Architecture& arch, const Prior& prior, const VBConfig& cfg);

/// Objective with draws fixed by `seed`; the common yardstick for comparing states.
double vb_objective_fixed(const VariationalState& state, const RegressionData& data, double alpha, const Prior& prior,
                          int mc_samples, std::uint64_t seed, KLMode kl_mode = KLMode::Table);

/// Q* centered at the approximant with the prior scales.
VariationalState oracle_q_star(const Network& approximant, const Prior& prior);

/// (alpha / (2 (1 - alpha))) E_Q |f - f0|^2 + KL(Q, prior) / (n (1 - alpha)), with the L2 norm over the design.
MCEstimate pac_bound(const VariationalState& state, const BatchFunction& f0, const DesignSample& design, double alpha,
                     const Prior& prior, int n, int draws, Rng& rng, KLMode kl_mode = KLMode::Quadrature);

/// E_Q D_alpha(f, f0) over the design.
MCEstimate expected_renyi(const VariationalState& state, const BatchFunction& f0, const DesignSample& design,
                          double alpha, int draws, Rng& rng);

/// Mean of clip(f, B) over draws from Q at the columns of X, with 5-95% bands.
PredictiveBand vb_predict(const VariationalState& state, const Eigen::MatrixXd& X, double B, int draws, Rng& rng);

}  // namespace htbnn
