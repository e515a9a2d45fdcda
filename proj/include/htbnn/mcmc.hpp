#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "htbnn/network.hpp"
#include "htbnn/prior.hpp"
#include "htbnn/synth.hpp"

namespace htbnn {

/// -(alpha/2) sum_i (Y_i - f(X_i))^2 + log prior density, up to a data-only constant.
double log_tempered_posterior(const Network& net, const RegressionData& data, double alpha, const Prior& prior);

struct TemperConfig {
  double alpha = 0.5;
  int steps = 1000;   // kept sweeps after burn-in, before thinning
  int burnin = 500;   // adaptive sweeps, discarded
  int thin = 1;
  /// Random-walk step for coordinate k starts at proposal_scale * sigma_k.
  double proposal_scale = 1.0;
  double refresh_probability = 0.1;
  double target_acceptance = 0.44;
  std::uint64_t seed = 1;
  int chains = 1;
  /// 0 runs one thread per chain up to the hardware concurrency.
  int threads = 0;
  /// Coordinates to sample; empty means all. Others keep their value from `initial`.
  std::vector<bool> free;
  std::optional<Network> initial;
  /// Directory for per-chain checkpoints; empty disables them.
  std::string checkpoint_dir;
  int checkpoint_every = 0;

  void validate(std::size_t T) const;
};

struct ChainResult {
  /// Kept coefficient vectors, one column per kept sweep.
  Eigen::MatrixXd samples;
  std::vector<double> log_posterior;
  Eigen::VectorXd step_sizes;
  long long proposed = 0;
  long long accepted = 0;
  int init_retries = 0;

  double acceptance_rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
};

struct ChainOutput {
  Architecture arch;
  std::vector<ChainResult> chains;
  /// Split-chain R-hat per free coordinate and for the log posterior.
  Eigen::VectorXd rhat;
  double rhat_log_posterior = 1.0;

  double max_rhat() const { return rhat.size() ? rhat.maxCoeff() : 1.0; }
  double acceptance_rate() const;
  /// All kept samples pooled over chains.
  Eigen::MatrixXd pooled() const;
  std::vector<Network> networks() const;
};

ChainOutput run_chain(const RegressionData& data, const Architecture& arch, const Prior& prior, const TemperConfig& cfg);

struct PredictiveBand {
  Eigen::VectorXd mean, lower, upper;
};

/// Clipped posterior mean and pointwise 5-95% bands over the kept samples.
PredictiveBand posterior_predict(const Architecture& arch, const Eigen::MatrixXd& samples, const Eigen::MatrixXd& X,
                                 double B);
PredictiveBand posterior_predict(const ChainOutput& chain, const Eigen::MatrixXd& X, double B);
/// Mean of clip(f, B) over the sample columns, without bands.
Eigen::VectorXd clipped_mean(const Architecture& arch, const Eigen::MatrixXd& samples, const Eigen::MatrixXd& X, double B);

/// Checkpoint files hold chain metadata followed by the network block.
struct Checkpoint {
  int chain = 0;
  int sweep = 0;
  double log_posterior = 0.0;
  long long proposed = 0, accepted = 0;
  Network net;
};
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace htbnn
