#pragma once

#include <Eigen/Dense>

#include "htbnn/density.hpp"
#include "htbnn/network.hpp"
#include "htbnn/random.hpp"
#include "htbnn/schedule.hpp"

namespace htbnn {

/// Product prior theta_k = sigma_k zeta_k, zeta_k iid from h, with the
/// schedule resolved to one log(1/sigma_k) per flat coefficient.
class Prior {
 public:
  Prior(Architecture arch, HeavyTailDensity h, const ScalingSchedule& schedule);
  Prior(Architecture arch, HeavyTailDensity h, Eigen::VectorXd log_inv_sigma);

  const Architecture& architecture() const noexcept { return arch_; }
  const HeavyTailDensity& density() const noexcept { return h_; }
  const Eigen::VectorXd& log_inv_sigma() const noexcept { return log_inv_sigma_; }

  /// sign(zeta) exp(log|zeta| - log(1/sigma_k)).
  double sample_coordinate(std::size_t k, Rng& rng) const;
  /// log h(theta/sigma_k) + log(1/sigma_k).
  double log_density_coordinate(std::size_t k, double theta) const;

  Eigen::VectorXd sample(Rng& rng) const;
  double log_density(const Eigen::VectorXd& theta) const;

 private:
  Architecture arch_;
  HeavyTailDensity h_;
  Eigen::VectorXd log_inv_sigma_;
};

Network sample_prior(const Architecture& arch, const HeavyTailDensity& h, const ScalingSchedule& sched, Rng& rng);
double log_prior_density(const Network& net, const HeavyTailDensity& h, const ScalingSchedule& sched);

}  // namespace htbnn
