#include "htbnn/prior.hpp"

#include <cmath>
#include <limits>

#include "htbnn/errors.hpp"

namespace htbnn {

Prior::Prior(Architecture arch, HeavyTailDensity h, const ScalingSchedule& schedule)
    : Prior(arch, std::move(h), schedule.log_inv_sigmas(arch)) {}

Prior::Prior(Architecture arch, HeavyTailDensity h, Eigen::VectorXd log_inv_sigma)
    : arch_(std::move(arch)), h_(std::move(h)), log_inv_sigma_(std::move(log_inv_sigma)) {
  if (static_cast<std::size_t>(log_inv_sigma_.size()) != arch_.size())
    throw StructuralError("schedule does not cover every coefficient");
  if (!log_inv_sigma_.allFinite()) throw PreconditionError("log(1/sigma) must be finite");
}

double Prior::sample_coordinate(std::size_t k, Rng& rng) const {
  const double z = h_.sample(rng);
  if (z == 0.0) return 0.0;
  return std::copysign(std::exp(std::log(std::fabs(z)) - log_inv_sigma_[static_cast<Eigen::Index>(k)]), z);
}

double Prior::log_density_coordinate(std::size_t k, double theta) const {
  const double s = log_inv_sigma_[static_cast<Eigen::Index>(k)];
  const double t = theta == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(std::fabs(theta)) + s;
  return h_.log_density_at_log_abs(t) + s;
}

Eigen::VectorXd Prior::sample(Rng& rng) const {
  Eigen::VectorXd theta(log_inv_sigma_.size());
  for (Eigen::Index k = 0; k < theta.size(); ++k) theta[k] = sample_coordinate(static_cast<std::size_t>(k), rng);
  return theta;
}

double Prior::log_density(const Eigen::VectorXd& theta) const {
  if (theta.size() != log_inv_sigma_.size()) throw StructuralError("coefficient length mismatch");
  double s = 0.0;
  for (Eigen::Index k = 0; k < theta.size(); ++k) s += log_density_coordinate(static_cast<std::size_t>(k), theta[k]);
  return s;
}

Network sample_prior(const Architecture& arch, const HeavyTailDensity& h, const ScalingSchedule& sched, Rng& rng) {
  Prior prior(arch, h, sched);
  return Network(arch, prior.sample(rng));
}

double log_prior_density(const Network& net, const HeavyTailDensity& h, const ScalingSchedule& sched) {
  Prior prior(net.architecture(), h, sched);
  return prior.log_density(net.coefficients());
}

}  // namespace htbnn
