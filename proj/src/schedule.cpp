#include "htbnn/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "htbnn/errors.hpp"

namespace htbnn {

ScalingSchedule ScalingSchedule::constant(double n, double delta) {
  if (!(n > 1.0) || !(delta > 0.0)) throw PreconditionError("constant schedule needs n > 1 and delta > 0");
  const double v = std::pow(std::log(n), 2.0 * (1.0 + delta));
  return ScalingSchedule(ScheduleMode::Constant, n, delta, [v](int, int, int) { return v; });
}

ScalingSchedule ScalingSchedule::directed(double n, double delta) {
  if (!(n > 1.0) || !(delta > 0.0)) throw PreconditionError("directed schedule needs n > 1 and delta > 0");
  const double cap = std::pow(std::log(n), 2.0 * (1.0 + delta));
  const double e = 2.0 * (1.0 + delta);
  return ScalingSchedule(ScheduleMode::Directed, n, delta, [cap, e](int, int i, int j) {
    const int m = std::max({i, j, 2});
    return std::min(std::pow(std::log(static_cast<double>(m)), e), cap);
  });
}

ScalingSchedule ScalingSchedule::uniform(double log_inv_sigma) {
  if (!(log_inv_sigma >= 0.0) || !std::isfinite(log_inv_sigma))
    throw PreconditionError("log(1/sigma) must be finite and non-negative");
  return ScalingSchedule(ScheduleMode::Custom, 0.0, 0.0, [log_inv_sigma](int, int, int) { return log_inv_sigma; });
}

ScalingSchedule ScalingSchedule::custom(Accessor accessor, double n, double delta) {
  if (!accessor) throw PreconditionError("custom schedule needs an accessor");
  return ScalingSchedule(ScheduleMode::Custom, n, delta, std::move(accessor));
}

double ScalingSchedule::log_inv_sigma(int l, int i, int j) const {
  const double v = accessor_(l, i, j);
  if (!std::isfinite(v) || v < 0.0) throw PreconditionError("schedule produced an invalid log(1/sigma)");
  return v;
}

Eigen::VectorXd ScalingSchedule::log_inv_sigmas(const Architecture& arch) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(arch.size()));
  Eigen::Index k = 0;
  for (int l = 1; l <= arch.depth() + 1; ++l)
    for (int i = 1; i <= arch.width(l); ++i)
      for (int j = 0; j <= arch.width(l - 1); ++j) out[k++] = log_inv_sigma(l, i, j);
  return out;
}

std::vector<double> RateSpec::effective_smoothness(const std::vector<double>& beta) {
  std::vector<double> out(beta.size());
  double tail = 1.0;
  for (std::size_t i = beta.size(); i-- > 0;) {
    out[i] = beta[i] * tail;
    tail *= std::min(beta[i], 1.0);
  }
  return out;
}

double RateSpec::harmonic_smoothness(const std::vector<double>& beta) {
  double s = 0.0;
  for (double b : beta) {
    if (!(b > 0.0)) throw PreconditionError("smoothness must be positive");
    s += 1.0 / b;
  }
  return 1.0 / s;
}

double RateSpec::phi_n(double n, const std::vector<double>& beta_star, const std::vector<double>& t) const {
  if (beta_star.size() != t.size() || t.empty()) throw PreconditionError("phi_n needs matching beta* and t");
  const double base = std::pow(std::log(n), gamma()) / n;
  double best = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i)
    best = std::max(best, std::pow(base, beta_star[i] / (2.0 * beta_star[i] + t[i])));
  return best;
}

double RateSpec::eps_n(double n, double beta, double t) const {
  const double base = std::pow(std::log(n), 2.0 * (1.0 + kappa) + 1.0) / n;
  return std::pow(base, beta / (2.0 * beta + t));
}

double RateSpec::eps_n_anisotropic(double n, const std::vector<double>& beta) const {
  const double bt = harmonic_smoothness(beta);
  return std::pow(std::pow(std::log(n), gamma()) / n, bt / (2.0 * bt + 1.0));
}

double RateSpec::rate_exponent(const std::vector<double>& beta_star, const std::vector<double>& t) {
  double e = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < t.size(); ++i) e = std::min(e, beta_star[i] / (2.0 * beta_star[i] + t[i]));
  return e;
}

}  // namespace htbnn
