#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "htbnn/architecture.hpp"

namespace htbnn {

enum class ScheduleMode { Constant, Directed, Custom };

/// Per-coefficient prior scale, held as log(1/sigma) >= 0.
///
/// Indices follow the coefficient layout: layer l in 1..L+1, row i in 1..r_l,
/// column j in 0..r_{l-1} with j = 0 the shift.
class ScalingSchedule {
 public:
  using Accessor = std::function<double(int l, int i, int j)>;

  /// log(1/sigma) = (log n)^{2(1+delta)} for every coefficient.
  static ScalingSchedule constant(double n, double delta = 0.05);
  /// log(1/sigma) = log^{2(1+delta)}(i v j v 2), capped at (log n)^{2(1+delta)}.
  static ScalingSchedule directed(double n, double delta = 0.05);
  /// Same log(1/sigma) everywhere; 0 gives sigma = 1.
  static ScalingSchedule uniform(double log_inv_sigma);
  static ScalingSchedule custom(Accessor accessor, double n = 0.0, double delta = 0.05);

  ScheduleMode mode() const noexcept { return mode_; }
  double n() const noexcept { return n_; }
  double delta() const noexcept { return delta_; }

  double log_inv_sigma(int l, int i, int j) const;
  /// log(1/sigma_k) for every flat coefficient index of arch.
  Eigen::VectorXd log_inv_sigmas(const Architecture& arch) const;

 private:
  ScalingSchedule(ScheduleMode mode, double n, double delta, Accessor accessor)
      : mode_(mode), n_(n), delta_(delta), accessor_(std::move(accessor)) {}
  ScheduleMode mode_;
  double n_;
  double delta_;
  Accessor accessor_;
};

/// Exponents and rates of the contraction results.
struct RateSpec {
  double delta = 0.05;
  double kappa = 0.0;

  /// gamma = 2(1+delta)(1+kappa) + 1.
  double gamma() const { return 2.0 * (1.0 + delta) * (1.0 + kappa) + 1.0; }

  /// beta*_i = beta_i prod_{k>i} min(beta_k, 1).
  static std::vector<double> effective_smoothness(const std::vector<double>& beta);
  /// beta~ with 1/beta~ = sum 1/beta_k.
  static double harmonic_smoothness(const std::vector<double>& beta);

  /// phi_n = max_i ((log^gamma n)/n)^{beta*_i/(2 beta*_i + t_i)}.
  double phi_n(double n, const std::vector<double>& beta_star, const std::vector<double>& t) const;
  /// ((log^{2(1+kappa)+1} n)/n)^{beta/(2beta+t)}.
  double eps_n(double n, double beta, double t) const;
  /// ((log^gamma n)/n)^{beta~/(2beta~+1)}.
  double eps_n_anisotropic(double n, const std::vector<double>& beta) const;
  /// Largest exponent beta*_i/(2 beta*_i + t_i) is the slowest; returns min over i.
  static double rate_exponent(const std::vector<double>& beta_star, const std::vector<double>& t);
};

}  // namespace htbnn
