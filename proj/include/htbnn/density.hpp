#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "htbnn/random.hpp"

namespace htbnn {

enum class DensityFamily { Cauchy, Student, Custom };

/// Symmetric heavy-tailed base density h of the weight prior.
///
/// Cauchy and Student(nu) have closed forms for h, log h and the survival
/// function. A custom density is given by its evaluator; the survival
/// function then comes from quadrature and sampling from numerical inversion
/// unless a sampler is supplied.
class HeavyTailDensity {
 public:
  static HeavyTailDensity cauchy();
  static HeavyTailDensity student(double nu);
  /// log_h, when given, replaces log(h(x)) so that light tails stay finite far out.
  static HeavyTailDensity custom(std::string name, std::function<double(double)> h,
                                 std::function<double(Rng&)> sampler = {}, std::function<double(double)> log_h = {});

  DensityFamily family() const noexcept;
  const std::string& name() const noexcept;
  double nu() const noexcept;
  double kappa() const noexcept;
  HeavyTailDensity with_kappa(double kappa) const;

  double operator()(double x) const;
  double log_density(double x) const;
  /// log h(e^t); stable for t far outside the range where e^t is representable.
  double log_density_at_log_abs(double t) const;
  /// H(x) = integral of h over (x, inf).
  double survival(double x) const;
  double cdf(double x) const;
  double sample(Rng& rng) const;
  /// E_h[log h].
  double expected_log_density() const;

  struct Impl;

 private:
  explicit HeavyTailDensity(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;
};

/// Gaussian density as a custom family; a negative control for the tail conditions.
HeavyTailDensity gaussian_density();

struct ConditionReport {
  bool pass;
  double constant;             // smallest constant making the bound hold on the grid
  std::optional<double> witness;  // x at which the condition breaks
  std::string detail;
};

struct CertificationReport {
  ConditionReport h1, h2, h3;
  double c1, c2, kappa;
  bool pass() const { return h1.pass && h2.pass && h3.pass; }
  std::string summary() const;
};

/// 10^3 log-spaced points on [1, 1e6] plus a few points in [0, 1).
std::vector<double> default_certification_grid();

/// Grid certification of H1-H3. H2 and H3 fail when the ratio to the bound on
/// the upper decades of the grid exceeds 1.5 times its value on [0, 1e3],
/// which means no fixed constant can hold as x grows.
CertificationReport certify(const HeavyTailDensity& h, const std::vector<double>& grid);
CertificationReport certify(const HeavyTailDensity& h);

/// m_lambda = integral |x|^lambda h(x) dx, or +inf when the tail exponent makes it diverge.
double moment(const HeavyTailDensity& h, double lambda);

}  // namespace htbnn
