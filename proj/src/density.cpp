#include "htbnn/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "htbnn/errors.hpp"
#include "htbnn/quadrature.hpp"
#include "htbnn/special.hpp"

namespace htbnn {

namespace {

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

struct HeavyTailDensity::Impl {
  DensityFamily family = DensityFamily::Cauchy;
  std::string name;
  double nu = 0.0;
  double kappa = 0.0;
  double log_norm = 0.0;  // Student normalizing constant
  std::function<double(double)> h;
  std::function<double(double)> log_h;
  std::function<double(Rng&)> sampler;
  double expected_log = 0.0;
};

namespace {

double impl_log_abs(const HeavyTailDensity::Impl& d, double t) {
  switch (d.family) {
    case DensityFamily::Cauchy:
      return -std::log(M_PI) - softplus(2.0 * t);
    case DensityFamily::Student:
      return d.log_norm - 0.5 * (d.nu + 1.0) * softplus(2.0 * t - std::log(d.nu));
    case DensityFamily::Custom:
      break;
  }
  const double x = std::isinf(t) && t < 0 ? 0.0 : std::exp(t);
  return d.log_h ? d.log_h(x) : std::log(d.h(x));
}

double impl_density(const HeavyTailDensity::Impl& d, double x) {
  if (d.family == DensityFamily::Custom) return d.h(x);
  return std::exp(impl_log_abs(d, std::log(std::fabs(x))));
}

void finalize(HeavyTailDensity::Impl& d) {
  auto integrand = [&d](double x) {
    const double lh = impl_log_abs(d, std::log(std::fabs(x)));
    const double v = std::exp(lh) * lh;
    return std::isfinite(v) ? v : 0.0;
  };
  d.expected_log = 2.0 * integrate(integrand, 0.0, std::numeric_limits<double>::infinity(), QuadratureOptions{1e-12, 1e-11, 4000}).value;
}

}  // namespace

HeavyTailDensity HeavyTailDensity::cauchy() {
  auto d = std::make_shared<Impl>();
  d->family = DensityFamily::Cauchy;
  d->name = "cauchy";
  finalize(*d);
  return HeavyTailDensity(std::move(d));
}

HeavyTailDensity HeavyTailDensity::student(double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw PreconditionError("Student degrees of freedom must be positive");
  auto d = std::make_shared<Impl>();
  d->family = DensityFamily::Student;
  d->nu = nu;
  std::ostringstream os;
  os << "student(" << nu << ")";
  d->name = os.str();
  d->log_norm = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * M_PI);
  finalize(*d);
  return HeavyTailDensity(std::move(d));
}

HeavyTailDensity HeavyTailDensity::custom(std::string name, std::function<double(double)> h,
                                          std::function<double(Rng&)> sampler, std::function<double(double)> log_h) {
  if (!h) throw PreconditionError("custom density needs an evaluator");
  auto d = std::make_shared<Impl>();
  d->family = DensityFamily::Custom;
  d->name = std::move(name);
  d->h = std::move(h);
  d->sampler = std::move(sampler);
  d->log_h = std::move(log_h);
  finalize(*d);
  return HeavyTailDensity(std::move(d));
}

HeavyTailDensity gaussian_density() {
  return HeavyTailDensity::custom(
      "gaussian", [](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); },
      [](Rng& rng) { return rng.normal(); }, [](double x) { return -0.5 * x * x - 0.5 * std::log(2.0 * M_PI); });
}

DensityFamily HeavyTailDensity::family() const noexcept { return impl_->family; }
const std::string& HeavyTailDensity::name() const noexcept { return impl_->name; }
double HeavyTailDensity::nu() const noexcept { return impl_->nu; }
double HeavyTailDensity::kappa() const noexcept { return impl_->kappa; }

HeavyTailDensity HeavyTailDensity::with_kappa(double kappa) const {
  if (!(kappa >= 0.0)) throw PreconditionError("kappa must be non-negative");
  auto d = std::make_shared<Impl>(*impl_);
  d->kappa = kappa;
  return HeavyTailDensity(std::move(d));
}

double HeavyTailDensity::operator()(double x) const { return impl_density(*impl_, x); }

double HeavyTailDensity::log_density(double x) const {
  if (impl_->family == DensityFamily::Custom) return impl_->log_h ? impl_->log_h(x) : std::log(impl_->h(x));
  return impl_log_abs(*impl_, std::log(std::fabs(x)));
}

double HeavyTailDensity::log_density_at_log_abs(double t) const { return impl_log_abs(*impl_, t); }

double HeavyTailDensity::survival(double x) const {
  if (x < 0.0) return 1.0 - survival(-x);
  switch (impl_->family) {
    case DensityFamily::Cauchy:
      return std::atan2(1.0, x) / M_PI;
    case DensityFamily::Student:
      return 0.5 * special::incomplete_beta(0.5 * impl_->nu, 0.5, impl_->nu / (impl_->nu + x * x));
    case DensityFamily::Custom:
      break;
  }
  const auto& h = impl_->h;
  return integrate([&h](double u) { return h(u); }, x, std::numeric_limits<double>::infinity(),
                   QuadratureOptions{1e-15, 1e-10, 4000})
      .value;
}

double HeavyTailDensity::cdf(double x) const { return x >= 0.0 ? 1.0 - survival(x) : survival(-x); }

double HeavyTailDensity::sample(Rng& rng) const {
  switch (impl_->family) {
    case DensityFamily::Cauchy:
      return rng.cauchy();
    case DensityFamily::Student:
      return rng.student(impl_->nu);
    case DensityFamily::Custom:
      break;
  }
  if (impl_->sampler) return impl_->sampler(rng);
  // Numerical inversion of the survival function on the half line.
  const double u = rng.uniform();
  const double tail = u < 0.5 ? u : 1.0 - u;
  double lo = 0.0, hi = 1.0;
  while (survival(hi) > tail && hi < 1e300) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (survival(mid) > tail ? lo : hi) = mid;
  }
  const double x = 0.5 * (lo + hi);
  return u < 0.5 ? -x : x;
}

double HeavyTailDensity::expected_log_density() const { return impl_->expected_log; }

std::vector<double> default_certification_grid() {
  std::vector<double> grid{0.0, 0.1, 0.25, 0.5, 0.75, 0.9};
  const int n = 1000;
  for (int k = 0; k < n; ++k) grid.push_back(std::pow(10.0, 6.0 * k / (n - 1)));
  return grid;
}

namespace {

// Splits the ratio profile at x = 1e3 and flags unbounded growth.
ConditionReport growth_check(const std::vector<double>& xs, const std::vector<double>& ratios, const char* what) {
  double lower = 0.0, upper = 0.0, all = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    all = std::max(all, ratios[k]);
    (xs[k] <= 1e3 ? lower : upper) = std::max(xs[k] <= 1e3 ? lower : upper, ratios[k]);
  }
  ConditionReport r{true, all, std::nullopt, ""};
  std::ostringstream os;
  for (std::size_t k = 0; k < xs.size(); ++k)
    if (!std::isfinite(ratios[k])) {
      r.pass = false;
      r.witness = xs[k];
      os << what << " fails: no finite constant at x=" << xs[k];
      r.detail = os.str();
      return r;
    }
  if (upper > 1.5 * lower) {
    r.pass = false;
    for (std::size_t k = 0; k < xs.size(); ++k)
      if (ratios[k] > 1.5 * lower) {
        r.witness = xs[k];
        break;
      }
    r.constant = lower;
    os << what << " fails: ratio to bound reaches " << upper << " on (1e3, 1e6] against " << lower
       << " on [0, 1e3]; witness x=" << *r.witness;
  } else {
    os << what << " holds on grid with constant " << all;
  }
  r.detail = os.str();
  return r;
}

}  // namespace

CertificationReport certify(const HeavyTailDensity& h, const std::vector<double>& grid_in) {
  std::vector<double> grid = grid_in;
  std::sort(grid.begin(), grid.end());
  const double kappa = h.kappa();
  CertificationReport rep{};
  rep.kappa = kappa;

  // H1
  rep.h1 = {true, 0.0, std::nullopt, "H1 holds on grid"};
  double prev = std::numeric_limits<double>::infinity();
  for (double x : grid) {
    // Compared on the log scale so that light tails do not underflow into a false positivity failure.
    const double a = h.log_density(x), b = h.log_density(-x);
    std::string why;
    if (!std::isfinite(a))
      why = "density not positive and finite";
    else if (std::fabs(a - b) > 1e-12 * std::max(1.0, std::fabs(a)))
      why = "density not symmetric";
    else if (a > prev + 1e-12 * std::max(1.0, std::fabs(a)))
      why = "density increases on [0, inf)";
    if (!why.empty()) {
      rep.h1 = {false, 0.0, x, "H1 fails: " + why};
      break;
    }
    prev = a;
  }
  rep.h1.constant = h(0.0);

  // H2
  std::vector<double> xs2, r2;
  for (double x : grid) {
    if (x < 0.0) continue;
    const double lhs = -h.log_density(x);
    const double rhs = 1.0 + std::pow(std::log1p(x), 1.0 + kappa);
    xs2.push_back(x);
    r2.push_back(std::max(lhs, 0.0) / rhs);
  }
  rep.h2 = growth_check(xs2, r2, "H2");
  rep.c1 = rep.h2.constant;

  // H3
  std::vector<double> xs3, r3;
  for (double x : grid) {
    if (x < 1.0) continue;
    xs3.push_back(x);
    r3.push_back(h.survival(x) * x);
  }
  rep.h3 = growth_check(xs3, r3, "H3");
  rep.c2 = rep.h3.constant;
  return rep;
}

CertificationReport certify(const HeavyTailDensity& h) { return certify(h, default_certification_grid()); }

std::string CertificationReport::summary() const {
  std::ostringstream os;
  os << (pass() ? "PASS" : "FAIL") << " c1=" << c1 << " c2=" << c2 << " kappa=" << kappa << "\n  " << h1.detail
     << "\n  " << h2.detail << "\n  " << h3.detail;
  return os.str();
}

double moment(const HeavyTailDensity& h, double lambda) {
  if (!(lambda > 0.0)) throw PreconditionError("moment order must be positive");
  const double p = -(h.log_density(1e6) - h.log_density(1e5)) / std::log(10.0);
  if (lambda - p > -1.05) return std::numeric_limits<double>::infinity();
  auto f = [&h, lambda](double x) {
    if (x <= 0.0) return 0.0;
    const double v = std::exp(lambda * std::log(x) + h.log_density_at_log_abs(std::log(x)));
    return std::isfinite(v) ? v : 0.0;
  };
  return 2.0 * integrate(f, 0.0, std::numeric_limits<double>::infinity(), QuadratureOptions{1e-13, 1e-11, 8000}).value;
}

}  // namespace htbnn
