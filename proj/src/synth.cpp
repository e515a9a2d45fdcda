#include "htbnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <stdexcept>

#include "htbnn/schedule.hpp"
#include "htbnn/serialize.hpp"
#include "htbnn/stats.hpp"

namespace htbnn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

DesignSpec DesignSpec::uniform_cube(int d) {
  DesignSpec s;
  s.kind = DesignKind::UniformCube;
  s.d = d;
  s.intrinsic_dim = d;
  return s;
}

DesignSpec DesignSpec::curve(int d) {
  return manifold(d, 1, [d](const VectorXd& t) {
    VectorXd x(d);
    double p = 1.0;
    for (int k = 0; k < d; ++k) {
      p *= t(0);
      x(k) = p;
    }
    return x;
  });
}

DesignSpec DesignSpec::manifold(int d, int intrinsic_dim, std::function<VectorXd(const VectorXd&)> embedding) {
  if (intrinsic_dim >= d) throw std::invalid_argument("manifold design needs intrinsic dimension below d");
  DesignSpec s;
  s.kind = DesignKind::ManifoldEmbedding;
  s.d = d;
  s.intrinsic_dim = intrinsic_dim;
  s.embedding = std::move(embedding);
  return s;
}

DesignSpec DesignSpec::custom(int d, std::function<VectorXd(Rng&)> sampler) {
  DesignSpec s;
  s.kind = DesignKind::Custom;
  s.d = d;
  s.intrinsic_dim = d;
  s.sampler = std::move(sampler);
  return s;
}

std::string DesignSpec::name() const {
  switch (kind) {
    case DesignKind::UniformCube:
      return "uniform";
    case DesignKind::ManifoldEmbedding:
      return "manifold";
    case DesignKind::Custom:
      return "custom";
  }
  return "?";
}

VectorXd DesignSpec::draw(Rng& rng) const {
  VectorXd x;
  switch (kind) {
    case DesignKind::UniformCube:
      x.resize(d);
      for (int k = 0; k < d; ++k) x(k) = rng.uniform();
      break;
    case DesignKind::ManifoldEmbedding: {
      VectorXd t(intrinsic_dim);
      for (int k = 0; k < intrinsic_dim; ++k) t(k) = rng.uniform();
      x = embedding(t);
      break;
    }
    case DesignKind::Custom:
      x = sampler(rng);
      break;
  }
  if (x.size() != d || (x.array() < 0.0).any() || (x.array() > 1.0).any())
    throw std::logic_error("design sampler left the unit cube");
  return x;
}

DesignSample DesignSpec::sample(Eigen::Index m, Rng& rng) const {
  DesignSample s{MatrixXd(d, m)};
  for (Eigen::Index i = 0; i < m; ++i) s.points.col(i) = draw(rng);
  return s;
}

double TruthFixture::rate_exponent() const {
  if (anisotropic) {
    const double bt = RateSpec::harmonic_smoothness(beta);
    return bt / (2.0 * bt + 1.0);
  }
  std::vector<double> tt(t.begin(), t.end());
  return RateSpec::rate_exponent(RateSpec::effective_smoothness(beta), tt);
}

BatchFunction TruthFixture::batch() const { return as_batch(f0); }

namespace {

// Lipschitz bump with a kink: |x - c| shifted to mean zero on [0, 1].
double kink(double x, double c) { return std::fabs(x - c) - (c * c + (1 - c) * (1 - c)) / 2.0; }
double kink_derivative(double x, double c) { return x > c ? 1.0 : (x < c ? -1.0 : 0.0); }

constexpr double kSmoothInfinity = 100.0;

int order_of(const std::vector<int>& l) {
  int s = 0;
  for (int v : l) s += v;
  return s;
}

}  // namespace

std::vector<std::string> fixture_names() {
  return {"zero", "additive", "single-index", "holder1", "holder2", "anisotropic", "manifold"};
}

TruthFixture fixture(const std::string& name, int d, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("fixture scale must be positive");
  TruthFixture f;
  f.name = name;
  if (name == "zero") {
    f.d = d > 0 ? d : 1;
    f.f0 = [](const VectorXd&) { return 0.0; };
    f.smooth = {f.d, [](const VectorXd&, const std::vector<int>&) { return 0.0; }};
    f.q = 0;
    f.t = {f.d};
    f.beta = {kSmoothInfinity};
    f.M0 = 0.0;
  } else if (name == "additive") {
    // sum_k a_k kink(x_k, c_k): q = 1 with 1-Lipschitz univariate inner maps and a linear outer map.
    f.d = d > 0 ? d : 4;
    const int dd = f.d;
    std::vector<double> c(static_cast<std::size_t>(dd)), a(static_cast<std::size_t>(dd));
    for (int k = 0; k < dd; ++k) {
      c[static_cast<std::size_t>(k)] = 0.3 + 0.4 * k / std::max(1, dd - 1);
      a[static_cast<std::size_t>(k)] = (k % 2 ? -1.0 : 1.0);
    }
    f.f0 = [c, a](const VectorXd& x) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < x.size(); ++k)
        s += a[static_cast<std::size_t>(k)] * kink(x(k), c[static_cast<std::size_t>(k)]);
      return s;
    };
    f.smooth = {dd, [c, a](const VectorXd& x, const std::vector<int>& l) {
                  const int o = order_of(l);
                  if (o == 0) {
                    double s = 0.0;
                    for (Eigen::Index k = 0; k < x.size(); ++k)
                      s += a[static_cast<std::size_t>(k)] * kink(x(k), c[static_cast<std::size_t>(k)]);
                    return s;
                  }
                  if (o > 1) return 0.0;
                  const auto k = static_cast<std::size_t>(std::find(l.begin(), l.end(), 1) - l.begin());
                  return a[k] * kink_derivative(x(static_cast<Eigen::Index>(k)), c[k]);
                }};
    f.q = 1;
    f.t = {1, dd};
    f.beta = {1.0, kSmoothInfinity};
    f.K = static_cast<double>(dd);
    f.M0 = 0.5 * dd;
  } else if (name == "single-index") {
    f.d = d > 0 ? d : 4;
    const int dd = f.d;
    f.f0 = [dd](const VectorXd& x) { return kink(x.sum() / dd, 0.4); };
    f.smooth = {dd, [dd](const VectorXd& x, const std::vector<int>& l) {
                  const int o = order_of(l);
                  if (o == 0) return kink(x.sum() / dd, 0.4);
                  if (o > 1) return 0.0;
                  return kink_derivative(x.sum() / dd, 0.4) / dd;
                }};
    f.q = 1;
    f.t = {dd, 1};
    f.beta = {kSmoothInfinity, 1.0};
    f.M0 = 0.6;
  } else if (name == "holder1" || name == "holder2") {
    f.d = d > 0 ? d : 2;
    const int dd = f.d;
    const double beta = name == "holder1" ? 1.0 : 2.0;
    const VectorXd center = VectorXd::Constant(dd, 0.4);
    // beta = 1: |x - c|; beta = 2: (x_1 - c_1) |x - c|.
    f.f0 = [center, beta](const VectorXd& x) {
      const double r = (x - center).norm();
      return beta == 1.0 ? r : (x(0) - center(0)) * r;
    };
    f.smooth = {dd, [center, beta](const VectorXd& x, const std::vector<int>& l) {
                  const VectorXd z = x - center;
                  const double r = z.norm();
                  const int o = order_of(l);
                  if (o == 0) return beta == 1.0 ? r : z(0) * r;
                  if (o > 1) return 0.0;
                  const auto k = static_cast<Eigen::Index>(std::find(l.begin(), l.end(), 1) - l.begin());
                  if (beta == 1.0) return r > 0 ? z(k) / r : 0.0;
                  const double dr = r > 0 ? z(k) / r : 0.0;
                  return (k == 0 ? r : 0.0) + z(0) * dr;
                }};
    f.q = 0;
    f.t = {dd};
    f.beta = {beta};
    f.M0 = std::sqrt(static_cast<double>(dd)) * 0.6;
  } else if (name == "anisotropic") {
    f.d = d > 0 ? d : 2;
    const int dd = f.d;
    std::vector<double> beta(static_cast<std::size_t>(dd), 4.0);
    beta[0] = 1.0;
    f.f0 = [beta](const VectorXd& x) {
      double p = 1.0;
      for (Eigen::Index k = 0; k < x.size(); ++k) p *= std::pow(std::fabs(x(k) - 0.5), beta[static_cast<std::size_t>(k)]);
      return p;
    };
    f.smooth = {dd, [](const VectorXd&, const std::vector<int>&) -> double {
                  throw std::logic_error("anisotropic fixture has no derivative evaluators");
                }};
    f.anisotropic = true;
    f.t = std::vector<int>(static_cast<std::size_t>(dd), 1);
    f.beta = beta;
    f.M0 = 0.5;
  } else if (name == "manifold") {
    // Product of sines on R^3; restricted to the curve (t, t^2, t^3) it is a smooth function of t.
    f.d = d > 0 ? d : 3;
    f.f0 = [](const VectorXd& x) {
      double p = 1.0;
      for (Eigen::Index k = 0; k < x.size(); ++k) p *= std::sin(M_PI * (2.0 * x(k) - 0.5));
      return p;
    };
    f.smooth = {f.d, [](const VectorXd& x, const std::vector<int>& l) {
                  double p = 1.0;
                  for (Eigen::Index k = 0; k < x.size(); ++k) {
                    const int o = l[static_cast<std::size_t>(k)];
                    const double a = M_PI * (2.0 * x(k) - 0.5);
                    const double w = std::pow(2.0 * M_PI, o);
                    switch (o % 4) {
                      case 0: p *= w * std::sin(a); break;
                      case 1: p *= w * std::cos(a); break;
                      case 2: p *= -w * std::sin(a); break;
                      default: p *= -w * std::cos(a); break;
                    }
                  }
                  return p;
                }};
    f.q = 0;
    f.t = {f.d};
    f.beta = {kSmoothInfinity};
    f.M0 = 1.0;
  } else {
    throw std::invalid_argument("unknown fixture '" + name + "'");
  }
  if (scale != 1.0) {
    f.f0 = [g = f.f0, scale](const VectorXd& x) { return scale * g(x); };
    f.smooth.derivative = [g = f.smooth.derivative, scale](const VectorXd& x, const std::vector<int>& l) {
      return scale * g(x, l);
    };
    f.M0 *= scale;
    f.K *= scale;
    f.name += "*" + format_double(scale);
  }
  return f;
}

RegressionData gen_data(const TruthFixture& fix, const DesignSpec& spec, int n, Rng& rng) {
  if (n < 0) throw std::invalid_argument("gen_data needs n >= 0");
  if (spec.d != fix.d) throw std::invalid_argument("design dimension differs from fixture dimension");
  RegressionData data{MatrixXd(spec.d, n), VectorXd(n)};
  for (int i = 0; i < n; ++i) data.X.col(i) = spec.draw(rng);
  for (int i = 0; i < n; ++i) data.Y(i) = fix.f0(data.X.col(i)) + rng.normal();
  return data;
}

double minkowski_estimate(const MatrixXd& points, const std::vector<double>& radii) {
  if (points.cols() == 0) throw std::invalid_argument("minkowski_estimate needs points");
  if (radii.size() < 2) throw std::invalid_argument("minkowski_estimate needs two or more radii");
  std::vector<double> lx, ly;
  for (double eps : radii) {
    std::set<std::vector<long long>> boxes;
    std::vector<long long> key(static_cast<std::size_t>(points.rows()));
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
      for (Eigen::Index k = 0; k < points.rows(); ++k)
        key[static_cast<std::size_t>(k)] = static_cast<long long>(std::floor(points(k, i) / eps));
      boxes.insert(key);
    }
    lx.push_back(std::log(1.0 / eps));
    ly.push_back(std::log(static_cast<double>(boxes.size())));
  }
  const double slope = linear_fit(lx, ly).slope;
  return std::fabs(slope) < 1e-14 ? 0.0 : slope;
}

void write_data_csv(const std::string& path, const RegressionData& data) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  for (int k = 0; k < data.d(); ++k) os << "x_" << (k + 1) << ',';
  os << "y\n";
  for (int i = 0; i < data.n(); ++i) {
    for (int k = 0; k < data.d(); ++k) os << format_double(data.X(k, i)) << ',';
    os << format_double(data.Y(i)) << '\n';
  }
}

}  // namespace htbnn
