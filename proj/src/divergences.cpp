#include "htbnn/divergences.hpp"

#include <cmath>
#include <stdexcept>

#include "htbnn/errors.hpp"

namespace htbnn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

BatchFunction as_batch(const Network& net) {
  return [net](const MatrixXd& X) -> VectorXd { return forward(net, X).row(0).transpose(); };
}

BatchFunction as_batch(std::function<double(const VectorXd&)> f) {
  return [f = std::move(f)](const MatrixXd& X) {
    VectorXd out(X.cols());
    for (Eigen::Index i = 0; i < X.cols(); ++i) out(i) = f(X.col(i));
    return out;
  };
}

namespace {

MCEstimate mean_estimate(const VectorXd& v) {
  const auto m = static_cast<double>(v.size());
  if (v.size() == 0) throw std::invalid_argument("empty design sample");
  const double mu = v.sum() / m;
  double var = 0.0;
  if (v.size() > 1) var = (v.array() - mu).square().sum() / (m - 1.0);
  return {mu, std::sqrt(var / m)};
}

void check_sizes(const VectorXd& a, const VectorXd& b) {
  if (a.size() != b.size()) throw StructuralError("function values have different lengths");
}

}  // namespace

MCEstimate l2_px(const VectorXd& f, const VectorXd& g) {
  check_sizes(f, g);
  return mean_estimate((f - g).array().square().matrix());
}

MCEstimate l2_px(const BatchFunction& f, const BatchFunction& g, const DesignSample& design) {
  return l2_px(f(design.points), g(design.points));
}

MCEstimate kl_regression(const VectorXd& f0, const VectorXd& f) {
  const MCEstimate e = l2_px(f, f0);
  return {0.5 * e.value, 0.5 * e.stderr};
}

MCEstimate kl_regression(const BatchFunction& f0, const BatchFunction& f, const DesignSample& design) {
  return kl_regression(f0(design.points), f(design.points));
}

MCEstimate kl_variance(const VectorXd& f0, const VectorXd& f) { return l2_px(f, f0); }

MCEstimate kl_variance(const BatchFunction& f0, const BatchFunction& f, const DesignSample& design) {
  return kl_variance(f0(design.points), f(design.points));
}

MCEstimate renyi(const VectorXd& f, const VectorXd& g, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("Renyi order must lie in (0, 1)");
  check_sizes(f, g);
  const double c = alpha * (alpha - 1.0) / 2.0;
  const VectorXd a = (c * (f - g).array().square()).matrix();
  if ((a.array() > 0.0).any()) throw std::logic_error("Renyi exponent must be non-positive");
  const double amax = a.maxCoeff();
  const VectorXd e = (a.array() - amax).exp().matrix();
  const MCEstimate me = mean_estimate(e);
  const double value = (amax + std::log(me.value)) / (alpha - 1.0);
  // delta method: d/dm log m = 1/m
  const double se = me.stderr / me.value / (1.0 - alpha);
  return {value == 0.0 ? 0.0 : value, se};
}

MCEstimate renyi(const BatchFunction& f, const BatchFunction& g, double alpha, const DesignSample& design) {
  return renyi(f(design.points), g(design.points), alpha);
}

double renyi_clip_lower_bound(double l2, double alpha, double M0) {
  return 0.5 * alpha * std::exp(-2.0 * M0 * M0 * alpha * (1.0 - alpha)) * l2;
}

}  // namespace htbnn
