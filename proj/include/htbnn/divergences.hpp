#pragma once

#include <Eigen/Dense>
#include <functional>

#include "htbnn/network.hpp"

namespace htbnn {

/// Points of [0, 1]^d drawn from P_X, stored as columns.
struct DesignSample {
  Eigen::MatrixXd points;

  int dim() const { return static_cast<int>(points.rows()); }
  Eigen::Index size() const { return points.cols(); }
};

/// Evaluates a function on every column of a point matrix.
using BatchFunction = std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>;

BatchFunction as_batch(const Network& net);
BatchFunction as_batch(std::function<double(const Eigen::VectorXd&)> f);

struct MCEstimate {
  double value;
  double stderr;
};

/// (1/m) sum (f - g)^2 with its Monte-Carlo standard error.
MCEstimate l2_px(const Eigen::VectorXd& f_values, const Eigen::VectorXd& g_values);
MCEstimate l2_px(const BatchFunction& f, const BatchFunction& g, const DesignSample& design);

/// KL(P_f0, P_f) = |f - f0|^2 / 2.
MCEstimate kl_regression(const Eigen::VectorXd& f0_values, const Eigen::VectorXd& f_values);
MCEstimate kl_regression(const BatchFunction& f0, const BatchFunction& f, const DesignSample& design);

/// Second moment of the log likelihood ratio under P_f0: |f - f0|^2.
MCEstimate kl_variance(const Eigen::VectorXd& f0_values, const Eigen::VectorXd& f_values);
MCEstimate kl_variance(const BatchFunction& f0, const BatchFunction& f, const DesignSample& design);

/// D_alpha(f, g) = (1/(alpha - 1)) log mean exp(alpha (alpha - 1) (f - g)^2 / 2); alpha in (0, 1).
MCEstimate renyi(const Eigen::VectorXd& f_values, const Eigen::VectorXd& g_values, double alpha);
MCEstimate renyi(const BatchFunction& f, const BatchFunction& g, double alpha, const DesignSample& design);

/// (alpha/2) exp(-2 M0^2 alpha (1 - alpha)) * l2: lower bound on D_alpha for |f|, |g| <= M0.
double renyi_clip_lower_bound(double l2, double alpha, double M0);

}  // namespace htbnn
