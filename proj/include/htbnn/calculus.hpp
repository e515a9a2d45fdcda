#pragma once

#include <Eigen/Dense>
#include <vector>

#include "htbnn/network.hpp"

namespace htbnn {

/// Depth-0 network x -> A x + b.
Network affine_net(const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// Exact identity on R^dim with the given depth (>= 1), built from rho(x) - rho(-x).
Network identity_net(int dim, int depth);

/// g o f. The output of f passes through a (rho(y), rho(-y)) layer of width
/// 2 r_{L+1}, so the result is exact, has depth L + L' + 1 and reuses the
/// coefficients of both operands up to sign.
Network compose(const Network& f, const Network& g);

/// g o f with the output map of f folded into the first layer of g.
/// Depth L + L'; the merged layer carries products of coefficients.
Network compose_merged(const Network& f, const Network& g);

/// x -> (f(x), g(x)) for networks of equal depth and input dimension.
Network parallelize(const Network& f, const Network& g);
Network parallelize(const std::vector<Network>& nets);

/// Prepends q identity layers of width 2 r_0. Depth grows by q.
Network depth_sync(const Network& f, int q);

/// Appends q identity layers of width 2 r_{L+1}. Depth grows by q.
Network extend_output(const Network& f, int q);

/// Brings all networks to the largest depth by extend_output, then parallelizes.
Network stack(const std::vector<Network>& nets);

/// Embeds f into a wider architecture of the same depth by zero padding.
Network enlarge(const Network& f, const Architecture& target);

/// x -> f(A x + b).
Network affine_input(const Network& f, const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// x -> A f(x) + b.
Network affine_output(const Network& f, const Eigen::MatrixXd& A, const Eigen::VectorXd& b);

/// Selection matrix picking coordinates idx out of a vector of length n.
Eigen::MatrixXd selector(int n, const std::vector<int>& idx);

/// (-B) v (y ^ B).
inline double clip(double y, double B) { return y > B ? B : (y < -B ? -B : y); }

/// delta * V * max(b, 1)^L * (L + 1): bound on |f_theta - f_theta'|_inf over
/// [0,1]^{r_0} when |theta - theta'|_inf <= delta and |theta|_inf, |theta'|_inf <= b.
double propagation_bound(const Architecture& arch, double delta, double b);

}  // namespace htbnn
