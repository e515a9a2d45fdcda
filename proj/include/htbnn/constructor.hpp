#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "htbnn/network.hpp"

namespace htbnn {

/// Parameters of the grid approximation of a Hoelder function on [-1, 1]^d.
struct ApproxConfig {
  int d = 1;
  double beta = 1.0;
  double F = 1.0;
  int M = 4;
  /// C in the requirement M^{2 beta} >= C (1 v F)^{4(beta+1)}.
  double construction_constant = 1.0;

  /// Largest integer strictly smaller than beta.
  int taylor_degree() const;
  /// ceil(M^{2(beta+1)}).
  double B_M() const;
  /// 2 (1 v F) e^{2d}.
  double B_true() const;
  /// max{2 (F v 1) e^{2d}, B_M^2}.
  double coefficient_cap() const;
  /// Width M^{-2(beta+1)} of the boundary bands removed by the check network.
  double band() const;
  /// Throws PreconditionError naming the violated inequality.
  void validate() const;
};

/// f together with its partial derivatives: derivative(x, k) = d^k f(x) for a multi-index k.
struct SmoothFunction {
  int d = 1;
  std::function<double(const Eigen::VectorXd&, const std::vector<int>&)> derivative;

  double operator()(const Eigen::VectorXd& x) const { return derivative(x, std::vector<int>(static_cast<std::size_t>(d), 0)); }
};

/// Approximates (x, y) -> x y on [-1, 1]^2 within 4^{-R}. Depth R, widths 8 then 6, coefficients <= 4.
Network mult_net(int R);

/// Multi-indices of total degree <= N in d variables, graded then lexicographic.
std::vector<std::vector<int>> multi_indices(int d, int N);

/// Smallest R accepted by poly_net: ceil(log_4(2 * 4^{2(N+1)})).
int poly_min_R(int N);

/// (x, y_1..y_C) -> sum_k r_k y_k x^{l_k} for the multi-indices of multi_indices(d, N).
/// Inputs are expected in [-1, 1]. Depth R ceil(log_2(N + 1)).
Network poly_net(int d, int N, const std::vector<double>& coeffs, int R);

/// Products of the listed input coordinates (index -1 stands for the constant 1);
/// one output per term. Inputs are expected in [-1, 1].
Network product_net(int input_dim, const std::vector<std::vector<int>>& terms, int R);

/// 1_{[a,b)} exactly on points at distance >= 1/R from the cube boundary. Depth 2, width 2d.
Network indicator_net(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double R);

/// s 1_{[a,b)} exactly away from the boundary band. Depth 2.
Network test_net(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double s, double R);

/// Test network whose cube and value are inputs: (x, a, b, s) in R^{3d+1}.
Network test_net_inputs(int d, double R);

/// Componentwise (1 - (1 - x)_+)_+, i.e. clamp to [0, 1]. Depth 2.
Network clamp_unit_net(int dim);

/// Componentwise clamp to [-1, 1]. Depth 1.
Network clamp_symmetric_net(int dim);

/// Shift vectors {0, 1}^d in fixed order (binary counting, first coordinate fastest).
std::vector<std::vector<int>> grid_shifts(int d);

/// Piecewise Taylor approximation on the fine grid of cubes of side 2/M^2.
/// A nonzero shift moves the grid by 1/M^2 in the flagged coordinates and adds
/// one coarse cube in each of them so that [-1, 1]^d stays covered.
Network taylor_grid_net(const SmoothFunction& f, const ApproxConfig& cfg, const std::vector<int>& shift = {});

/// Approximation of w(x) f(x) for the tent weight w of the (shifted) fine grid.
Network localized_net(const SmoothFunction& f, const ApproxConfig& cfg, const std::vector<int>& shift = {});

/// Sum of the 2^d shifted localized networks.
Network wide_net(const SmoothFunction& f, const ApproxConfig& cfg);

/// wide_net embedded into the target architecture. Throws PreconditionError when
/// the target lies below the depth or width thresholds, StructuralError when the
/// built network does not fit into it.
Network wide_net(const SmoothFunction& f, const ApproxConfig& cfg, const Architecture& target);

/// 5 + ceil(log_4 M^{2 beta}) (ceil(log_2((d v floor(beta)) + 1)) + 1).
int wide_depth_threshold(const ApproxConfig& cfg);
/// 64 binom(d + floor(beta), d) 2^d d^2 (floor(beta) + 1) M^d.
double wide_width_threshold(const ApproxConfig& cfg);

/// Direct evaluation of the tent weight prod_k (1 - M^2 |c_k + 1/M^2 - x_k|)_+
/// where c is the corner of the fine cube of the shifted grid containing x.
double tent_weight(const ApproxConfig& cfg, const std::vector<int>& shift, const Eigen::VectorXd& x);

/// Lower corner of the fine cube containing x; false when x is outside the grid.
bool fine_cube_corner(const ApproxConfig& cfg, const std::vector<int>& shift, const Eigen::VectorXd& x,
                      Eigen::VectorXd& corner);

/// Points of [-1, 1]^d for sup-error checks: a regular grid (d = 1) or a Latin
/// hypercube (d >= 2) of the given size, plus points within three band widths of
/// the fine-cube faces of both grids, where the check network switches off.
/// Without the latter the error near the faces is missed once the band is
/// narrower than the grid spacing.
Eigen::MatrixXd verification_points(const ApproxConfig& cfg, int points, std::uint64_t seed = 1);

/// max |net(x) - f(x)| over the columns of X.
double sup_error(const Network& net, const SmoothFunction& f, const Eigen::MatrixXd& X);

/// Structured summary of a built network.
struct BuildReport {
  std::string name;
  int depth;
  int max_width;
  std::size_t coefficients;
  std::size_t active;
  double max_coefficient;
  double cap;
};

BuildReport build_report(const std::string& name, const Network& net, double cap);

/// Throws std::logic_error if some coefficient exceeds cap.
void assert_coefficient_cap(const Network& net, double cap, const std::string& what);

}  // namespace htbnn
