#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "htbnn/constructor.hpp"
#include "htbnn/divergences.hpp"
#include "htbnn/random.hpp"

namespace htbnn {

/// n observations Y_i = f0(X_i) + xi_i with X_i in [0,1]^d (columns of X) and unit noise.
struct RegressionData {
  Eigen::MatrixXd X;
  Eigen::VectorXd Y;

  int n() const { return static_cast<int>(Y.size()); }
  int d() const { return static_cast<int>(X.rows()); }
};

enum class DesignKind { UniformCube, ManifoldEmbedding, Custom };

struct DesignSpec {
  DesignKind kind = DesignKind::UniformCube;
  int d = 1;
  int intrinsic_dim = 1;
  /// Smooth map [0,1]^{intrinsic_dim} -> [0,1]^d.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> embedding;
  std::function<Eigen::VectorXd(Rng&)> sampler;

  static DesignSpec uniform_cube(int d);
  /// t -> (t, t^2, ..., t^d) with t uniform on [0, 1].
  static DesignSpec curve(int d);
  static DesignSpec manifold(int d, int intrinsic_dim, std::function<Eigen::VectorXd(const Eigen::VectorXd&)> embedding);
  static DesignSpec custom(int d, std::function<Eigen::VectorXd(Rng&)> sampler);

  std::string name() const;
  Eigen::VectorXd draw(Rng& rng) const;
  DesignSample sample(Eigen::Index m, Rng& rng) const;
};

/// Ground truth with its declared regularity class.
struct TruthFixture {
  std::string name;
  int d = 1;
  std::function<double(const Eigen::VectorXd&)> f0;
  /// Analytic partial derivatives where available (d == derivative.d).
  SmoothFunction smooth;
  /// Compositional declaration (q, t, beta, K); for anisotropic fixtures beta is per coordinate.
  int q = 0;
  std::vector<int> t;
  std::vector<double> beta;
  double K = 1.0;
  bool anisotropic = false;
  double M0 = 1.0;
  std::string label = "synthetic fixture";

  /// beta*_i / (2 beta*_i + t_i) minimized over i, or beta~/(2 beta~ + 1) when anisotropic.
  double rate_exponent() const;
  double operator()(const Eigen::VectorXd& x) const { return f0(x); }
  BatchFunction batch() const;
};

std::vector<std::string> fixture_names();
/// d <= 0 selects the fixture's default dimension. `scale` multiplies f0, its
/// derivatives, M0 and the Hoelder radius K.
TruthFixture fixture(const std::string& name, int d = 0, double scale = 1.0);

RegressionData gen_data(const TruthFixture& fix, const DesignSpec& spec, int n, Rng& rng);

/// Box-counting slope of log N(eps) against log(1/eps) over the given radii.
double minkowski_estimate(const Eigen::MatrixXd& points, const std::vector<double>& radii);

void write_data_csv(const std::string& path, const RegressionData& data);

}  // namespace htbnn
