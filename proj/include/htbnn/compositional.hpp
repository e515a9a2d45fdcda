#pragma once

#include <vector>

#include "htbnn/constructor.hpp"

namespace htbnn {

/// One g_ij: reads the listed coordinates of the layer input and is t_i-variate.
struct CompositionComponent {
  std::vector<int> inputs;
  SmoothFunction g;
};

/// f = g_q o ... o g_0 with g_i : [-K, K]^{d_i} -> [-K, K]^{d_{i+1}} for i >= 1 and
/// g_0 defined on [0, 1]^d.
struct CompositionSpec {
  int q = 0;
  std::vector<int> d;        // d_0 .. d_{q+1}
  std::vector<int> t;        // t_0 .. t_q
  std::vector<double> beta;  // beta_0 .. beta_q
  double K = 1.0;
  std::vector<std::vector<CompositionComponent>> layers;  // layer i has d_{i+1} components

  void validate() const;
  double operator()(const Eigen::VectorXd& x) const;
};

struct CompositionOptions {
  double construction_constant = 1.0;
  /// Throw when the network does not fit F(ceil(log^{1+delta} n), r(sqrt n)).
  bool strict = false;
  /// Largest k tried when searching the smallest n = 2^k that fits.
  int max_log2_n = 64;
};

struct CompositionalResult {
  Network net = Network::zeros(Architecture(0, {1, 1}));
  /// True when the network was embedded into the theoretical architecture.
  bool theoretical = false;
  std::vector<int> M;
  int target_depth = 0;
  int target_width = 0;
  std::size_t sparsity = 0;
  int r_star = 0;
  double max_coefficient = 0.0;
  /// Smallest integer c >= 1 with max |theta| <= n^c.
  int c_exponent = 1;
  /// Smallest n = 2^k for which the construction fits the theoretical architecture; 0 if none found.
  double minimal_n = 0.0;
};

/// M_i = ceil((n / log^gamma n)^{1 / (2(2 beta*_i + t_i))}).
std::vector<int> composition_grid_sizes(const CompositionSpec& spec, double n, double gamma);

/// Builds the compositional approximation from wide networks of the rescaled
/// components. When it does not fit the theoretical architecture the natural
/// network is returned with theoretical = false (or PreconditionError in strict mode).
CompositionalResult compositional_net(const CompositionSpec& spec, double n, double delta, double gamma,
                                      const CompositionOptions& opt = {});

/// True when every weight W_l(i, j) with max(i, j) >= r and every shift v_l(i) with i >= r is zero (0-based).
bool active_block_confined(const Network& net, int r);

}  // namespace htbnn
