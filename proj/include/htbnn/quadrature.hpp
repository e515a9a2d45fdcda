#pragma once

#include <functional>
#include <vector>

namespace htbnn {

struct QuadratureResult {
  double value;
  double error;
  int evaluations;
  bool converged;
};

struct QuadratureOptions {
  double abs_tol = 1e-11;
  double rel_tol = 1e-10;
  int max_intervals = 4000;
  int min_intervals = 16;
};

/// Globally adaptive 15-point Gauss-Kronrod integration of f over [a, b].
/// Either end may be infinite; infinite ranges are mapped to (0, 1).
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureOptions& opt = {});

/// Integrates over [a, b] split at the given interior breakpoints.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           std::vector<double> breakpoints, const QuadratureOptions& opt = {});

}  // namespace htbnn
