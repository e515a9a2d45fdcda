#pragma once

#include <functional>
#include <vector>

namespace htbnn {

double mean(const std::vector<double>& x);
/// Unbiased sample variance.
double variance(const std::vector<double>& x);
double standard_error(const std::vector<double>& x);
double quantile(std::vector<double> x, double p);

struct TestResult {
  double statistic;
  double p_value;
};

TestResult ks_one_sample(std::vector<double> x, const std::function<double(double)>& cdf);
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Anderson-Darling A^2 against a fully specified continuous cdf.
double anderson_darling(std::vector<double> x, const std::function<double(double)>& cdf);
/// Asymptotic 1% critical value of A^2 for a fully specified null.
inline constexpr double kAndersonDarlingCritical1pct = 3.857;

struct LinearFit {
  double slope;
  double intercept;
  double slope_stderr;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Split R-hat over equal-length chains.
double split_rhat(const std::vector<std::vector<double>>& chains);

}  // namespace htbnn
