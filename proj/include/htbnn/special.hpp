#pragma once

namespace htbnn::special {

double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

double normal_cdf(double x);
double normal_quantile(double p);

/// Two-sided tail of the Student t distribution with nu degrees of freedom: P(|T| > t).
double student_two_sided_tail(double t, double nu);
double student_quantile(double p, double nu);

/// Asymptotic Kolmogorov survival function Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

}  // namespace htbnn::special
