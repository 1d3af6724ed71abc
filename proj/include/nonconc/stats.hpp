#pragma once

#include <cstddef>
#include <vector>

namespace nonconc {

// Standard normal CDF.
double normal_cdf(double x);

// Standard normal quantile (AS241 / PPND16 double-precision algorithm).
// p must be in (0, 1).
double normal_quantile(double p);

// Two-sided normal p-value for a z statistic.
double two_sided_p(double z);

// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

// Chi-square upper tail P(X > x) with k degrees of freedom.
double chisq_tail(double x, int k);
// Chi-square CDF.
double chisq_cdf(double x, int k);

// Population-convention mean/variance helpers (divide by n).
double mean(const std::vector<double>& v);
double pop_variance(const std::vector<double>& v);

}  // namespace nonconc
