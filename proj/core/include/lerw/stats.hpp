#pragma once

#include <cstdint>
#include <vector>

namespace lerw {

double mean(const std::vector<double>& xs);
double sample_stddev(const std::vector<double>& xs);
// standard error of the mean
double stderr_of_mean(const std::vector<double>& xs);

// upper-tail chi-square p-value
double chi_square_pvalue(double stat, int dof);

// Pearson test of observed counts against expected probabilities (expected
// counts must be positive). Returns the p-value.
double chi_square_gof_pvalue(const std::vector<std::uint64_t>& observed,
                             const std::vector<double>& expected_probs);

// Homogeneity test for two count vectors over the same cells. Cells empty
// in both samples are dropped.
double chi_square_homogeneity_pvalue(const std::vector<std::uint64_t>& a,
                                     const std::vector<std::uint64_t>& b);

// Two-sample Kolmogorov-Smirnov, asymptotic p-value with the small-sample
// correction of Stephens.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

// Wilson score interval for a binomial proportion (z = 1.96 by default).
struct Interval {
  double lo = 0, hi = 0;
};
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                         double z = 1.96);

// Ordinary least squares y = intercept + slope x with residual-based
// standard errors.
struct OlsFit {
  double slope = 0, intercept = 0;
  double slope_stderr = 0, intercept_stderr = 0;
  std::vector<double> residuals;
};
OlsFit ols_fit(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace lerw
