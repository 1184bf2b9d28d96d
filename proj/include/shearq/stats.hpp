#pragma once

#include <vector>

namespace shearq {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_half_width = 0.0;  ///< 95% confidence half-width of the slope
  double r2 = 0.0;
  int n = 0;
};

/// Ordinary least squares y = intercept + slope x with a Student-t interval.
LineFit ols(const std::vector<double>& x, const std::vector<double>& y);

/// OLS on (log x, log y); all inputs must be positive.
LineFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided 97.5% quantile of Student's t with dof degrees of freedom.
double student_t975(int dof);

double normal_cdf(double x, double mean = 0.0, double sd = 1.0);

/// Kolmogorov-Smirnov distance between the empirical law of the samples and
/// Normal(mean, sd^2).
double ks_distance_normal(std::vector<double> samples, double mean, double sd);

/// Mean and sample standard deviation.
struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};
Moments moments(const std::vector<double>& v);

}  // namespace shearq
