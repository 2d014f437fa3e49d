#pragma once

#include <span>

namespace varsmc::stats {

/// Inverse standard normal CDF (Wichura's AS241, ~1e-16 relative accuracy).
/// Throws std::domain_error outside (0, 1).
double normal_quantile(double p);

double normal_cdf(double x);

double normal_log_pdf(double x, double mean, double sd);

/// Upper tail P(X > x) for X ~ chi-square with `dof` degrees of freedom.
double chi2_upper_tail(double x, double dof);

/// Quantile of the unit-variance Student-t with `nu` > 2 degrees of freedom.
double standardized_t_quantile(double p, double nu);

double mean(std::span<const double> xs);

/// Unbiased sample variance; 0 for fewer than two points.
double variance(std::span<const double> xs);

/// Linear-interpolated empirical quantile (type 7) of an unsorted sample.
double empirical_quantile(std::span<const double> xs, double p);

}  // namespace varsmc::stats
