#pragma once

namespace causaldq::stats {

/// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

double chi_square_cdf(double x, double dof);
double chi_square_pdf(double x, double dof);

/**
 * Quantile of the chi-square distribution.
 *
 * Starts from the Wilson-Hilferty cube approximation and refines with
 * Newton steps on the regularized gamma function until the step falls
 * below 1e-12 relative.
 */
double chi_square_quantile(double dof, double prob);

}  // namespace causaldq::stats
