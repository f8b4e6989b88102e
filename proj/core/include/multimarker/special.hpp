#pragma once

namespace multimarker {

/// Standard normal CDF, accurate in both tails (erfc based).
double normal_cdf(double x);

/// Standard normal upper tail P(Z > x), accurate for large x.
double normal_sf(double x);

/// Standard normal quantile (Wichura's rational approximation, full double
/// precision). p must lie in (0, 1).
double normal_quantile(double p);

/// log pdf of N(mean, sd^2) at x.
double normal_logpdf(double x, double mean, double sd);

/// P(a < Z <= b) for a standard normal, computed from the nearer tail so the
/// result stays accurate when both endpoints sit far out in one tail.
double normal_interval_prob(double a, double b);

/// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

/// Regularized incomplete beta I_x(a, b).
double beta_inc(double a, double b, double x);

/// Quantile of Student's t with nu degrees of freedom.
double student_t_quantile(double p, double nu);

}  // namespace multimarker
