#pragma once

#include <limits>
#include <span>

#include "multimarker/rng.hpp"

namespace multimarker {

/// Parameters of a (possibly one- or two-sided) truncated Gaussian.
/// `lower`/`upper` may be -inf/+inf; variance must be positive, lower < upper.
struct TruncNormalParams {
  double mean = 0.0;
  double variance = 1.0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

/// Inverse gamma in the shape/scale parameterization with mean
/// scale / (shape - 1) for shape > 1.
struct InvGammaParams {
  double shape = 1.0;
  double scale = 1.0;
};

void validate(const TruncNormalParams& p);
void validate(const InvGammaParams& p);

/// Standard normal draw (inverse CDF, one uniform per draw).
double sample_normal(RngStream& rng);

/// Gamma(shape, 1) draw. Marsaglia-Tsang squeeze for shape >= 1, boosted for
/// shape < 1.
double sample_gamma(double shape, RngStream& rng);

/// Draw from the normal restricted to [lower, upper]. Inverse CDF in the
/// central regime; exponential tail rejection once the near bound lies more
/// than 4 standard deviations past the mean, so far-tail conditionals cannot
/// stall.
double sample_truncated_normal(const TruncNormalParams& p, RngStream& rng);

double sample_inverse_gamma(const InvGammaParams& p, RngStream& rng);

/// Index draw with probability weights[d]; weights are renormalized
/// internally. Throws if any weight is negative or all are zero.
std::size_t sample_categorical(std::span<const double> weights, RngStream& rng);

/// Log of the normalized truncated-normal density; -inf outside the support.
double log_density_truncated_normal(double x, const TruncNormalParams& p);

/// CDF of the truncated normal (0 below lower, 1 above upper).
double truncated_normal_cdf(double x, const TruncNormalParams& p);

/// Analytic mean of the truncated normal.
double truncated_normal_mean(const TruncNormalParams& p);

double inverse_gamma_logpdf(double x, const InvGammaParams& p);
double inverse_gamma_cdf(double x, const InvGammaParams& p);

}  // namespace multimarker
