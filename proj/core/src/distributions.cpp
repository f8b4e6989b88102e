#include "multimarker/distributions.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "multimarker/errors.hpp"
#include "multimarker/special.hpp"

namespace multimarker {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSqrt2Pi = 0.9189385332046727;
// Past this many standard deviations the inverse-CDF route loses the tail;
// switch to exponential rejection.
constexpr double kTailThreshold = 4.0;

std::string describe(const TruncNormalParams& p) {
  std::ostringstream os;
  os << "TruncNormal(mean=" << p.mean << ", variance=" << p.variance << ", lower=" << p.lower
     << ", upper=" << p.upper << ")";
  return os.str();
}

// log of the standard normal upper tail, stable for large x.
double log_normal_sf(double x) {
  if (x < 10.0) return std::log(normal_sf(x));
  const double x2 = x * x;
  // Asymptotic Mills series: sf(x) = phi(x)/x * (1 - 1/x^2 + 3/x^4 - 15/x^6).
  const double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
  return -0.5 * x2 - kLogSqrt2Pi - std::log(x) + std::log(series);
}

// log P(a < Z <= b), usable even when the interval mass underflows.
double log_normal_interval_prob(double a, double b) {
  const double direct = normal_interval_prob(a, b);
  if (direct > 0.0) return std::log(direct);
  if (a >= 0.0) {
    const double la = log_normal_sf(a);
    const double lb = (b == kInf) ? -kInf : log_normal_sf(b);
    if (lb == -kInf) return la;
    return la + std::log1p(-std::exp(lb - la));
  }
  if (b <= 0.0) return log_normal_interval_prob(-b, -a);
  return -kInf;  // a < 0 < b cannot underflow unless a == b
}

// One-sided tail sampler on [a, inf) for a > 0 (Robert's exponential
// rejection). Optionally bounded above by b; throws once the bounded variant
// stops accepting, which only happens when the interval mass is negligible.
double sample_tail(double a, double b, RngStream& rng, const TruncNormalParams& p) {
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  const int max_iter = 100000;
  for (int i = 0; i < max_iter; ++i) {
    const double x = a - std::log(rng.uniform()) / rate;
    if (x > b) continue;
    const double d = x - rate;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return x;
  }
  throw ParameterError("sample_truncated_normal: truncation mass below machine precision for " +
                       describe(p));
}

}  // namespace

void validate(const TruncNormalParams& p) {
  if (!(p.variance > 0.0) || std::isnan(p.mean)) {
    throw ParameterError("truncated normal requires finite mean and variance > 0: " + describe(p));
  }
  if (!(p.lower < p.upper)) {
    throw ParameterError("truncated normal requires lower < upper: " + describe(p));
  }
}

void validate(const InvGammaParams& p) {
  if (!(p.shape > 0.0) || !(p.scale > 0.0)) {
    std::ostringstream os;
    os << "inverse gamma requires shape > 0 and scale > 0 (shape=" << p.shape
       << ", scale=" << p.scale << ")";
    throw ParameterError(os.str());
  }
}

double sample_normal(RngStream& rng) { return normal_quantile(rng.uniform()); }

double sample_gamma(double shape, RngStream& rng) {
  if (!(shape > 0.0)) throw ParameterError("sample_gamma: shape must be positive");
  if (shape < 1.0) {
    const double boost = std::pow(rng.uniform(), 1.0 / shape);
    return sample_gamma(shape + 1.0, rng) * boost;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = sample_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double sample_truncated_normal(const TruncNormalParams& p, RngStream& rng) {
  validate(p);
  const double sd = std::sqrt(p.variance);
  const double a = (p.lower == -kInf) ? -kInf : (p.lower - p.mean) / sd;
  const double b = (p.upper == kInf) ? kInf : (p.upper - p.mean) / sd;

  double z;
  if (a == -kInf && b == kInf) {
    z = sample_normal(rng);
  } else if (a > kTailThreshold) {
    z = sample_tail(a, b, rng, p);
  } else if (b < -kTailThreshold) {
    z = -sample_tail(-b, -a, rng, p);
  } else {
    const double fa = (a == -kInf) ? 0.0 : normal_cdf(a);
    const double mass = normal_interval_prob(a == -kInf ? -38.0 : a, b == kInf ? 38.0 : b);
    if (!(mass > 0.0)) {
      throw ParameterError(
          "sample_truncated_normal: truncation mass below machine precision for " + describe(p));
    }
    double u = fa + rng.uniform() * mass;
    u = std::fmin(std::fmax(u, 1e-300), 1.0 - 1e-16);
    z = normal_quantile(u);
  }
  double x = p.mean + sd * z;
  if (x < p.lower) x = p.lower;
  if (x > p.upper) x = p.upper;
  return x;
}

double sample_inverse_gamma(const InvGammaParams& p, RngStream& rng) {
  validate(p);
  // 1/X with X ~ Gamma(shape, rate = scale).
  const double g = sample_gamma(p.shape, rng) / p.scale;
  return 1.0 / g;
}

std::size_t sample_categorical(std::span<const double> weights, RngStream& rng) {
  if (weights.empty()) throw ParameterError("sample_categorical: empty weight vector");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0 || std::isnan(w)) {
      throw ParameterError("sample_categorical: weights must be nonnegative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw ParameterError("sample_categorical: all weights are zero");
  const double u = rng.uniform() * total;
  double cum = 0.0;
  for (std::size_t d = 0; d < weights.size(); ++d) {
    cum += weights[d];
    if (u <= cum) return d;
  }
  return weights.size() - 1;
}

double log_density_truncated_normal(double x, const TruncNormalParams& p) {
  validate(p);
  if (x < p.lower || x > p.upper) return -kInf;
  const double sd = std::sqrt(p.variance);
  const double a = (p.lower == -kInf) ? -kInf : (p.lower - p.mean) / sd;
  const double b = (p.upper == kInf) ? kInf : (p.upper - p.mean) / sd;
  const double log_mass = (a == -kInf && b == kInf) ? 0.0 : log_normal_interval_prob(a, b);
  return normal_logpdf(x, p.mean, sd) - log_mass;
}

double truncated_normal_cdf(double x, const TruncNormalParams& p) {
  validate(p);
  if (x <= p.lower) return 0.0;
  if (x >= p.upper) return 1.0;
  const double sd = std::sqrt(p.variance);
  const double a = (p.lower == -kInf) ? -kInf : (p.lower - p.mean) / sd;
  const double b = (p.upper == kInf) ? kInf : (p.upper - p.mean) / sd;
  const double xi = (x - p.mean) / sd;
  const double mass = normal_interval_prob(a == -kInf ? -38.0 : a, b == kInf ? 38.0 : b);
  if (!(mass > 0.0)) {
    throw ParameterError("truncated_normal_cdf: truncation mass below machine precision for " +
                         describe(p));
  }
  const double part = normal_interval_prob(a == -kInf ? -38.0 : a, xi);
  return std::fmin(1.0, std::fmax(0.0, part / mass));
}

double truncated_normal_mean(const TruncNormalParams& p) {
  validate(p);
  const double sd = std::sqrt(p.variance);
  const double a = (p.lower == -kInf) ? -kInf : (p.lower - p.mean) / sd;
  const double b = (p.upper == kInf) ? kInf : (p.upper - p.mean) / sd;
  auto phi = [](double t) {
    return (std::isinf(t)) ? 0.0 : std::exp(-0.5 * t * t - kLogSqrt2Pi);
  };
  const double mass = std::exp(log_normal_interval_prob(a == -kInf ? -38.0 : a, b == kInf ? 38.0 : b));
  if (!(mass > 0.0)) {
    throw ParameterError("truncated_normal_mean: truncation mass below machine precision for " +
                         describe(p));
  }
  return p.mean + sd * (phi(a) - phi(b)) / mass;
}

double inverse_gamma_logpdf(double x, const InvGammaParams& p) {
  validate(p);
  if (!(x > 0.0)) return -kInf;
  return p.shape * std::log(p.scale) - std::lgamma(p.shape) - (p.shape + 1.0) * std::log(x) -
         p.scale / x;
}

double inverse_gamma_cdf(double x, const InvGammaParams& p) {
  validate(p);
  if (!(x > 0.0)) return 0.0;
  return gamma_q(p.shape, p.scale / x);
}

}  // namespace multimarker
