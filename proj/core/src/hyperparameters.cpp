#include "multimarker/hyperparameters.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "multimarker/errors.hpp"
#include "multimarker/ordinal.hpp"

namespace multimarker {

void Hyperparameters::validate(Eigen::Index P, Eigen::Index D) const {
  if (!(tau_alpha > 0.0 && tau_beta > 0.0)) throw ParameterError("tau_alpha/tau_beta must be positive");
  if (sigma_alpha2 != 1.0) throw ParameterError("sigma_alpha2 is fixed at 1");
  if (!(nu_beta1 > 0.0 && nu_beta2 > 0.0 && nu_P1 > 0.0 && nu_P2 > 0.0)) {
    throw ParameterError("variance hyperparameters must be positive");
  }
  if (!(kappa > 0.0 && kappa <= 2.0)) throw ParameterError("kappa must lie in (0, 2]");
  if (nu_z1.size() != D || nu_z2.size() != D) throw ParameterError("nu_z1/nu_z2 must have length D");
  if ((nu_z1.array() <= 0.0).any() || (nu_z2.array() <= 0.0).any()) {
    throw ParameterError("nu_z1/nu_z2 entries must be positive");
  }
  if (m_gamma.size() != D - 1) throw ParameterError("m_gamma must have length D-1");
  for (Eigen::Index d = 0; d + 1 < m_gamma.size(); ++d) {
    if (!(m_gamma(d) < m_gamma(d + 1))) throw ParameterError("m_gamma must be strictly increasing");
  }
  if (m_eta.size() != P) throw ParameterError("m_eta must have length P");
  if (m_alpha < 0.0 || m_beta < 0.0) throw ParameterError("m_alpha/m_beta must be nonnegative");
}

namespace {

// Fallback cutpoint seeds from empirical cumulative class proportions,
// mapped through the inverse Cauchit link; used when some dose level has no
// observations (possible in cross-validation folds) and the ordinal MLE
// cannot run.
void seed_from_class_frequencies(const std::vector<int>& labels, Eigen::Index D,
                                 Hyperparameters& hyp, Eigen::Index P) {
  const double n = static_cast<double>(labels.size());
  std::vector<double> counts(static_cast<std::size_t>(D), 0.0);
  for (int c : labels) counts[static_cast<std::size_t>(c)] += 1.0;
  hyp.m_gamma.resize(D - 1);
  double cum = 0.0;
  for (Eigen::Index d = 0; d < D - 1; ++d) {
    cum += counts[static_cast<std::size_t>(d)];
    double q = std::min(0.95, std::max(0.05, cum / n));
    hyp.m_gamma(d) = 2.0 * std::tan(std::numbers::pi * (q - 0.5));
    if (d > 0 && hyp.m_gamma(d) <= hyp.m_gamma(d - 1)) {
      hyp.m_gamma(d) = hyp.m_gamma(d - 1) + 0.1;
    }
  }
  hyp.m_eta = Eigen::VectorXd::Zero(P);
}

}  // namespace

Hyperparameters derive_hyperparameters(const Dataset& data) {
  if (!data.has_dose()) {
    throw UsageError("derive_hyperparameters requires intervention data with doses");
  }
  const Eigen::Index n = data.n();
  const Eigen::Index P = data.P();
  const Eigen::Index D = data.D();

  Hyperparameters hyp;

  // m_alpha / m_beta: ordinary least squares of the pooled biomarker values
  // (all P columns stacked) on the consumed quantities; negative estimates
  // are clamped to zero to respect the nonnegative prior supports.
  {
    const Eigen::VectorXd& x = *data.dose;
    const double x_mean = x.mean();
    double sxx = 0.0, sxy = 0.0;
    double y_sum = 0.0;
    for (Eigen::Index p = 0; p < P; ++p) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double xc = x(i) - x_mean;
        sxx += xc * xc;
        sxy += xc * data.Y(i, p);
        y_sum += data.Y(i, p);
      }
    }
    if (!(sxx > 0.0)) throw DataError("doses are constant; cannot derive m_alpha/m_beta");
    const double slope = sxy / sxx;
    const double intercept = y_sum / static_cast<double>(n * P) - slope * x_mean;
    hyp.m_beta = std::max(0.0, slope);
    hyp.m_alpha = std::max(0.0, intercept);
  }

  hyp.nu_z1.resize(D);
  hyp.nu_z2.resize(D);
  for (Eigen::Index d = 0; d < D; ++d) {
    hyp.nu_z1(d) = 0.5 * static_cast<double>(D - d);  // (D - (d+1) + 1) / 2 for 1-based d
    hyp.nu_z2(d) = static_cast<double>(n);
  }

  // m_gamma / m_eta from the ordinal regression of the known allocation
  // labels on the biomarkers.
  std::vector<int> labels(static_cast<std::size_t>(n));
  std::vector<bool> present(static_cast<std::size_t>(D), false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index c = data.level_index(i);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
    present[static_cast<std::size_t>(c)] = true;
  }
  const bool all_present =
      std::all_of(present.begin(), present.end(), [](bool b) { return b; });
  if (all_present) {
    const OrdinalFit fit = fit_ordinal_cauchit_mle(labels, data.Y, D);
    hyp.m_gamma = fit.model.gamma;
    hyp.m_eta = fit.model.eta;
  } else {
    seed_from_class_frequencies(labels, D, hyp, P);
  }

  hyp.validate(P, D);
  return hyp;
}

}  // namespace multimarker
