#pragma once

#include <utility>
#include <vector>

#include "multimarker/sampler.hpp"
#include "multimarker/state.hpp"

namespace multimarker {

/// Closed-form moments of the latent-intake sampling distribution implied by
/// the biomarker panel alone:
///   sigma_z2 = ( sum_p beta_p^2 / sigma_p^2 )^-1
///   mu_z     = sigma_z2 * sum_p beta_p (y*_p - alpha_p) / sigma_p^2
struct PredictiveMoments {
  double mu_z = 0.0;
  double sigma_z2 = 0.0;
};

/// Throws ParameterError when every beta_p is zero (no information).
PredictiveMoments predictive_moments(const Eigen::VectorXd& y_star, const ModelState& state);

struct PredictiveResult {
  Eigen::VectorXd draws;  // one retained z* per stored chain state, all >= 0
  double median = 0.0;
  std::pair<double, double> ci95{0.0, 0.0};
  Eigen::VectorXd component_freq;  // empirical allocation frequencies, sums to 1
};

/// Median, central 95% interval (interpolated order statistics) and the
/// component allocation frequencies of a set of retained predictive draws.
PredictiveResult summarize_predictive(const Eigen::VectorXd& z_draws,
                                      const std::vector<int>& c_draws, Eigen::Index D);

/// Two-step posterior predictive sampling, replaying the stored training
/// draws: per retained state, weights come from the stored cutpoints and
/// coefficients, the allocation is the weight-by-component-density argmax at
/// the previous step's z*, and z* is drawn from the allocated component of
/// the precision-combined truncated normal. The first argmax is evaluated at
/// the weight-averaged food quantity.
std::vector<PredictiveResult> sample_predictive(const Eigen::MatrixXd& y_star_batch,
                                                const PosteriorChain& chain, RngStream& rng);

/// Alternative prediction mode: append the new biomarker rows to the
/// training data and continue the sampler, treating their intakes and
/// allocations as latent. Heavier but conditions the parameter draws on y*.
std::vector<PredictiveResult> sample_predictive_augmented(const Dataset& train,
                                                          const Hyperparameters& hyp,
                                                          const SamplerConfig& cfg,
                                                          const Eigen::MatrixXd& y_star_batch);

}  // namespace multimarker
