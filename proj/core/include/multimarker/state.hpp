#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "multimarker/data.hpp"
#include "multimarker/hyperparameters.hpp"
#include "multimarker/rng.hpp"

namespace multimarker {

/// One full draw of the model parameters plus the latent state.
struct ModelState {
  Eigen::VectorXd alpha;   // P, >= 0, biomarker units
  Eigen::VectorXd beta;    // P, > 0, biomarker units per gram
  Eigen::VectorXd sigma2;  // P, > 0, biomarker error variances
  double mu_alpha = 0.0;
  double mu_beta = 0.0;
  double sigma_beta2 = 1.0;
  Eigen::VectorXd theta2;  // D, > 0, component variances (grams^2)
  Eigen::VectorXd gamma;   // D-1, strictly increasing cutpoints
  Eigen::VectorXd eta;     // P
  Eigen::VectorXd z;       // n, >= 0, latent intakes (grams)
  std::vector<int> c;      // n, 0-based component allocations
  Eigen::MatrixXd pi;      // n x D, rows on the simplex

  /// Throws ParameterError on the first violated invariant.
  void check_invariants(Eigen::Index n, Eigen::Index P, Eigen::Index D) const;
};

struct SamplerConfig {
  int n_iter = 30000;
  int n_burn = 6000;
  int thin = 1;
  double mh_step_gamma = 0.5;
  double mh_step_eta = 0.1;
  int adapt_window = 100;
  std::uint64_t seed = 1;
  bool stochastic_allocation = false;  // draw c from its weights instead of the argmax
  bool theta_init_from_dose_variances = false;

  void validate() const;
};

/// Ordered post-burn-in draws with the metadata needed to reload and predict.
struct PosteriorChain {
  std::vector<ModelState> draws;
  SamplerConfig config;
  std::string dataset_fingerprint;
  Eigen::VectorXd levels;  // food quantities X
  Eigen::Index n = 0, P = 0, D = 0;
  Hyperparameters hyp;
  bool scaled = false;
  ScalingTransform scaling;  // valid when scaled

  double acceptance_gamma = 0.0;
  double acceptance_eta = 0.0;
  double final_step_gamma = 0.0;
  double final_step_eta = 0.0;
};

/// Starting state for the sampler: regression-seeded alpha/beta, moment-based
/// error variances, dose-anchored latent intakes and uniform weights.
/// Requires at least two distinct observed doses.
ModelState initialize_state(const Dataset& data, const Hyperparameters& hyp, RngStream& rng,
                            bool theta_from_dose_variances = false);

}  // namespace multimarker
