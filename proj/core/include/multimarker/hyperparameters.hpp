#pragma once

#include <Eigen/Dense>

#include "multimarker/data.hpp"

namespace multimarker {

/// Fixed prior/hyperprior constants, derived from the intervention data by
/// the empirical-Bayes recipe: regression-based means, fixed variance
/// hyperparameters, component-indexed latent-intake hyperparameters and
/// ordinal-regression seeds for the weight parameters.
struct Hyperparameters {
  double m_alpha = 0.0;
  double m_beta = 0.0;
  double tau_alpha = 1.0;
  double tau_beta = 1.0;
  double sigma_alpha2 = 1.0;  // fixed at 1 for identifiability
  double nu_beta1 = 2.0;
  double nu_beta2 = 3.0;
  double nu_P1 = 1.0;
  double nu_P2 = 3.0;
  Eigen::VectorXd nu_z1;    // length D, (D - d + 1) / 2
  Eigen::VectorXd nu_z2;    // length D, all n
  Eigen::VectorXd m_gamma;  // length D-1, strictly increasing
  Eigen::VectorXd m_eta;    // length P
  double kappa = 2.0;       // <= 2

  void validate(Eigen::Index P, Eigen::Index D) const;
};

/// Empirical-Bayes hyperparameter derivation from an intervention dataset
/// (doses required). Deterministic given the data.
Hyperparameters derive_hyperparameters(const Dataset& data);

}  // namespace multimarker
