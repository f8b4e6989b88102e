#pragma once

#include <Eigen/Dense>
#include <vector>

namespace multimarker {

/// Cumulative Cauchit model for the component weights: D-1 strictly
/// increasing cutpoints and one shared P-dimensional biomarker coefficient.
struct CauchitModel {
  Eigen::VectorXd gamma;
  Eigen::VectorXd eta;
};

/// Cauchit CDF of the linear predictor t: (1/pi) * (atan(t/2) + pi/2).
double cauchit_cdf(double t);

/// Derivative of cauchit_cdf.
double cauchit_pdf(double t);

/// Pr(consumed quantity <= d-th level | biomarkers y) under the model, for a
/// single cutpoint gamma_d.
double cauchit_cumulative(double gamma_d, const Eigen::VectorXd& eta, const Eigen::VectorXd& y);

/// Component weights for one observation given the precomputed linear
/// predictor s = eta . y: differences of the cumulative Cauchit across the D
/// ordered components. Always a strict simplex for finite increasing gamma.
Eigen::VectorXd component_weights_from_lp(const Eigen::VectorXd& gamma, double s, Eigen::Index D);

Eigen::VectorXd component_weights(const CauchitModel& model, const Eigen::VectorXd& y,
                                  Eigen::Index D);

/// log of the single component weight pi_{i,c} (c is 0-based).
double log_component_weight(const Eigen::VectorXd& gamma, double s, Eigen::Index c,
                            Eigen::Index D);

struct OrdinalFit {
  CauchitModel model;
  bool converged = true;
  double log_likelihood = 0.0;
  int iterations = 0;
};

/// Maximum-likelihood cumulative Cauchit regression of class labels (0-based,
/// every class 0..D-1 present) on biomarkers. Columns are standardized
/// internally and the coefficients mapped back; coefficient magnitudes are
/// capped at 50 during optimization so separated data cannot diverge.
OrdinalFit fit_ordinal_cauchit_mle(const std::vector<int>& labels, const Eigen::MatrixXd& Y,
                                   Eigen::Index D);

}  // namespace multimarker
