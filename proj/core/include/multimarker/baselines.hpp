#pragma once

#include <Eigen/Dense>
#include <vector>

#include "multimarker/data.hpp"

namespace multimarker {

struct IntervalPrediction {
  double median = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

/// Conjugate normal-inverse-gamma regression of the consumed quantity on the
/// biomarker panel: coefficients (intercept first) N(0, sigma^2 prior_scale I)
/// given the noise variance, noise InvGamma(1, 1).
struct BlrModel {
  Eigen::VectorXd coef_mean;   // P+1
  Eigen::MatrixXd coef_shape;  // V_n, unscaled posterior covariance factor
  double a_n = 1.0;            // noise posterior shape
  double b_n = 1.0;            // noise posterior scale
  double prior_scale = 1e4;
  Eigen::Index n = 0;
  bool rank_warning = false;  // n <= P+1: posterior proper only through the prior
};

BlrModel fit_blr(const Dataset& data, double prior_scale = 1e4);

/// Posterior predictive medians and central 95% intervals (Student t).
std::vector<IntervalPrediction> predict_blr(const BlrModel& model, const Eigen::MatrixXd& y_star);

/// Univariate-response NIPALS partial least squares on standardized
/// biomarkers. Prediction intervals come from the spread of models refitted
/// on 10 cross-validation folds, matching the narrow ranges that
/// construction produces.
struct PlsModel {
  int n_components = 2;
  Eigen::VectorXd x_mean, x_sd;
  double y_mean = 0.0;
  Eigen::MatrixXd weights;    // P x K
  Eigen::MatrixXd loadings;   // P x K
  Eigen::VectorXd y_loading;  // K
  Eigen::VectorXd coef;       // P, standardized space
  Eigen::MatrixXd scores;     // n x K, mutually orthogonal
  std::vector<Eigen::VectorXd> fold_coefs;
  std::vector<Eigen::VectorXd> fold_x_mean, fold_x_sd;
  std::vector<double> fold_y_mean;
};

PlsModel fit_pls(const Dataset& data, int n_components = 2);

std::vector<IntervalPrediction> predict_pls(const PlsModel& model, const Eigen::MatrixXd& y_star);

}  // namespace multimarker
