#include "multimarker/baselines.hpp"

#include <cmath>

#include "multimarker/errors.hpp"
#include "multimarker/special.hpp"
#include "multimarker/stats_util.hpp"

namespace multimarker {

BlrModel fit_blr(const Dataset& data, double prior_scale) {
  if (!data.has_dose()) throw UsageError("fit_blr requires intervention data with doses");
  if (!(prior_scale > 0.0)) throw ParameterError("fit_blr: prior_scale must be positive");
  const Eigen::Index n = data.n();
  const Eigen::Index P = data.P();

  Eigen::MatrixXd X(n, P + 1);
  X.col(0).setOnes();
  X.rightCols(P) = data.Y;
  const Eigen::VectorXd& y = *data.dose;

  BlrModel model;
  model.prior_scale = prior_scale;
  model.n = n;
  model.rank_warning = (n <= P + 1);

  const Eigen::MatrixXd prec =
      X.transpose() * X + Eigen::MatrixXd::Identity(P + 1, P + 1) / prior_scale;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(prec);
  model.coef_shape = ldlt.solve(Eigen::MatrixXd::Identity(P + 1, P + 1));
  model.coef_mean = ldlt.solve(X.transpose() * y);
  model.a_n = 1.0 + 0.5 * static_cast<double>(n);
  model.b_n = 1.0 + 0.5 * (y.squaredNorm() - model.coef_mean.dot(X.transpose() * y));
  if (!(model.b_n > 0.0)) model.b_n = 1e-12;
  return model;
}

std::vector<IntervalPrediction> predict_blr(const BlrModel& model, const Eigen::MatrixXd& y_star) {
  if (y_star.cols() + 1 != model.coef_mean.size()) {
    throw ParameterError("predict_blr: biomarker count differs from the fitted model");
  }
  const double df = 2.0 * model.a_n;
  const double t975 = student_t_quantile(0.975, df);
  std::vector<IntervalPrediction> out;
  out.reserve(static_cast<std::size_t>(y_star.rows()));
  for (Eigen::Index j = 0; j < y_star.rows(); ++j) {
    Eigen::VectorXd x(model.coef_mean.size());
    x(0) = 1.0;
    x.tail(y_star.cols()) = y_star.row(j).transpose();
    const double centre = x.dot(model.coef_mean);
    const double spread2 = (model.b_n / model.a_n) * (1.0 + x.dot(model.coef_shape * x));
    const double spread = std::sqrt(std::max(spread2, 0.0));
    out.push_back({centre, centre - t975 * spread, centre + t975 * spread});
  }
  return out;
}

namespace {

struct PlsCore {
  Eigen::MatrixXd weights, loadings, scores;
  Eigen::VectorXd y_loading;
  Eigen::VectorXd coef;
};

// NIPALS with a univariate response on pre-standardized predictors.
PlsCore nipals(const Eigen::MatrixXd& X0, const Eigen::VectorXd& y0, int K) {
  const Eigen::Index n = X0.rows();
  const Eigen::Index P = X0.cols();
  PlsCore core;
  core.weights.resize(P, K);
  core.loadings.resize(P, K);
  core.scores.resize(n, K);
  core.y_loading.resize(K);

  Eigen::MatrixXd E = X0;
  Eigen::VectorXd f = y0;
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd w = E.transpose() * f;
    const double wn = w.norm();
    if (!(wn > 1e-14)) {
      // Residual carries no further covariance with the response.
      core.weights.col(k).setZero();
      core.loadings.col(k).setZero();
      core.scores.col(k).setZero();
      core.y_loading(k) = 0.0;
      continue;
    }
    w /= wn;
    const Eigen::VectorXd t = E * w;
    const double tt = t.squaredNorm();
    const Eigen::VectorXd p = (tt > 0.0) ? Eigen::VectorXd(E.transpose() * t / tt)
                                         : Eigen::VectorXd(Eigen::VectorXd::Zero(P));
    const double q = (tt > 0.0) ? f.dot(t) / tt : 0.0;
    core.weights.col(k) = w;
    core.loadings.col(k) = p;
    core.scores.col(k) = t;
    core.y_loading(k) = q;
    E -= t * p.transpose();
    f -= q * t;
  }

  // Composite coefficients: b = W (P^T W)^-1 q.
  const Eigen::MatrixXd PtW = core.loadings.transpose() * core.weights;
  core.coef = core.weights * PtW.colPivHouseholderQr().solve(core.y_loading);
  return core;
}

void standardize(const Eigen::MatrixXd& Y, Eigen::VectorXd& mean, Eigen::VectorXd& sd,
                 Eigen::MatrixXd& out) {
  const Eigen::Index n = Y.rows();
  const Eigen::Index P = Y.cols();
  mean.resize(P);
  sd.resize(P);
  out.resize(n, P);
  for (Eigen::Index p = 0; p < P; ++p) {
    mean(p) = Y.col(p).mean();
    const double ss = (Y.col(p).array() - mean(p)).square().sum();
    sd(p) = (n > 1) ? std::sqrt(ss / static_cast<double>(n - 1)) : 1.0;
    if (!(sd(p) > 0.0)) sd(p) = 1.0;
    out.col(p) = (Y.col(p).array() - mean(p)) / sd(p);
  }
}

}  // namespace

PlsModel fit_pls(const Dataset& data, int n_components) {
  if (!data.has_dose()) throw UsageError("fit_pls requires intervention data with doses");
  if (n_components < 1 || n_components > data.P()) {
    throw ParameterError("fit_pls: n_components must lie in 1..P");
  }
  PlsModel model;
  model.n_components = n_components;

  Eigen::MatrixXd X0;
  standardize(data.Y, model.x_mean, model.x_sd, X0);
  model.y_mean = data.dose->mean();
  const Eigen::VectorXd y0 = data.dose->array() - model.y_mean;

  PlsCore core = nipals(X0, y0, n_components);
  model.weights = core.weights;
  model.loadings = core.loadings;
  model.y_loading = core.y_loading;
  model.scores = core.scores;
  model.coef = core.coef;

  // Fold-resampled models for the prediction-spread intervals.
  const Eigen::Index n = data.n();
  const int n_folds = static_cast<int>(std::min<Eigen::Index>(10, n));
  for (int f = 0; f < n_folds; ++f) {
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<int>(i % n_folds) != f) keep.push_back(i);
    }
    if (keep.size() < 2) continue;
    Eigen::MatrixXd Yf(static_cast<Eigen::Index>(keep.size()), data.P());
    Eigen::VectorXd yf(static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      Yf.row(static_cast<Eigen::Index>(k)) = data.Y.row(keep[k]);
      yf(static_cast<Eigen::Index>(k)) = (*data.dose)(keep[k]);
    }
    Eigen::VectorXd fm, fs;
    Eigen::MatrixXd Xf;
    standardize(Yf, fm, fs, Xf);
    const double fym = yf.mean();
    const int kf = static_cast<int>(std::min<Eigen::Index>(n_components, Yf.cols()));
    PlsCore cf = nipals(Xf, yf.array() - fym, kf);
    model.fold_coefs.push_back(cf.coef);
    model.fold_x_mean.push_back(fm);
    model.fold_x_sd.push_back(fs);
    model.fold_y_mean.push_back(fym);
  }
  return model;
}

std::vector<IntervalPrediction> predict_pls(const PlsModel& model, const Eigen::MatrixXd& y_star) {
  if (y_star.cols() != model.x_mean.size()) {
    throw ParameterError("predict_pls: biomarker count differs from the fitted model");
  }
  std::vector<IntervalPrediction> out;
  out.reserve(static_cast<std::size_t>(y_star.rows()));
  for (Eigen::Index j = 0; j < y_star.rows(); ++j) {
    Eigen::VectorXd xs(y_star.cols());
    for (Eigen::Index p = 0; p < y_star.cols(); ++p) {
      xs(p) = (y_star(j, p) - model.x_mean(p)) / model.x_sd(p);
    }
    const double point = model.y_mean + xs.dot(model.coef);

    std::vector<double> fold_preds;
    fold_preds.reserve(model.fold_coefs.size());
    for (std::size_t f = 0; f < model.fold_coefs.size(); ++f) {
      Eigen::VectorXd xf(y_star.cols());
      for (Eigen::Index p = 0; p < y_star.cols(); ++p) {
        xf(p) = (y_star(j, p) - model.fold_x_mean[f](p)) / model.fold_x_sd[f](p);
      }
      fold_preds.push_back(model.fold_y_mean[f] + xf.dot(model.fold_coefs[f]));
    }
    IntervalPrediction pred;
    pred.median = point;
    if (fold_preds.size() >= 2) {
      std::sort(fold_preds.begin(), fold_preds.end());
      pred.lo = quantile_sorted(fold_preds, 0.025);
      pred.hi = quantile_sorted(fold_preds, 0.975);
    } else {
      pred.lo = pred.hi = point;
    }
    out.push_back(pred);
  }
  return out;
}

}  // namespace multimarker
