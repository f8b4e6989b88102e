#include "multimarker/ordinal.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "multimarker/errors.hpp"

namespace multimarker {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kCoefCap = 50.0;
}  // namespace

double cauchit_cdf(double t) { return (std::atan(0.5 * t) + 0.5 * kPi) / kPi; }

double cauchit_pdf(double t) { return 2.0 / (kPi * (4.0 + t * t)); }

double cauchit_cumulative(double gamma_d, const Eigen::VectorXd& eta, const Eigen::VectorXd& y) {
  if (eta.size() != y.size()) {
    std::ostringstream os;
    os << "cauchit_cumulative: eta has length " << eta.size() << " but y has length " << y.size();
    throw ParameterError(os.str());
  }
  return cauchit_cdf(gamma_d + eta.dot(y));
}

Eigen::VectorXd component_weights_from_lp(const Eigen::VectorXd& gamma, double s, Eigen::Index D) {
  if (gamma.size() != D - 1) {
    throw ParameterError("component weights need D-1 cutpoints");
  }
  for (Eigen::Index d = 0; d + 1 < gamma.size(); ++d) {
    if (!(gamma(d) < gamma(d + 1))) {
      throw ParameterError("cutpoints must be strictly increasing");
    }
  }
  Eigen::VectorXd w(D);
  double prev = 0.0;
  for (Eigen::Index d = 0; d < D - 1; ++d) {
    const double cur = cauchit_cdf(gamma(d) + s);
    w(d) = cur - prev;
    prev = cur;
  }
  w(D - 1) = 1.0 - prev;
  return w;
}

Eigen::VectorXd component_weights(const CauchitModel& model, const Eigen::VectorXd& y,
                                  Eigen::Index D) {
  if (model.eta.size() != y.size()) {
    throw ParameterError("component_weights: biomarker vector length does not match eta");
  }
  return component_weights_from_lp(model.gamma, model.eta.dot(y), D);
}

double log_component_weight(const Eigen::VectorXd& gamma, double s, Eigen::Index c,
                            Eigen::Index D) {
  const double upper = (c == D - 1) ? 1.0 : cauchit_cdf(gamma(c) + s);
  const double lower = (c == 0) ? 0.0 : cauchit_cdf(gamma(c - 1) + s);
  const double w = upper - lower;
  if (!(w > 0.0)) return -std::numeric_limits<double>::infinity();
  return std::log(w);
}

namespace {

// Unconstrained parameterization: the first cutpoint plus log-gaps, followed
// by the P regression coefficients.
struct OrdinalObjective {
  const std::vector<int>& labels;
  const Eigen::MatrixXd& Y;  // standardized
  Eigen::Index D;

  Eigen::Index n_cut() const { return D - 1; }
  Eigen::Index dim() const { return n_cut() + Y.cols(); }

  Eigen::VectorXd cutpoints(const Eigen::VectorXd& phi) const {
    Eigen::VectorXd g(n_cut());
    g(0) = phi(0);
    for (Eigen::Index k = 1; k < n_cut(); ++k) g(k) = g(k - 1) + std::exp(phi(k));
    return g;
  }

  // Negative log-likelihood and its gradient in phi-space.
  double eval(const Eigen::VectorXd& phi, Eigen::VectorXd& grad) const {
    const Eigen::Index n = Y.rows();
    const Eigen::Index P = Y.cols();
    const Eigen::VectorXd g = cutpoints(phi);
    const Eigen::VectorXd eta = phi.tail(P);
    Eigen::VectorXd grad_gamma = Eigen::VectorXd::Zero(n_cut());
    Eigen::VectorXd grad_eta = Eigen::VectorXd::Zero(P);
    double nll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = labels[static_cast<std::size_t>(i)];
      const double s = eta.dot(Y.row(i));
      const double fu = (c == D - 1) ? 1.0 : cauchit_cdf(g(c) + s);
      const double fl = (c == 0) ? 0.0 : cauchit_cdf(g(c - 1) + s);
      const double w = std::max(fu - fl, 1e-300);
      nll -= std::log(w);
      const double du = (c == D - 1) ? 0.0 : cauchit_pdf(g(c) + s);
      const double dl = (c == 0) ? 0.0 : cauchit_pdf(g(c - 1) + s);
      if (c < D - 1) grad_gamma(c) -= du / w;
      if (c > 0) grad_gamma(c - 1) += dl / w;
      const double ds = (du - dl) / w;
      grad_eta -= ds * Y.row(i).transpose();
    }
    // Chain rule onto (first cutpoint, log-gaps).
    grad.resize(dim());
    grad(0) = grad_gamma.sum();
    for (Eigen::Index k = 1; k < n_cut(); ++k) {
      grad(k) = grad_gamma.tail(n_cut() - k).sum() * std::exp(phi(k));
    }
    grad.tail(P) = grad_eta;
    return nll;
  }

  bool within_cap(const Eigen::VectorXd& phi) const {
    const Eigen::VectorXd g = cutpoints(phi);
    if (g.cwiseAbs().maxCoeff() > kCoefCap) return false;
    if (phi.tail(Y.cols()).cwiseAbs().maxCoeff() > kCoefCap) return false;
    return true;
  }
};

}  // namespace

OrdinalFit fit_ordinal_cauchit_mle(const std::vector<int>& labels, const Eigen::MatrixXd& Y,
                                   Eigen::Index D) {
  const Eigen::Index n = Y.rows();
  const Eigen::Index P = Y.cols();
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw DataError("fit_ordinal_cauchit_mle: label count does not match Y rows");
  }
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(D), 0);
  for (int c : labels) {
    if (c < 0 || c >= D) throw DataError("fit_ordinal_cauchit_mle: label outside 0..D-1");
    ++counts[static_cast<std::size_t>(c)];
  }
  for (Eigen::Index d = 0; d < D; ++d) {
    if (counts[static_cast<std::size_t>(d)] == 0) {
      std::ostringstream os;
      os << "fit_ordinal_cauchit_mle: class " << (d + 1) << " has no observations";
      throw DataError(os.str());
    }
  }

  // Standardize columns; constant columns carry no information and are left
  // with unit scale.
  Eigen::VectorXd mean(P), sd(P);
  Eigen::MatrixXd Ystd(n, P);
  for (Eigen::Index p = 0; p < P; ++p) {
    mean(p) = Y.col(p).mean();
    const double ss = (Y.col(p).array() - mean(p)).square().sum();
    sd(p) = (n > 1) ? std::sqrt(ss / static_cast<double>(n - 1)) : 1.0;
    if (!(sd(p) > 0.0)) sd(p) = 1.0;
    Ystd.col(p) = (Y.col(p).array() - mean(p)) / sd(p);
  }

  OrdinalObjective obj{labels, Ystd, D};
  const Eigen::Index dim = obj.dim();

  // Start at the empirical cumulative proportions mapped through the inverse
  // link, with zero regression coefficients.
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(dim);
  {
    double cum = 0.0;
    Eigen::VectorXd g0(D - 1);
    for (Eigen::Index d = 0; d < D - 1; ++d) {
      cum += static_cast<double>(counts[static_cast<std::size_t>(d)]);
      double q = cum / static_cast<double>(n);
      q = std::min(0.95, std::max(0.05, q));
      g0(d) = 2.0 * std::tan(kPi * (q - 0.5));
      if (d > 0 && g0(d) <= g0(d - 1)) g0(d) = g0(d - 1) + 0.1;
    }
    phi(0) = g0(0);
    for (Eigen::Index k = 1; k < D - 1; ++k) phi(k) = std::log(g0(k) - g0(k - 1));
  }

  Eigen::VectorXd grad(dim);
  double f = obj.eval(phi, grad);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(dim, dim);  // inverse Hessian estimate
  bool converged = false;
  int iter = 0;
  const int max_iter = 500;
  const double tol = 1e-6;

  double best_f = f;
  Eigen::VectorXd best_phi = phi;

  for (iter = 0; iter < max_iter; ++iter) {
    if (grad.cwiseAbs().maxCoeff() < tol) {
      converged = true;
      break;
    }
    Eigen::VectorXd dir = -(H * grad);
    if (dir.dot(grad) >= 0.0) {
      H.setIdentity();
      dir = -grad;
    }
    // Armijo backtracking; extra halving keeps coefficients inside the cap.
    double step = 1.0;
    Eigen::VectorXd phi_new, grad_new(dim);
    double f_new = f;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      phi_new = phi + step * dir;
      if (!obj.within_cap(phi_new)) {
        step *= 0.5;
        continue;
      }
      f_new = obj.eval(phi_new, grad_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * dir.dot(grad)) {
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
    const Eigen::VectorXd s = phi_new - phi;
    const Eigen::VectorXd y = grad_new - grad;
    phi = phi_new;
    f = f_new;
    grad = grad_new;
    if (f < best_f) {
      best_f = f;
      best_phi = phi;
    }
    const double sy = s.dot(y);
    if (sy > 1e-12) {
      const Eigen::VectorXd Hy = H * y;
      const double yHy = y.dot(Hy);
      H += ((sy + yHy) / (sy * sy)) * (s * s.transpose()) -
           (Hy * s.transpose() + s * Hy.transpose()) / sy;
    }
  }

  const Eigen::VectorXd phi_final = converged ? phi : best_phi;
  const Eigen::VectorXd g_std = obj.cutpoints(phi_final);
  const Eigen::VectorXd eta_std = phi_final.tail(P);

  // Map standardized-scale coefficients back to the original units.
  CauchitModel model;
  model.eta.resize(P);
  double offset = 0.0;
  for (Eigen::Index p = 0; p < P; ++p) {
    model.eta(p) = eta_std(p) / sd(p);
    offset += eta_std(p) * mean(p) / sd(p);
  }
  model.gamma = g_std.array() - offset;

  OrdinalFit fit;
  fit.model = std::move(model);
  fit.converged = converged;
  fit.log_likelihood = -best_f;
  fit.iterations = iter;
  return fit;
}

}  // namespace multimarker
