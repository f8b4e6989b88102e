#include "multimarker/state.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include "multimarker/distributions.hpp"
#include "multimarker/errors.hpp"

namespace multimarker {

void ModelState::check_invariants(Eigen::Index n, Eigen::Index P, Eigen::Index D) const {
  auto fail = [](const std::string& what) { throw ParameterError("ModelState invariant: " + what); };
  if (alpha.size() != P || beta.size() != P || sigma2.size() != P || eta.size() != P) {
    fail("P-indexed field has wrong length");
  }
  if (theta2.size() != D || gamma.size() != D - 1) fail("D-indexed field has wrong length");
  if (z.size() != n || static_cast<Eigen::Index>(c.size()) != n || pi.rows() != n || pi.cols() != D) {
    fail("n-indexed field has wrong length");
  }
  for (Eigen::Index p = 0; p < P; ++p) {
    if (!(alpha(p) >= 0.0)) fail("alpha must be nonnegative");
    if (!(beta(p) > 0.0)) fail("beta must be positive");
    if (!(sigma2(p) > 0.0)) fail("sigma2 must be positive");
  }
  if (!(mu_alpha >= 0.0) || !(mu_beta >= 0.0)) fail("mu_alpha/mu_beta must be nonnegative");
  if (!(sigma_beta2 > 0.0)) fail("sigma_beta2 must be positive");
  for (Eigen::Index d = 0; d < D; ++d) {
    if (!(theta2(d) > 0.0)) fail("theta2 must be positive");
  }
  for (Eigen::Index d = 0; d + 1 < gamma.size(); ++d) {
    if (!(gamma(d) < gamma(d + 1))) fail("gamma must be strictly increasing");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(z(i) >= 0.0)) fail("z must be nonnegative");
    if (c[static_cast<std::size_t>(i)] < 0 || c[static_cast<std::size_t>(i)] >= D) {
      fail("allocation outside 1..D");
    }
    const double row_sum = pi.row(i).sum();
    if (std::fabs(row_sum - 1.0) > 1e-8) fail("pi row does not sum to 1");
    if ((pi.row(i).array() < 0.0).any()) fail("pi entries must be nonnegative");
  }
}

void SamplerConfig::validate() const {
  if (n_iter <= 0 || n_burn < 0 || n_burn >= n_iter) {
    throw ParameterError("sampler config requires 0 <= n_burn < n_iter");
  }
  if (thin <= 0) throw ParameterError("thin must be positive");
  if (!(mh_step_gamma > 0.0) || !(mh_step_eta > 0.0)) {
    throw ParameterError("MH step sizes must be positive");
  }
  if (adapt_window <= 0) throw ParameterError("adapt_window must be positive");
}

ModelState initialize_state(const Dataset& data, const Hyperparameters& hyp, RngStream& rng,
                            bool theta_from_dose_variances) {
  if (!data.has_dose()) throw UsageError("initialize_state requires intervention data with doses");
  const Eigen::Index n = data.n();
  const Eigen::Index P = data.P();
  const Eigen::Index D = data.D();

  // Per-dose biomarker means; only levels with observations enter the fit.
  std::vector<Eigen::Index> dose_count(static_cast<std::size_t>(D), 0);
  Eigen::MatrixXd dose_mean = Eigen::MatrixXd::Zero(D, P);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index d = data.level_index(i);
    ++dose_count[static_cast<std::size_t>(d)];
    dose_mean.row(d) += data.Y.row(i);
  }
  std::vector<Eigen::Index> observed;
  for (Eigen::Index d = 0; d < D; ++d) {
    if (dose_count[static_cast<std::size_t>(d)] > 0) {
      dose_mean.row(d) /= static_cast<double>(dose_count[static_cast<std::size_t>(d)]);
      observed.push_back(d);
    }
  }
  if (observed.size() < 2) {
    throw DataError("initialize_state: fewer than 2 distinct doses observed");
  }

  ModelState st;
  st.alpha.resize(P);
  st.beta.resize(P);
  st.sigma2.resize(P);

  // alpha_p / beta_p: least squares of the per-dose means on the dose values;
  // the D points over-determine the two unknowns.
  {
    double x_mean = 0.0;
    for (Eigen::Index d : observed) x_mean += data.levels(d);
    x_mean /= static_cast<double>(observed.size());
    double sxx = 0.0;
    for (Eigen::Index d : observed) {
      const double xc = data.levels(d) - x_mean;
      sxx += xc * xc;
    }
    for (Eigen::Index p = 0; p < P; ++p) {
      double sxy = 0.0, y_mean = 0.0;
      for (Eigen::Index d : observed) {
        sxy += (data.levels(d) - x_mean) * dose_mean(d, p);
        y_mean += dose_mean(d, p);
      }
      y_mean /= static_cast<double>(observed.size());
      const double slope = sxy / sxx;
      const double intercept = y_mean - slope * x_mean;
      st.alpha(p) = std::max(0.0, intercept);
      st.beta(p) = (slope > 0.0) ? slope : 1e-6;
    }
  }

  // Error variances: column variance minus the latent-intake contribution,
  // floored at a small fraction of the column variance.
  for (Eigen::Index p = 0; p < P; ++p) {
    const double m = data.Y.col(p).mean();
    const double var =
        (data.Y.col(p).array() - m).square().sum() / static_cast<double>(std::max<Eigen::Index>(1, n - 1));
    const double adj = var - st.beta(p) * st.beta(p) / static_cast<double>(D);
    const double floor = std::max(1e-4 * var, 1e-12);
    st.sigma2(p) = std::max(adj, floor);
  }

  st.mu_alpha = hyp.m_alpha;
  st.mu_beta = hyp.m_beta;
  st.sigma_beta2 = (hyp.nu_beta1 > 1.0) ? hyp.nu_beta2 / (hyp.nu_beta1 - 1.0) : hyp.nu_beta2;

  // Component variances start at 5^2. The dose-variance formula (per-dose
  // biomarker variances propagated back through the prior-mean sigma_beta2)
  // is available behind a flag and clamped to [1, 100^2].
  st.theta2 = Eigen::VectorXd::Constant(D, 25.0);
  if (theta_from_dose_variances) {
    const double sb2 = st.sigma_beta2;
    for (Eigen::Index d = 0; d < D; ++d) {
      if (dose_count[static_cast<std::size_t>(d)] < 2) continue;
      double acc = 0.0;
      for (Eigen::Index p = 0; p < P; ++p) {
        double ssq = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
          if (data.level_index(i) == d) {
            const double dev = data.Y(i, p) - dose_mean(d, p);
            ssq += dev * dev;
          }
        }
        const double vpd = ssq / static_cast<double>(dose_count[static_cast<std::size_t>(d)] - 1);
        acc += (vpd - hyp.sigma_alpha2 - st.sigma2(p)) / sb2;
      }
      st.theta2(d) = std::min(1e4, std::max(1.0, acc / static_cast<double>(P)));
    }
  }

  // Latent intakes around the consumed quantities; allocations at the known
  // dose indices; uniform weight rows.
  st.z.resize(n);
  st.c.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index d = data.level_index(i);
    st.c[static_cast<std::size_t>(i)] = static_cast<int>(d);
    TruncNormalParams p{(*data.dose)(i), st.theta2(d), 0.0,
                        std::numeric_limits<double>::infinity()};
    st.z(i) = sample_truncated_normal(p, rng);
  }
  st.pi = Eigen::MatrixXd::Constant(n, D, 1.0 / static_cast<double>(D));

  st.gamma = hyp.m_gamma;
  st.eta = hyp.m_eta;

  st.check_invariants(n, P, D);
  return st;
}

}  // namespace multimarker
