#include "multimarker/predict.hpp"

#include <cmath>
#include <limits>

#include "multimarker/distributions.hpp"
#include "multimarker/errors.hpp"
#include "multimarker/ordinal.hpp"
#include "multimarker/stats_util.hpp"

namespace multimarker {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

// Information (precision) and pull carried by the biomarkers: q = 1/sigma_z2
// and s = mu_z / sigma_z2. Working on this scale keeps the q -> 0 limit
// (uninformative biomarkers) exact.
void biomarker_information(const Eigen::VectorXd& y_star, const ModelState& state, double& q,
                           double& s) {
  q = 0.0;
  s = 0.0;
  for (Eigen::Index p = 0; p < y_star.size(); ++p) {
    q += state.beta(p) * state.beta(p) / state.sigma2(p);
    s += state.beta(p) * (y_star(p) - state.alpha(p)) / state.sigma2(p);
  }
}

Eigen::Index allocate(const Eigen::VectorXd& weights, double z_prev,
                      const Eigen::VectorXd& levels, const Eigen::VectorXd& theta2) {
  Eigen::Index best = 0;
  double best_score = -kInf;
  for (Eigen::Index d = 0; d < levels.size(); ++d) {
    const TruncNormalParams comp{levels(d), theta2(d), 0.0, kInf};
    const double score = std::log(weights(d)) + log_density_truncated_normal(z_prev, comp);
    if (score > best_score) {
      best_score = score;
      best = d;
    }
  }
  return best;
}

}  // namespace

PredictiveMoments predictive_moments(const Eigen::VectorXd& y_star, const ModelState& state) {
  if (y_star.size() != state.beta.size()) {
    throw ParameterError("predictive_moments: biomarker vector length does not match the model");
  }
  double q, s;
  biomarker_information(y_star, state, q, s);
  if (!(q > 0.0)) {
    throw ParameterError("predictive_moments: all scaling coefficients are zero, no information");
  }
  return {s / q, 1.0 / q};
}

PredictiveResult summarize_predictive(const Eigen::VectorXd& z_draws,
                                      const std::vector<int>& c_draws, Eigen::Index D) {
  if (z_draws.size() == 0) throw ParameterError("summarize_predictive: empty draw set");
  PredictiveResult res;
  res.draws = z_draws;
  std::vector<double> sorted(z_draws.data(), z_draws.data() + z_draws.size());
  std::sort(sorted.begin(), sorted.end());
  res.median = quantile_sorted(sorted, 0.5);
  res.ci95 = {quantile_sorted(sorted, 0.025), quantile_sorted(sorted, 0.975)};
  res.component_freq = Eigen::VectorXd::Zero(D);
  for (int c : c_draws) res.component_freq(c) += 1.0;
  if (!c_draws.empty()) res.component_freq /= static_cast<double>(c_draws.size());
  return res;
}

std::vector<PredictiveResult> sample_predictive(const Eigen::MatrixXd& y_star_batch,
                                                const PosteriorChain& chain, RngStream& rng) {
  if (chain.draws.empty()) throw UsageError("sample_predictive: chain holds no draws");
  if (y_star_batch.cols() != chain.P) {
    throw MismatchError("sample_predictive: biomarker count differs from the fitted chain");
  }
  const Eigen::Index n_star = y_star_batch.rows();
  const Eigen::Index D = chain.D;
  const std::size_t T = chain.draws.size();

  std::vector<PredictiveResult> results;
  results.reserve(static_cast<std::size_t>(n_star));

  for (Eigen::Index j = 0; j < n_star; ++j) {
    RngStream obs_rng = rng.substream(static_cast<std::uint64_t>(j));
    const Eigen::VectorXd y = y_star_batch.row(j).transpose();

    Eigen::VectorXd z_draws(static_cast<Eigen::Index>(T));
    std::vector<int> c_draws(T);

    // First allocation is evaluated at the weight-averaged food quantity.
    double z_prev;
    {
      const ModelState& st0 = chain.draws.front();
      const Eigen::VectorXd w0 = component_weights_from_lp(st0.gamma, st0.eta.dot(y), D);
      z_prev = w0.dot(chain.levels);
    }

    for (std::size_t t = 0; t < T; ++t) {
      const ModelState& st = chain.draws[t];
      const Eigen::VectorXd w = component_weights_from_lp(st.gamma, st.eta.dot(y), D);
      const Eigen::Index d = allocate(w, z_prev, chain.levels, st.theta2);

      double q, s;
      biomarker_information(y, st, q, s);
      const double prec = 1.0 / st.theta2(d) + q;
      const double var_star = 1.0 / prec;
      const double mean_star = var_star * (chain.levels(d) / st.theta2(d) + s);
      const double z = sample_truncated_normal({mean_star, var_star, 0.0, kInf}, obs_rng);

      z_draws(static_cast<Eigen::Index>(t)) = z;
      c_draws[t] = static_cast<int>(d);
      z_prev = z;
    }
    results.push_back(summarize_predictive(z_draws, c_draws, D));
  }
  return results;
}

std::vector<PredictiveResult> sample_predictive_augmented(const Dataset& train,
                                                          const Hyperparameters& hyp,
                                                          const SamplerConfig& cfg,
                                                          const Eigen::MatrixXd& y_star_batch) {
  if (y_star_batch.cols() != train.P()) {
    throw MismatchError("sample_predictive_augmented: biomarker count differs from training data");
  }
  const Eigen::Index n = train.n();
  const Eigen::Index n_star = y_star_batch.rows();
  const Eigen::Index D = train.D();

  Dataset combined;
  combined.Y.resize(n + n_star, train.P());
  combined.Y.topRows(n) = train.Y;
  combined.Y.bottomRows(n_star) = y_star_batch;
  combined.levels = train.levels;
  // No doses: the appended rows are latent; the sweep never reads doses.

  RngStream rng(cfg.seed);
  ModelState init = initialize_state(train, hyp, rng, cfg.theta_init_from_dose_variances);

  // Extend the latent state to cover the appended rows, seeding each new
  // intake at its weight-averaged food quantity.
  ModelState st = init;
  st.z.conservativeResize(n + n_star);
  st.c.resize(static_cast<std::size_t>(n + n_star));
  st.pi.conservativeResize(n + n_star, D);
  for (Eigen::Index j = 0; j < n_star; ++j) {
    const Eigen::VectorXd y = y_star_batch.row(j).transpose();
    const Eigen::VectorXd w = component_weights_from_lp(st.gamma, st.eta.dot(y), D);
    const double z0 = w.dot(train.levels);
    st.pi.row(n + j) = w.transpose();
    st.z(n + j) = z0;
    Eigen::Index best = 0;
    double best_score = -kInf;
    for (Eigen::Index d = 0; d < D; ++d) {
      const TruncNormalParams comp{train.levels(d), st.theta2(d), 0.0, kInf};
      const double score = std::log(w(d)) + log_density_truncated_normal(z0, comp);
      if (score > best_score) {
        best_score = score;
        best = d;
      }
    }
    st.c[static_cast<std::size_t>(n + j)] = static_cast<int>(best);
  }

  PosteriorChain chain = run_chain_from(std::move(st), combined, hyp, cfg);

  std::vector<PredictiveResult> results;
  results.reserve(static_cast<std::size_t>(n_star));
  const std::size_t T = chain.draws.size();
  for (Eigen::Index j = 0; j < n_star; ++j) {
    Eigen::VectorXd z_draws(static_cast<Eigen::Index>(T));
    std::vector<int> c_draws(T);
    for (std::size_t t = 0; t < T; ++t) {
      z_draws(static_cast<Eigen::Index>(t)) = chain.draws[t].z(n + j);
      c_draws[t] = chain.draws[t].c[static_cast<std::size_t>(n + j)];
    }
    results.push_back(summarize_predictive(z_draws, c_draws, D));
  }
  return results;
}

}  // namespace multimarker
