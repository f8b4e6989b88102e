#include "multimarker/sampler.hpp"

#include <cmath>
#include <limits>

#include "multimarker/distributions.hpp"
#include "multimarker/errors.hpp"
#include "multimarker/ordinal.hpp"

namespace multimarker {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TruncNormalParams alpha_full_conditional(const ModelState& state, const Dataset& data,
                                         const Hyperparameters& hyp, Eigen::Index p) {
  const Eigen::Index n = data.n();
  const double sa2 = hyp.sigma_alpha2;
  const double sp2 = state.sigma2(p);
  double resid_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) resid_sum += data.Y(i, p) - state.beta(p) * state.z(i);
  const double var_star = sp2 * sa2 / (static_cast<double>(n) * sa2 + sp2);
  const double mean_star = var_star * (resid_sum / sp2 + state.mu_alpha / sa2);
  return {mean_star, var_star, 0.0, kInf};
}

TruncNormalParams beta_full_conditional(const ModelState& state, const Dataset& data,
                                        const Hyperparameters& hyp, Eigen::Index p) {
  (void)hyp;
  const Eigen::Index n = data.n();
  const double sb2 = state.sigma_beta2;
  const double sp2 = state.sigma2(p);
  const double sum_z2 = state.z.squaredNorm();
  double cross = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) cross += state.z(i) * (data.Y(i, p) - state.alpha(p));
  const double var_star = sp2 * sb2 / (sb2 * sum_z2 + sp2);
  const double mean_star = var_star * (cross / sp2 + state.mu_beta / sb2);
  return {mean_star, var_star, 0.0, kInf};
}

InvGammaParams sigma_p_full_conditional(const ModelState& state, const Dataset& data,
                                        const Hyperparameters& hyp, Eigen::Index p) {
  const Eigen::Index n = data.n();
  double rss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = data.Y(i, p) - state.alpha(p) - state.beta(p) * state.z(i);
    rss += r * r;
  }
  return {0.5 * static_cast<double>(n) + hyp.nu_P1, 0.5 * rss + hyp.nu_P2};
}

TruncNormalParams mu_alpha_full_conditional(const ModelState& state, const Hyperparameters& hyp) {
  const double P = static_cast<double>(state.alpha.size());
  const double var_star = hyp.tau_alpha * hyp.sigma_alpha2 / (hyp.tau_alpha * P + 1.0);
  const double mean_star =
      (hyp.tau_alpha * state.alpha.sum() + hyp.m_alpha) / (hyp.tau_alpha * P + 1.0);
  return {mean_star, var_star, 0.0, kInf};
}

TruncNormalParams mu_beta_full_conditional(const ModelState& state, const Hyperparameters& hyp) {
  const double P = static_cast<double>(state.beta.size());
  const double var_star = hyp.tau_beta * state.sigma_beta2 / (hyp.tau_beta * P + 1.0);
  const double mean_star =
      (hyp.tau_beta * state.beta.sum() + hyp.m_beta) / (hyp.tau_beta * P + 1.0);
  return {mean_star, var_star, 0.0, kInf};
}

InvGammaParams sigma_beta2_full_conditional(const ModelState& state, const Hyperparameters& hyp) {
  const double P = static_cast<double>(state.beta.size());
  const double shape = 0.5 * (P + 1.0 + 2.0 * hyp.nu_beta1);
  const double dev = (state.beta.array() - state.mu_beta).square().sum();
  const double hyper_dev = (state.mu_beta - hyp.m_beta) * (state.mu_beta - hyp.m_beta);
  const double scale = hyp.nu_beta2 + (hyp.tau_beta * dev + hyper_dev) / (2.0 * hyp.tau_beta);
  return {shape, scale};
}

TruncNormalParams z_full_conditional(const ModelState& state, const Dataset& data,
                                     Eigen::Index i) {
  const Eigen::Index d = state.c[static_cast<std::size_t>(i)];
  double info = 0.0;
  double pull = 0.0;
  for (Eigen::Index p = 0; p < data.P(); ++p) {
    info += state.beta(p) * state.beta(p) / state.sigma2(p);
    pull += state.beta(p) * (data.Y(i, p) - state.alpha(p)) / state.sigma2(p);
  }
  const double prec = info + 1.0 / state.theta2(d);
  const double var_star = 1.0 / prec;
  const double mean_star = var_star * (pull + data.levels(d) / state.theta2(d));
  return {mean_star, var_star, 0.0, kInf};
}

InvGammaParams theta2_full_conditional(const ModelState& state, const Dataset& data,
                                       const Hyperparameters& hyp, Eigen::Index d) {
  double ss = 0.0;
  Eigen::Index n_d = 0;
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    if (state.c[static_cast<std::size_t>(i)] == d) {
      const double dev = state.z(i) - data.levels(d);
      ss += dev * dev;
      ++n_d;
    }
  }
  return {0.5 * static_cast<double>(n_d) + hyp.nu_z1(d), hyp.nu_z2(d) + 0.5 * ss};
}

ModelState update_alpha_beta(ModelState state, const Dataset& data, const Hyperparameters& hyp,
                             RngStream& rng) {
  for (Eigen::Index p = 0; p < data.P(); ++p) {
    state.alpha(p) = sample_truncated_normal(alpha_full_conditional(state, data, hyp, p), rng);
    // beta_p conditions on the freshly drawn alpha_p.
    double draw = sample_truncated_normal(beta_full_conditional(state, data, hyp, p), rng);
    if (!(draw > 0.0)) draw = std::numeric_limits<double>::min();
    state.beta(p) = draw;
  }
  return state;
}

ModelState update_sigma_p(ModelState state, const Dataset& data, const Hyperparameters& hyp,
                          RngStream& rng) {
  for (Eigen::Index p = 0; p < data.P(); ++p) {
    state.sigma2(p) = sample_inverse_gamma(sigma_p_full_conditional(state, data, hyp, p), rng);
  }
  return state;
}

ModelState update_nuisance(ModelState state, const Hyperparameters& hyp, RngStream& rng) {
  state.mu_alpha = sample_truncated_normal(mu_alpha_full_conditional(state, hyp), rng);
  state.mu_beta = sample_truncated_normal(mu_beta_full_conditional(state, hyp), rng);
  state.sigma_beta2 = sample_inverse_gamma(sigma_beta2_full_conditional(state, hyp), rng);
  return state;
}

namespace {

// Ordinal log likelihood restricted to observations whose current allocation
// touches cutpoint k (only pi_{i,k} and pi_{i,k+1} involve gamma_k).
double gamma_site_loglik(const ModelState& st, const Eigen::VectorXd& lp, Eigen::Index k,
                         Eigen::Index D) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    const int c = st.c[static_cast<std::size_t>(i)];
    if (c == k || c == k + 1) {
      ll += log_component_weight(st.gamma, lp(i), c, D);
      if (ll == -kInf) return -kInf;
    }
  }
  return ll;
}

double full_ordinal_loglik(const ModelState& st, const Eigen::VectorXd& lp, Eigen::Index D) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < lp.size(); ++i) {
    ll += log_component_weight(st.gamma, lp(i), st.c[static_cast<std::size_t>(i)], D);
    if (ll == -kInf) return -kInf;
  }
  return ll;
}

}  // namespace

std::pair<ModelState, MhDiagnostics> update_gamma_eta(ModelState state, const Dataset& data,
                                                      const Hyperparameters& hyp, RngStream& rng,
                                                      double step_gamma, double step_eta) {
  const Eigen::Index n = data.n();
  const Eigen::Index D = data.D();
  const Eigen::Index P = data.P();
  MhDiagnostics diag;
  diag.step_gamma = step_gamma;
  diag.step_eta = step_eta;

  Eigen::VectorXd lp = data.Y * state.eta;  // linear predictors eta . y_i

  // Cutpoints, one at a time. Prior: truncated normal centred at the seeding
  // mean with variance kappa, truncated at the neighbouring seeding means;
  // proposals outside those bounds or breaking the current ordering are
  // rejected outright.
  for (Eigen::Index k = 0; k < D - 1; ++k) {
    ++diag.proposed_gamma;
    const double cur = state.gamma(k);
    const double prop = cur + step_gamma * sample_normal(rng);
    const double lo = (k == 0) ? -kInf : hyp.m_gamma(k - 1);
    const double hi = (k == D - 2) ? kInf : hyp.m_gamma(k + 1);
    if (prop <= lo || prop >= hi) continue;
    if (k > 0 && prop <= state.gamma(k - 1)) continue;
    if (k + 1 < D - 1 && prop >= state.gamma(k + 1)) continue;

    const double ll_cur = gamma_site_loglik(state, lp, k, D);
    state.gamma(k) = prop;
    const double ll_prop = gamma_site_loglik(state, lp, k, D);
    state.gamma(k) = cur;
    if (ll_prop == -kInf) continue;

    const double m = hyp.m_gamma(k);
    const double log_prior_delta =
        (-(prop - m) * (prop - m) + (cur - m) * (cur - m)) / (2.0 * hyp.kappa);
    const double log_ratio = ll_prop - ll_cur + log_prior_delta;
    if (std::log(rng.uniform()) < log_ratio) {
      state.gamma(k) = prop;
      ++diag.accepted_gamma;
    }
  }

  // Biomarker coefficients; a change to eta_p shifts every linear predictor.
  double ll_cur = full_ordinal_loglik(state, lp, D);
  for (Eigen::Index p = 0; p < P; ++p) {
    ++diag.proposed_eta;
    const double cur = state.eta(p);
    const double prop = cur + step_eta * sample_normal(rng);
    const Eigen::VectorXd lp_prop = lp + (prop - cur) * data.Y.col(p);
    const double ll_prop = full_ordinal_loglik(state, lp_prop, D);
    if (ll_prop == -kInf) continue;
    const double m = hyp.m_eta(p);
    const double log_prior_delta =
        (-(prop - m) * (prop - m) + (cur - m) * (cur - m)) / (2.0 * hyp.kappa);
    const double log_ratio = ll_prop - ll_cur + log_prior_delta;
    if (std::log(rng.uniform()) < log_ratio) {
      state.eta(p) = prop;
      lp = lp_prop;
      ll_cur = ll_prop;
      ++diag.accepted_eta;
    }
  }

  diag.acceptance_gamma =
      diag.proposed_gamma > 0 ? static_cast<double>(diag.accepted_gamma) / diag.proposed_gamma : 1.0;
  diag.acceptance_eta =
      diag.proposed_eta > 0 ? static_cast<double>(diag.accepted_eta) / diag.proposed_eta : 1.0;
  (void)n;
  return {std::move(state), diag};
}

ModelState update_weights_allocations(ModelState state, const Dataset& data, RngStream& rng,
                                      bool stochastic) {
  const Eigen::Index n = data.n();
  const Eigen::Index D = data.D();
  const Eigen::VectorXd lp = data.Y * state.eta;
  Eigen::VectorXd score(D);
  for (Eigen::Index i = 0; i < n; ++i) {
    state.pi.row(i) = component_weights_from_lp(state.gamma, lp(i), D).transpose();
    for (Eigen::Index d = 0; d < D; ++d) {
      const TruncNormalParams comp{data.levels(d), state.theta2(d), 0.0, kInf};
      score(d) = std::log(state.pi(i, d)) + log_density_truncated_normal(state.z(i), comp);
    }
    if (stochastic) {
      const double mx = score.maxCoeff();
      Eigen::VectorXd w = (score.array() - mx).exp();
      state.c[static_cast<std::size_t>(i)] =
          static_cast<int>(sample_categorical(std::span<const double>(w.data(), static_cast<std::size_t>(D)), rng));
    } else {
      Eigen::Index best = 0;
      for (Eigen::Index d = 1; d < D; ++d) {
        if (score(d) > score(best)) best = d;  // ties stay with the smaller index
      }
      state.c[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
  }
  return state;
}

ModelState update_latent(ModelState state, const Dataset& data, const Hyperparameters& hyp,
                         RngStream& rng) {
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    state.z(i) = sample_truncated_normal(z_full_conditional(state, data, i), rng);
  }
  // Component variances use the freshly drawn intakes; an empty component
  // reduces to its prior.
  for (Eigen::Index d = 0; d < data.D(); ++d) {
    state.theta2(d) = sample_inverse_gamma(theta2_full_conditional(state, data, hyp, d), rng);
  }
  return state;
}

PosteriorChain run_chain(const Dataset& data, const Hyperparameters& hyp,
                         const SamplerConfig& cfg) {
  cfg.validate();
  if (!data.has_dose()) throw UsageError("run_chain requires intervention data with doses");
  hyp.validate(data.P(), data.D());

  RngStream rng(cfg.seed);
  ModelState state = initialize_state(data, hyp, rng, cfg.theta_init_from_dose_variances);
  return run_chain_from(std::move(state), data, hyp, cfg);
}

PosteriorChain run_chain_from(ModelState init, const Dataset& data, const Hyperparameters& hyp,
                              const SamplerConfig& cfg) {
  cfg.validate();
  hyp.validate(data.P(), data.D());
  // Draws consumed so far by initialization differ between entry points;
  // the sweep stream is derived from the seed so runs stay reproducible.
  RngStream rng = RngStream(cfg.seed).substream(0x5eed);
  ModelState state = std::move(init);

  PosteriorChain chain;
  chain.config = cfg;
  chain.dataset_fingerprint = dataset_fingerprint(data);
  chain.levels = data.levels;
  chain.n = data.n();
  chain.P = data.P();
  chain.D = data.D();
  chain.hyp = hyp;
  chain.draws.reserve(static_cast<std::size_t>((cfg.n_iter - cfg.n_burn) / cfg.thin));

  double step_gamma = cfg.mh_step_gamma;
  double step_eta = cfg.mh_step_eta;
  long win_prop_g = 0, win_acc_g = 0, win_prop_e = 0, win_acc_e = 0;
  long post_prop_g = 0, post_acc_g = 0, post_prop_e = 0, post_acc_e = 0;
  int window_index = 0;
  const double target_rate = 0.3;

  for (int t = 1; t <= cfg.n_iter; ++t) {
    state = update_alpha_beta(std::move(state), data, hyp, rng);
    state = update_sigma_p(std::move(state), data, hyp, rng);
    state = update_nuisance(std::move(state), hyp, rng);
    auto [moved, diag] = update_gamma_eta(std::move(state), data, hyp, rng, step_gamma, step_eta);
    state = std::move(moved);
    state = update_weights_allocations(std::move(state), data, rng, cfg.stochastic_allocation);
    state = update_latent(std::move(state), data, hyp, rng);

    if (t <= cfg.n_burn) {
      win_prop_g += diag.proposed_gamma;
      win_acc_g += diag.accepted_gamma;
      win_prop_e += diag.proposed_eta;
      win_acc_e += diag.accepted_eta;
      if (t % cfg.adapt_window == 0) {
        // Robbins-Monro on the log step, frozen after burn-in.
        ++window_index;
        const double gain = 1.0 / std::sqrt(static_cast<double>(window_index));
        if (win_prop_g > 0) {
          const double rate = static_cast<double>(win_acc_g) / win_prop_g;
          step_gamma = std::clamp(step_gamma * std::exp(gain * (rate - target_rate)), 1e-6, 1e3);
        }
        if (win_prop_e > 0) {
          const double rate = static_cast<double>(win_acc_e) / win_prop_e;
          step_eta = std::clamp(step_eta * std::exp(gain * (rate - target_rate)), 1e-6, 1e3);
        }
        win_prop_g = win_acc_g = win_prop_e = win_acc_e = 0;
      }
    } else {
      post_prop_g += diag.proposed_gamma;
      post_acc_g += diag.accepted_gamma;
      post_prop_e += diag.proposed_eta;
      post_acc_e += diag.accepted_eta;
      if ((t - cfg.n_burn) % cfg.thin == 0) chain.draws.push_back(state);
    }
  }

  chain.acceptance_gamma = post_prop_g > 0 ? static_cast<double>(post_acc_g) / post_prop_g : 1.0;
  chain.acceptance_eta = post_prop_e > 0 ? static_cast<double>(post_acc_e) / post_prop_e : 1.0;
  chain.final_step_gamma = step_gamma;
  chain.final_step_eta = step_eta;
  return chain;
}

}  // namespace multimarker
