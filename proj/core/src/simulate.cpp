#include "multimarker/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "multimarker/distributions.hpp"
#include "multimarker/errors.hpp"
#include "multimarker/rng.hpp"

namespace multimarker {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

struct RangeSpec {
  double mu_alpha, mu_beta, sigma_alpha2, sigma_beta2;
  double err_var_small;  // expected sigma_p^2, small-variance biomarkers
  double err_var_large;  // expected sigma_p^2, large-variance biomarkers
};

RangeSpec range_spec(BiomarkerRange r) {
  switch (r) {
    case BiomarkerRange::Small:
      return {1.0, 0.01, 1.0, 0.01, 1.0, 9.0};
    case BiomarkerRange::Medium:
      return {20.0, 0.1, 4.0, 0.1, 9.0, 400.0};
    case BiomarkerRange::Large:
      return {100.0, 1.0, 14.0, 1.0, 225.0, 10000.0};
  }
  throw ParameterError("unknown biomarker range");
}

// Inverse gamma matching a requested mean with finite variance: shape 3,
// scale 2 * mean.
double draw_with_mean(double mean, RngStream& rng) {
  return sample_inverse_gamma({3.0, 2.0 * mean}, rng);
}

// Component means spread over [30, 320] with the requested increment
// pattern, then jittered through zero-truncated normals until ordered.
Eigen::VectorXd draw_levels(int D, Increments inc, RngStream& rng) {
  Eigen::VectorXd mu(D);
  Eigen::VectorXd gaps(D - 1);
  for (int k = 0; k < D - 1; ++k) {
    switch (inc) {
      case Increments::Stable:
        gaps(k) = 1.0;
        break;
      case Increments::Increasing:
        gaps(k) = static_cast<double>(k + 1);
        break;
      case Increments::Decreasing:
        gaps(k) = static_cast<double>(D - 1 - k);
        break;
    }
  }
  gaps *= (320.0 - 30.0) / gaps.sum();
  mu(0) = 30.0;
  for (int k = 1; k < D; ++k) mu(k) = mu(k - 1) + gaps(k - 1);

  for (int attempt = 0; attempt < 1000; ++attempt) {
    Eigen::VectorXd x(D);
    for (int d = 0; d < D; ++d) {
      x(d) = sample_truncated_normal({mu(d), 25.0, 0.0, kInf}, rng);
    }
    bool ordered = true;
    for (int d = 0; d + 1 < D; ++d) ordered = ordered && (x(d) < x(d + 1));
    if (ordered) return x;
  }
  throw ParameterError("draw_levels: could not order food-quantity draws");
}

double theta_mean_train(const ScenarioConfig& cfg) {
  const bool low = cfg.theta == ThetaSetting::Low;
  if (cfg.study == Study::II) return low ? 36.0 : 144.0;
  return low ? 64.0 : 256.0;
}

double theta_mean_test(const ScenarioConfig& cfg) {
  const bool low = cfg.theta == ThetaSetting::Low;
  if (cfg.study == Study::II) return low ? 144.0 : 576.0;
  return low ? 64.0 : 256.0;
}

struct GeneratingParams {
  Eigen::VectorXd alpha, beta, sigma2;
  Eigen::VectorXd levels;
  Eigen::VectorXd theta2_train, theta2_test;
};

GeneratingParams draw_params(const ScenarioConfig& cfg, RngStream& rng) {
  const RangeSpec spec = range_spec(cfg.range);
  GeneratingParams gp;
  gp.alpha.resize(cfg.P);
  gp.beta.resize(cfg.P);
  gp.sigma2.resize(cfg.P);
  for (int p = 0; p < cfg.P; ++p) {
    gp.alpha(p) = sample_truncated_normal({spec.mu_alpha, spec.sigma_alpha2, 0.0, kInf}, rng);
    gp.beta(p) = sample_truncated_normal({spec.mu_beta, spec.sigma_beta2, 0.0, kInf}, rng);
    // S1: all biomarkers low-variance; S3: all high; S2: half and half.
    bool large = false;
    if (cfg.scenario == VarianceScenario::S3) large = true;
    if (cfg.scenario == VarianceScenario::S2) large = (p % 2 == 1);
    gp.sigma2(p) = draw_with_mean(large ? spec.err_var_large : spec.err_var_small, rng);
  }
  gp.levels = draw_levels(cfg.D, cfg.increments, rng);
  gp.theta2_train.resize(cfg.D);
  gp.theta2_test.resize(cfg.D);
  for (int d = 0; d < cfg.D; ++d) {
    gp.theta2_train(d) = draw_with_mean(theta_mean_train(cfg), rng);
    gp.theta2_test(d) = draw_with_mean(theta_mean_test(cfg), rng);
  }
  return gp;
}

Eigen::MatrixXd biomarkers_from_intakes(const Eigen::VectorXd& z, const GeneratingParams& gp,
                                        bool quadratic, RngStream& rng) {
  const Eigen::Index n = z.size();
  const Eigen::Index P = gp.alpha.size();
  Eigen::MatrixXd Y(n, P);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index p = 0; p < P; ++p) {
      const double effect = quadratic ? 0.001 * gp.beta(p) * z(i) * z(i) : gp.beta(p) * z(i);
      Y(i, p) = sample_truncated_normal({gp.alpha(p) + effect, gp.sigma2(p), 0.0, kInf}, rng);
    }
  }
  return Y;
}

SimulatedPair generate_linear_or_quadratic(const ScenarioConfig& cfg, bool quadratic) {
  cfg.validate();
  RngStream rng(cfg.seed);
  const GeneratingParams gp = draw_params(cfg, rng);
  const int n = cfg.n;
  const int n_star = cfg.n_star();

  SimulatedPair pair;
  pair.truth.alpha = gp.alpha;
  pair.truth.beta = gp.beta;
  pair.truth.sigma2 = gp.sigma2;
  pair.truth.theta2_train = gp.theta2_train;
  pair.truth.theta2_test = gp.theta2_test;
  pair.truth.test_levels = gp.levels;

  // Training set: allocations uniform over the D components.
  pair.truth.train_z.resize(n);
  pair.truth.train_c.resize(static_cast<std::size_t>(n));
  Eigen::VectorXd dose(n);
  for (int i = 0; i < n; ++i) {
    const int d = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cfg.D));
    pair.truth.train_c[static_cast<std::size_t>(i)] = d;
    pair.truth.train_z(i) =
        sample_truncated_normal({gp.levels(d), gp.theta2_train(d), 0.0, kInf}, rng);
    dose(i) = gp.levels(d);
  }
  pair.train.Y = biomarkers_from_intakes(pair.truth.train_z, gp, quadratic, rng);
  pair.train.dose = dose;
  pair.train.levels = gp.levels;

  // Test set.
  pair.truth.test_z.resize(n_star);
  pair.truth.test_c.resize(static_cast<std::size_t>(n_star));
  for (int j = 0; j < n_star; ++j) {
    const int d = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cfg.D));
    pair.truth.test_c[static_cast<std::size_t>(j)] = d;
    pair.truth.test_z(j) =
        sample_truncated_normal({gp.levels(d), gp.theta2_test(d), 0.0, kInf}, rng);
  }
  pair.test.Y = biomarkers_from_intakes(pair.truth.test_z, gp, quadratic, rng);
  pair.test.levels = gp.levels;

  return pair;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (n < 3) throw ParameterError("scenario n must be at least 3");
  if (D < 2) throw ParameterError("scenario D must be at least 2");
  if (P < 1) throw ParameterError("scenario P must be at least 1");
  if (n_star() < 1) throw ParameterError("scenario test size would be empty");
  if (study == Study::VaryingX && Dstar) {
    if (*Dstar < D - 1 || *Dstar > D + 1 || *Dstar < 2) {
      throw ParameterError("varying-X Dstar must lie in {D-1, D, D+1} and be >= 2");
    }
  }
}

SimulatedPair generate_scenario(const ScenarioConfig& cfg) {
  if (cfg.study == Study::III) {
    throw UsageError("generate_scenario handles the linear studies; use generate_misspecified");
  }
  return generate_linear_or_quadratic(cfg, false);
}

SimulatedPair generate_misspecified(const ScenarioConfig& cfg) {
  if (cfg.study != Study::III) throw UsageError("generate_misspecified requires study III");
  return generate_linear_or_quadratic(cfg, true);
}

SimulatedPair generate_variant_test(const ScenarioConfig& cfg) {
  if (cfg.study != Study::VaryingX && cfg.study != Study::Uniform &&
      cfg.study != Study::Unbalanced) {
    throw UsageError("generate_variant_test requires a variant study");
  }
  cfg.validate();

  // Train exactly as in study I; the variant only reshapes the test intakes.
  ScenarioConfig base = cfg;
  base.study = Study::I;
  SimulatedPair pair = generate_linear_or_quadratic(base, false);

  RngStream rng = RngStream(cfg.seed).substream(0x7e57);
  const int n_star = cfg.n_star();
  GeneratingParams gp;
  gp.alpha = pair.truth.alpha;
  gp.beta = pair.truth.beta;
  gp.sigma2 = pair.truth.sigma2;

  if (cfg.study == Study::Uniform) {
    for (int j = 0; j < n_star; ++j) {
      pair.truth.test_z(j) = 350.0 * rng.uniform();
      pair.truth.test_c[static_cast<std::size_t>(j)] = 0;  // no generating component
    }
  } else if (cfg.study == Study::Unbalanced) {
    const int lo = static_cast<int>(std::ceil(0.7 * n_star));
    const int hi = static_cast<int>(std::floor(0.8 * n_star));
    const int dominant = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(cfg.D));
    const int span = std::max(1, hi - lo + 1);
    const int n_dom = lo + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(span));
    std::vector<int> counts(static_cast<std::size_t>(cfg.D), 0);
    counts[static_cast<std::size_t>(dominant)] = std::min(n_dom, n_star);
    int remaining = n_star - counts[static_cast<std::size_t>(dominant)];
    // Remaining mass split at random over the other components.
    std::vector<int> others;
    for (int d = 0; d < cfg.D; ++d) {
      if (d != dominant) others.push_back(d);
    }
    for (std::size_t k = 0; k + 1 < others.size() && remaining > 0; ++k) {
      const int take = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(remaining + 1));
      counts[static_cast<std::size_t>(others[k])] = take;
      remaining -= take;
    }
    counts[static_cast<std::size_t>(others.back())] += remaining;
    std::vector<int> assign;
    for (int d = 0; d < cfg.D; ++d) {
      assign.insert(assign.end(), static_cast<std::size_t>(counts[static_cast<std::size_t>(d)]), d);
    }
    // Deterministic Fisher-Yates shuffle.
    for (std::size_t k = assign.size(); k > 1; --k) {
      const std::size_t r = static_cast<std::size_t>(rng.next_u64() % k);
      std::swap(assign[k - 1], assign[r]);
    }
    for (int j = 0; j < n_star; ++j) {
      const int d = assign[static_cast<std::size_t>(j)];
      pair.truth.test_c[static_cast<std::size_t>(j)] = d;
      pair.truth.test_z(j) = sample_truncated_normal(
          {pair.train.levels(d), pair.truth.theta2_test(d), 0.0, kInf}, rng);
    }
  } else {  // VaryingX
    const int Dstar = cfg.Dstar.value_or(cfg.D);
    Eigen::VectorXd levels_star;
    bool ok = false;
    for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
      levels_star = draw_levels(Dstar, cfg.increments, rng);
      ok = true;
      for (int d = 0; d < Dstar && ok; ++d) {
        for (Eigen::Index e = 0; e < pair.train.levels.size(); ++e) {
          if (levels_star(d) == pair.train.levels(e)) ok = false;
        }
      }
    }
    if (!ok) throw ParameterError("varying-X: could not draw test levels disjoint from training");
    pair.truth.test_levels = levels_star;
    Eigen::VectorXd theta2_star(Dstar);
    for (int d = 0; d < Dstar; ++d) {
      theta2_star(d) = draw_with_mean(theta_mean_test(cfg), rng);
    }
    pair.truth.theta2_test = theta2_star;
    for (int j = 0; j < n_star; ++j) {
      const int d = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(Dstar));
      pair.truth.test_c[static_cast<std::size_t>(j)] = d;
      pair.truth.test_z(j) =
          sample_truncated_normal({levels_star(d), theta2_star(d), 0.0, kInf}, rng);
    }
  }

  pair.test.Y = biomarkers_from_intakes(pair.truth.test_z, gp, false, rng);
  return pair;
}

SimulatedPair generate(const ScenarioConfig& cfg) {
  switch (cfg.study) {
    case Study::I:
    case Study::II:
      return generate_scenario(cfg);
    case Study::III:
      return generate_misspecified(cfg);
    default:
      return generate_variant_test(cfg);
  }
}

SimulatedPair generate_apple_like(std::uint64_t seed) {
  RngStream rng(seed);
  const int n = 86;
  const int P = 4;
  const int D = 3;
  GeneratingParams gp;
  gp.alpha.resize(P);
  gp.beta.resize(P);
  gp.sigma2.resize(P);
  gp.alpha << 0.2, 0.5, 0.6, 0.6;
  gp.beta << 0.003, 0.005, 0.007, 0.008;
  gp.sigma2 << 0.35 * 0.35, 0.27 * 0.27, 0.68 * 0.68, 0.38 * 0.38;
  gp.levels.resize(D);
  gp.levels << 50.0, 100.0, 300.0;
  gp.theta2_train.resize(D);
  gp.theta2_train << 5.5 * 5.5, 7.5 * 7.5, 20.0 * 20.0;
  gp.theta2_test = gp.theta2_train;

  // 29/28/29 observations across the three doses.
  const int counts[3] = {29, 28, 29};
  SimulatedPair pair;
  pair.truth.alpha = gp.alpha;
  pair.truth.beta = gp.beta;
  pair.truth.sigma2 = gp.sigma2;
  pair.truth.theta2_train = gp.theta2_train;
  pair.truth.theta2_test = gp.theta2_test;
  pair.truth.test_levels = gp.levels;
  pair.truth.train_z.resize(n);
  pair.truth.train_c.resize(n);
  Eigen::VectorXd dose(n);
  int i = 0;
  for (int d = 0; d < D; ++d) {
    for (int k = 0; k < counts[d]; ++k, ++i) {
      pair.truth.train_c[static_cast<std::size_t>(i)] = d;
      pair.truth.train_z(i) =
          sample_truncated_normal({gp.levels(d), gp.theta2_train(d), 0.0, kInf}, rng);
      dose(i) = gp.levels(d);
    }
  }
  pair.train.Y = biomarkers_from_intakes(pair.truth.train_z, gp, false, rng);
  pair.train.dose = dose;
  pair.train.levels = gp.levels;
  pair.test = pair.train;
  pair.test.dose.reset();
  pair.truth.test_z = pair.truth.train_z;
  pair.truth.test_c = pair.truth.train_c;
  return pair;
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

void write_scenario_outputs(const std::string& prefix, const SimulatedPair& pair,
                            const ScenarioConfig& cfg, const std::string& study_label) {
  write_dataset_csv(prefix + "_train.csv", pair.train);
  write_dataset_csv(prefix + "_test.csv", pair.test);

  std::ofstream truth(prefix + "_truth.csv");
  if (!truth) throw IoError("cannot write truth file for prefix " + prefix);
  truth << "set,obs,z,c\n";
  for (Eigen::Index i = 0; i < pair.truth.train_z.size(); ++i) {
    truth << "train," << (i + 1) << ',' << format_double(pair.truth.train_z(i)) << ','
          << (pair.truth.train_c[static_cast<std::size_t>(i)] + 1) << '\n';
  }
  for (Eigen::Index j = 0; j < pair.truth.test_z.size(); ++j) {
    truth << "test," << (j + 1) << ',' << format_double(pair.truth.test_z(j)) << ','
          << (pair.truth.test_c[static_cast<std::size_t>(j)] + 1) << '\n';
  }

  nlohmann::json manifest;
  manifest["config"] = {{"n", cfg.n},
                        {"D", cfg.D},
                        {"P", cfg.P},
                        {"range", to_string(cfg.range)},
                        {"scenario", to_string(cfg.scenario)},
                        {"increments", to_string(cfg.increments)},
                        {"theta", to_string(cfg.theta)},
                        {"study", study_label.empty() ? to_string(cfg.study) : study_label},
                        {"seed", cfg.seed}};
  if (cfg.Dstar) manifest["config"]["Dstar"] = *cfg.Dstar;
  manifest["truth"] = {{"alpha", vec_json(pair.truth.alpha)},
                       {"beta", vec_json(pair.truth.beta)},
                       {"sigma2", vec_json(pair.truth.sigma2)},
                       {"theta2_train", vec_json(pair.truth.theta2_train)},
                       {"theta2_test", vec_json(pair.truth.theta2_test)},
                       {"levels", vec_json(pair.train.levels)},
                       {"test_levels", vec_json(pair.truth.test_levels)}};
  std::ofstream mf(prefix + "_manifest.json");
  if (!mf) throw IoError("cannot write manifest for prefix " + prefix);
  mf << manifest.dump(2) << '\n';
}

std::string to_string(BiomarkerRange v) {
  switch (v) {
    case BiomarkerRange::Small: return "small";
    case BiomarkerRange::Medium: return "medium";
    case BiomarkerRange::Large: return "large";
  }
  return "?";
}
std::string to_string(VarianceScenario v) {
  switch (v) {
    case VarianceScenario::S1: return "S1";
    case VarianceScenario::S2: return "S2";
    case VarianceScenario::S3: return "S3";
  }
  return "?";
}
std::string to_string(Increments v) {
  switch (v) {
    case Increments::Stable: return "stable";
    case Increments::Increasing: return "increasing";
    case Increments::Decreasing: return "decreasing";
  }
  return "?";
}
std::string to_string(ThetaSetting v) {
  return v == ThetaSetting::Low ? "low" : "high";
}
std::string to_string(Study v) {
  switch (v) {
    case Study::I: return "I";
    case Study::II: return "II";
    case Study::III: return "III";
    case Study::VaryingX: return "varyingX";
    case Study::Uniform: return "uniform";
    case Study::Unbalanced: return "unbalanced";
  }
  return "?";
}

BiomarkerRange range_from_string(const std::string& s) {
  if (s == "small") return BiomarkerRange::Small;
  if (s == "medium") return BiomarkerRange::Medium;
  if (s == "large") return BiomarkerRange::Large;
  throw UsageError("unknown biomarker range: " + s);
}
VarianceScenario scenario_from_string(const std::string& s) {
  if (s == "S1" || s == "s1") return VarianceScenario::S1;
  if (s == "S2" || s == "s2") return VarianceScenario::S2;
  if (s == "S3" || s == "s3") return VarianceScenario::S3;
  throw UsageError("unknown variance scenario: " + s);
}
Increments increments_from_string(const std::string& s) {
  if (s == "stable") return Increments::Stable;
  if (s == "increasing") return Increments::Increasing;
  if (s == "decreasing") return Increments::Decreasing;
  throw UsageError("unknown increments setting: " + s);
}
ThetaSetting theta_from_string(const std::string& s) {
  if (s == "low") return ThetaSetting::Low;
  if (s == "high") return ThetaSetting::High;
  throw UsageError("unknown theta setting: " + s);
}
Study study_from_string(const std::string& s) {
  if (s == "I") return Study::I;
  if (s == "II") return Study::II;
  if (s == "III") return Study::III;
  if (s == "varyingX") return Study::VaryingX;
  if (s == "uniform") return Study::Uniform;
  if (s == "unbalanced") return Study::Unbalanced;
  throw UsageError("unknown study: " + s);
}

}  // namespace multimarker
