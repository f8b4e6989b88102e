#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "multimarker/data.hpp"

namespace multimarker {

enum class BiomarkerRange { Small, Medium, Large };
enum class VarianceScenario { S1, S2, S3 };
enum class Increments { Stable, Increasing, Decreasing };
enum class ThetaSetting { Low, High };
enum class Study { I, II, III, VaryingX, Uniform, Unbalanced };

/// One simulation-study cell: training set of size n (with doses) and test
/// set of size floor(0.4 n) (biomarkers only).
struct ScenarioConfig {
  int n = 99;
  int D = 3;
  BiomarkerRange range = BiomarkerRange::Medium;
  VarianceScenario scenario = VarianceScenario::S1;
  Increments increments = Increments::Stable;
  ThetaSetting theta = ThetaSetting::Low;
  Study study = Study::I;
  std::optional<int> Dstar;  // varying-X test component count, D-1 .. D+1
  int P = 4;
  std::uint64_t seed = 1;

  int n_star() const { return static_cast<int>(0.4 * n); }
  void validate() const;
};

/// Everything needed to score errors afterwards: the generating parameters
/// and the true latent intakes/allocations of both sets.
struct SimulationTruth {
  Eigen::VectorXd alpha, beta, sigma2;
  Eigen::VectorXd theta2_train, theta2_test;
  Eigen::VectorXd train_z, test_z;
  std::vector<int> train_c, test_c;
  Eigen::VectorXd test_levels;  // equals train levels except in varying-X mode
};

struct SimulatedPair {
  Dataset train;
  Dataset test;
  SimulationTruth truth;
};

/// Studies I and II: linear biomarker model, uniform component allocations,
/// study II widens the test-set component variances.
SimulatedPair generate_scenario(const ScenarioConfig& cfg);

/// Study III: quadratic intake effect with the scaling coefficients reduced
/// to 0.1% so the biomarker ranges stay comparable.
SimulatedPair generate_misspecified(const ScenarioConfig& cfg);

/// Test-set variants: varying food quantities (D* components disjoint from
/// the training levels), uniform intakes on (0, 350), or one dominant
/// component holding 70-80% of the test observations.
SimulatedPair generate_variant_test(const ScenarioConfig& cfg);

/// Dispatch on cfg.study.
SimulatedPair generate(const ScenarioConfig& cfg);

/// Synthetic stand-in for the motivating intervention study: 86 observations,
/// 4 biomarkers, doses 50/100/300 g with 29/28/29 observations, parameters in
/// the fitted ranges reported for that application.
SimulatedPair generate_apple_like(std::uint64_t seed);

/// Emits <prefix>_train.csv, <prefix>_test.csv, <prefix>_truth.csv and
/// <prefix>_manifest.json. `study_label` overrides the manifest's study
/// field (used by the fixed apple-like generator).
void write_scenario_outputs(const std::string& prefix, const SimulatedPair& pair,
                            const ScenarioConfig& cfg, const std::string& study_label = "");

std::string to_string(BiomarkerRange v);
std::string to_string(VarianceScenario v);
std::string to_string(Increments v);
std::string to_string(ThetaSetting v);
std::string to_string(Study v);

BiomarkerRange range_from_string(const std::string& s);
VarianceScenario scenario_from_string(const std::string& s);
Increments increments_from_string(const std::string& s);
ThetaSetting theta_from_string(const std::string& s);
Study study_from_string(const std::string& s);

}  // namespace multimarker
