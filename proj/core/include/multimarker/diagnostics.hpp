#pragma once

#include <span>
#include <string>
#include <vector>

#include "multimarker/data.hpp"
#include "multimarker/predict.hpp"
#include "multimarker/simulate.hpp"
#include "multimarker/state.hpp"

namespace multimarker {

struct EssResult {
  double ess = 0.0;
  bool degenerate = false;  // constant chain: reported as n with this flag
};

/// Effective sample size via Geyer's initial-positive-sequence truncation of
/// the autocorrelations; capped at the chain length. Needs >= 100 draws.
EssResult effective_sample_size(std::span<const double> draws);

struct ErrorSummary {
  double median_abs = 0.0;
  double width95 = 0.0;  // central 95% interval width of the absolute errors
};

ErrorSummary error_summary(std::span<const double> true_z, std::span<const double> est_z);

struct ErrorTableRow {
  std::string study;
  std::string scenario;
  std::string method;  // multimarker / blr / pls
  std::string phase;   // E (estimated, training) or I (inferred, test)
  double median_abs = 0.0;
  double width95 = 0.0;
};

struct ErrorTable {
  std::vector<ErrorTableRow> rows;
};

void write_error_table_csv(const std::string& path, const ErrorTable& table);

/// Aligned text rendering, studies as column blocks and methods/phases as
/// rows, median(width) entries.
std::string format_error_table_text(const ErrorTable& table);

/// Simulation-study benchmark: `replicates` seeded datasets per
/// (study, scenario) cell, the model chain plus both baselines fitted on
/// each, absolute errors pooled across replicates.
struct BenchConfig {
  ScenarioConfig scenario;
  SamplerConfig sampler;
  int replicates = 5;
  bool run_multimarker = true;
  bool run_blr = true;
  bool run_pls = true;
  double blr_prior_scale = 1e4;
  int pls_components = 2;
  int jobs = 1;
};

ErrorTable run_bench(const BenchConfig& cfg);

/// Leave-one-out cross validation: for every observation, refit on the
/// remaining n-1 and predict the held out biomarker panel. For the model,
/// hyperparameters are re-derived per fold; the comparison regressions can
/// be driven through the same folds. Differences are inferred minus known
/// quantity.
enum class LoocvMethod { Multimarker, Blr, Pls };

struct LoocvObservation {
  Eigen::Index index = 0;  // 0-based observation index
  double dose = 0.0;
  double median = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double difference = 0.0;             // median - dose
  Eigen::VectorXd component_freq;      // model method only
};

struct LoocvResult {
  LoocvMethod method = LoocvMethod::Multimarker;
  std::vector<LoocvObservation> observations;
  std::vector<std::pair<double, double>> per_dose_median_abs;  // (level, median |difference|)
  ErrorTable table;
};

struct LoocvOptions {
  LoocvMethod method = LoocvMethod::Multimarker;
  int jobs = 1;
  double blr_prior_scale = 1e4;
  int pls_components = 2;
};

LoocvResult loocv(const Dataset& data, const SamplerConfig& cfg, const LoocvOptions& opts = {});

std::string to_string(LoocvMethod m);
LoocvMethod loocv_method_from_string(const std::string& s);

}  // namespace multimarker
