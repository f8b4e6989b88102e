// Command-line front end: fit / predict / simulate / loocv / bench / diag.
// All randomness flows from --seed; primary CSV outputs are byte-identical
// across runs with equal seed and configuration.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "multimarker/baselines.hpp"
#include "multimarker/chain_io.hpp"
#include "multimarker/data.hpp"
#include "multimarker/diagnostics.hpp"
#include "multimarker/errors.hpp"
#include "multimarker/hyperparameters.hpp"
#include "multimarker/predict.hpp"
#include "multimarker/sampler.hpp"
#include "multimarker/simulate.hpp"
#include "multimarker/stats_util.hpp"

namespace mm = multimarker;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "1.0.0";

int exit_code_for(const std::string& category) {
  if (category == "usage") return 2;
  if (category == "data") return 3;
  if (category == "parameter") return 4;
  if (category == "io") return 5;
  if (category == "mismatch") return 6;
  return 10;
}

std::uint64_t fnv1a_hash(const std::string& s) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Sidecar manifest next to a primary output; keeps the CSV itself clean.
void write_manifest(const std::string& output_path, const std::string& command,
                    std::uint64_t seed, const std::string& config_text) {
  json m;
  m["version"] = kToolVersion;
  m["command"] = command;
  m["seed"] = seed;
  std::ostringstream h;
  h << std::hex << fnv1a_hash(config_text);
  m["config_hash"] = h.str();
  std::ofstream out(output_path + ".manifest.json");
  if (!out) throw mm::IoError("cannot write manifest for " + output_path);
  out << m.dump(2) << '\n';
}

void log_config(const std::string& command, const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) std::cout << "config " << command << ": " << k << '=' << v << '\n';
}

std::optional<Eigen::VectorXd> parse_levels(const std::string& csv) {
  if (csv.empty()) return std::nullopt;
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    vals.push_back(std::stod(tok));
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) v(static_cast<Eigen::Index>(i)) = vals[i];
  return v;
}

struct FitOptions {
  std::string input, chain_out, levels, param_summary, diag_out;
  std::uint64_t seed = 1;
  int iters = 30000, burn = 6000, thin = 1;
  double mh_step_gamma = 0.5, mh_step_eta = 0.1;
  int adapt_window = 100;
  bool no_scale = false;
  bool stochastic_allocation = false;
  bool theta_init_dose_variances = false;

  std::string canonical() const {
    std::ostringstream os;
    os << input << '|' << chain_out << '|' << levels << '|' << seed << '|' << iters << '|' << burn
       << '|' << thin << '|' << mh_step_gamma << '|' << mh_step_eta << '|' << adapt_window << '|'
       << no_scale << '|' << stochastic_allocation << '|' << theta_init_dose_variances;
    return os.str();
  }
};

mm::SamplerConfig sampler_config_from(const FitOptions& o) {
  mm::SamplerConfig cfg;
  cfg.n_iter = o.iters;
  cfg.n_burn = o.burn;
  cfg.thin = o.thin;
  cfg.mh_step_gamma = o.mh_step_gamma;
  cfg.mh_step_eta = o.mh_step_eta;
  cfg.adapt_window = o.adapt_window;
  cfg.seed = o.seed;
  cfg.stochastic_allocation = o.stochastic_allocation;
  cfg.theta_init_from_dose_variances = o.theta_init_dose_variances;
  return cfg;
}

void write_param_summary(const std::string& path, const mm::PosteriorChain& chain) {
  std::ofstream out(path);
  if (!out) throw mm::IoError("cannot write parameter summary: " + path);
  out << "parameter,dimension,median,ci_low,ci_high,ci_width\n";
  auto emit = [&out](const std::string& name, int dim, std::vector<double> draws) {
    std::sort(draws.begin(), draws.end());
    const double med = mm::quantile_sorted(draws, 0.5);
    const double lo = mm::quantile_sorted(draws, 0.025);
    const double hi = mm::quantile_sorted(draws, 0.975);
    out << name << ',' << dim << ',' << mm::format_double(med) << ',' << mm::format_double(lo)
        << ',' << mm::format_double(hi) << ',' << mm::format_double(hi - lo) << '\n';
  };
  const std::size_t T = chain.draws.size();
  std::vector<double> buf(T);
  for (Eigen::Index p = 0; p < chain.P; ++p) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].alpha(p);
    emit("alpha", static_cast<int>(p + 1), buf);
  }
  for (Eigen::Index p = 0; p < chain.P; ++p) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].beta(p);
    emit("beta", static_cast<int>(p + 1), buf);
  }
  for (Eigen::Index p = 0; p < chain.P; ++p) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = std::sqrt(chain.draws[t].sigma2(p));
    emit("sigma", static_cast<int>(p + 1), buf);
  }
  for (Eigen::Index d = 0; d < chain.D; ++d) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = std::sqrt(chain.draws[t].theta2(d));
    emit("theta", static_cast<int>(d + 1), buf);
  }
  for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].mu_alpha;
  emit("mu_alpha", 1, buf);
  for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].mu_beta;
  emit("mu_beta", 1, buf);
  for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].sigma_beta2;
  emit("sigma_beta2", 1, buf);
  for (Eigen::Index d = 0; d + 1 < chain.D; ++d) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].gamma(d);
    emit("gamma", static_cast<int>(d + 1), buf);
  }
  for (Eigen::Index p = 0; p < chain.P; ++p) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].eta(p);
    emit("eta", static_cast<int>(p + 1), buf);
  }
}

int run_fit(const FitOptions& o) {
  mm::Dataset data = mm::read_dataset_csv(o.input, parse_levels(o.levels));
  data = mm::validate_dataset(std::move(data));
  if (!data.has_dose()) throw mm::UsageError("fit requires a dose column in the input CSV");

  const std::string raw_fingerprint = mm::dataset_fingerprint(data);

  bool scaled = !o.no_scale;
  mm::ScalingTransform transform;
  if (scaled) {
    transform = mm::fit_biomarker_scaling(data.Y);
    data.Y = transform.apply(data.Y);
  }

  const mm::Hyperparameters hyp = mm::derive_hyperparameters(data);
  const mm::SamplerConfig cfg = sampler_config_from(o);
  mm::PosteriorChain chain = mm::run_chain(data, hyp, cfg);
  chain.dataset_fingerprint = raw_fingerprint;
  chain.scaled = scaled;
  if (scaled) chain.scaling = transform;

  mm::save_chain(o.chain_out, chain);
  write_manifest(o.chain_out, "fit", o.seed, o.canonical());

  if (!o.param_summary.empty()) {
    write_param_summary(o.param_summary, chain);
    write_manifest(o.param_summary, "fit", o.seed, o.canonical());
  }
  if (!o.diag_out.empty()) {
    std::ofstream out(o.diag_out);
    if (!out) throw mm::IoError("cannot write diagnostics: " + o.diag_out);
    out << "metric,value\n";
    out << "acceptance_gamma," << mm::format_double(chain.acceptance_gamma) << '\n';
    out << "acceptance_eta," << mm::format_double(chain.acceptance_eta) << '\n';
    out << "final_step_gamma," << mm::format_double(chain.final_step_gamma) << '\n';
    out << "final_step_eta," << mm::format_double(chain.final_step_eta) << '\n';
  }
  std::cout << "fit: retained " << chain.draws.size() << " draws; acceptance gamma="
            << chain.acceptance_gamma << " eta=" << chain.acceptance_eta << '\n';
  return 0;
}

struct PredictOptions {
  std::string chain_path, input, output, draws_out, train_verify;
  std::uint64_t seed = 1;
  int scale_mode = -1;  // -1 follow chain, 0 forced off, 1 forced on
  bool augmented = false;
  std::string train_csv;  // augmented mode

  std::string canonical() const {
    std::ostringstream os;
    os << chain_path << '|' << input << '|' << output << '|' << seed << '|' << scale_mode << '|'
       << augmented << '|' << train_csv;
    return os.str();
  }
};

int run_predict(const PredictOptions& o) {
  mm::PosteriorChain chain = mm::load_chain(o.chain_path);

  if (o.scale_mode == 0 && chain.scaled) {
    throw mm::MismatchError(
        "chain was fitted on scaled biomarkers but --no-scale was requested; "
        "the inputs would be on a different scale than the training data");
  }
  if (o.scale_mode == 1 && !chain.scaled) {
    throw mm::MismatchError(
        "chain was fitted on unscaled biomarkers but --scale was requested");
  }

  mm::Dataset data = mm::read_dataset_csv(o.input, chain.levels);
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index p = 0; p < data.P(); ++p) {
      if (!std::isfinite(data.Y(i, p))) throw mm::DataError("non-finite biomarker value in input");
    }
  }
  if (data.P() != chain.P) {
    std::ostringstream os;
    os << "input has " << data.P() << " biomarkers but the chain was fitted with " << chain.P;
    throw mm::MismatchError(os.str());
  }
  if (!o.train_verify.empty()) {
    mm::Dataset train = mm::read_dataset_csv(o.train_verify, chain.levels);
    if (mm::dataset_fingerprint(train) != chain.dataset_fingerprint) {
      throw mm::MismatchError("training data fingerprint does not match the chain");
    }
  }

  Eigen::MatrixXd Ystar = data.Y;
  if (chain.scaled) Ystar = chain.scaling.apply(Ystar);

  std::vector<mm::PredictiveResult> results;
  if (o.augmented) {
    if (o.train_csv.empty()) {
      throw mm::UsageError("--augmented prediction needs --train <csv> (the fitting data)");
    }
    mm::Dataset train = mm::read_dataset_csv(o.train_csv, chain.levels);
    train = mm::validate_dataset(std::move(train));
    if (mm::dataset_fingerprint(train) != chain.dataset_fingerprint) {
      throw mm::MismatchError("--train data fingerprint does not match the chain");
    }
    if (chain.scaled) train.Y = chain.scaling.apply(train.Y);
    mm::SamplerConfig cfg = chain.config;
    cfg.seed = o.seed;
    results = mm::sample_predictive_augmented(train, chain.hyp, cfg, Ystar);
  } else {
    mm::RngStream rng(o.seed);
    results = mm::sample_predictive(Ystar, chain, rng);
  }

  std::ofstream out(o.output);
  if (!out) throw mm::IoError("cannot write predictions: " + o.output);
  out << "median,ci_low,ci_high";
  for (Eigen::Index d = 0; d < chain.D; ++d) out << ",p_comp_" << (d + 1);
  out << '\n';
  for (const auto& r : results) {
    out << mm::format_double(r.median) << ',' << mm::format_double(r.ci95.first) << ','
        << mm::format_double(r.ci95.second);
    for (Eigen::Index d = 0; d < chain.D; ++d) out << ',' << mm::format_double(r.component_freq(d));
    out << '\n';
  }
  write_manifest(o.output, "predict", o.seed, o.canonical());

  if (!o.draws_out.empty()) {
    std::ofstream dr(o.draws_out);
    if (!dr) throw mm::IoError("cannot write draw dump: " + o.draws_out);
    dr << "obs,draw,z\n";
    for (std::size_t j = 0; j < results.size(); ++j) {
      const auto& d = results[j].draws;
      for (Eigen::Index t = 0; t < d.size(); ++t) {
        dr << (j + 1) << ',' << (t + 1) << ',' << mm::format_double(d(t)) << '\n';
      }
    }
    write_manifest(o.draws_out, "predict", o.seed, o.canonical());
  }
  std::cout << "predict: wrote " << results.size() << " rows to " << o.output << '\n';
  return 0;
}

struct SimulateOptions {
  std::string study = "I", scenario = "S1", range = "medium", increments = "stable",
              theta = "low", prefix;
  int n = 99, D = 3, P = 4;
  int dstar = 0;
  std::uint64_t seed = 1;

  std::string canonical() const {
    std::ostringstream os;
    os << study << '|' << scenario << '|' << range << '|' << increments << '|' << theta << '|' << n
       << '|' << D << '|' << P << '|' << dstar << '|' << seed;
    return os.str();
  }
};

int run_simulate(const SimulateOptions& o) {
  mm::SimulatedPair pair;
  mm::ScenarioConfig cfg;
  if (o.study == "apple") {
    pair = mm::generate_apple_like(o.seed);
    cfg.n = 86;
    cfg.D = 3;
    cfg.P = 4;
    cfg.seed = o.seed;
  } else {
    cfg.study = mm::study_from_string(o.study);
    cfg.scenario = mm::scenario_from_string(o.scenario);
    cfg.range = mm::range_from_string(o.range);
    cfg.increments = mm::increments_from_string(o.increments);
    cfg.theta = mm::theta_from_string(o.theta);
    cfg.n = o.n;
    cfg.D = o.D;
    cfg.P = o.P;
    cfg.seed = o.seed;
    if (o.dstar > 0) cfg.Dstar = o.dstar;
    pair = mm::generate(cfg);
  }
  mm::write_scenario_outputs(o.prefix, pair, cfg, o.study == "apple" ? "apple" : "");
  write_manifest(o.prefix + "_train.csv", "simulate", o.seed, o.canonical());
  std::cout << "simulate: wrote " << o.prefix << "_{train,test,truth}.csv and manifest\n";
  return 0;
}

struct LoocvCliOptions {
  std::string input, levels, output, summary;
  std::string method = "multimarker";
  std::uint64_t seed = 1;
  int iters = 30000, burn = 6000, thin = 1, jobs = 1;
  bool no_scale = false;
  double blr_prior_scale = 1e4;
  int pls_components = 2;

  std::string canonical() const {
    std::ostringstream os;
    os << input << '|' << levels << '|' << method << '|' << seed << '|' << iters << '|' << burn
       << '|' << thin << '|' << jobs << '|' << no_scale << '|' << blr_prior_scale << '|'
       << pls_components;
    return os.str();
  }
};

int run_loocv(const LoocvCliOptions& o) {
  mm::Dataset data = mm::read_dataset_csv(o.input, parse_levels(o.levels));
  data = mm::validate_dataset(std::move(data));
  if (!data.has_dose()) throw mm::UsageError("loocv requires a dose column");
  if (!o.no_scale) data.Y = mm::scale_biomarkers(data.Y);

  mm::SamplerConfig cfg;
  cfg.n_iter = o.iters;
  cfg.n_burn = o.burn;
  cfg.thin = o.thin;
  cfg.seed = o.seed;
  mm::LoocvOptions lopts;
  lopts.method = mm::loocv_method_from_string(o.method);
  lopts.jobs = o.jobs;
  lopts.blr_prior_scale = o.blr_prior_scale;
  lopts.pls_components = o.pls_components;
  const mm::LoocvResult res = mm::loocv(data, cfg, lopts);

  const bool with_components = lopts.method == mm::LoocvMethod::Multimarker;
  std::ofstream out(o.output);
  if (!out) throw mm::IoError("cannot write loocv output: " + o.output);
  out << "obs,dose,method,median,ci_low,ci_high,difference";
  if (with_components) {
    for (Eigen::Index d = 0; d < data.D(); ++d) out << ",p_comp_" << (d + 1);
  }
  out << '\n';
  for (const auto& obs : res.observations) {
    out << (obs.index + 1) << ',' << mm::format_double(obs.dose) << ',' << to_string(res.method)
        << ',' << mm::format_double(obs.median) << ',' << mm::format_double(obs.ci_low) << ','
        << mm::format_double(obs.ci_high) << ',' << mm::format_double(obs.difference);
    if (with_components) {
      for (Eigen::Index d = 0; d < obs.component_freq.size(); ++d) {
        out << ',' << mm::format_double(obs.component_freq(d));
      }
    }
    out << '\n';
  }
  write_manifest(o.output, "loocv", o.seed, o.canonical());

  if (!o.summary.empty()) {
    std::ofstream sm(o.summary);
    if (!sm) throw mm::IoError("cannot write loocv summary: " + o.summary);
    sm << "dose,median_abs_difference\n";
    for (const auto& [level, med] : res.per_dose_median_abs) {
      sm << mm::format_double(level) << ',' << mm::format_double(med) << '\n';
    }
    write_manifest(o.summary, "loocv", o.seed, o.canonical());
  }
  for (const auto& [level, med] : res.per_dose_median_abs) {
    std::cout << "loocv: dose " << level << " median |difference| = " << med << " g\n";
  }
  return 0;
}

struct BenchOptions {
  std::string study = "I", scenario = "S1", range = "medium", increments = "stable", theta = "low";
  std::string methods = "multimarker,blr,pls";
  std::string output;
  int n = 99, D = 3, P = 4, replicates = 5, jobs = 1;
  std::uint64_t seed = 1;
  int iters = 10000, burn = 2000, thin = 1;
  double blr_prior_scale = 1e4;
  int pls_components = 2;

  std::string canonical() const {
    std::ostringstream os;
    os << study << '|' << scenario << '|' << range << '|' << increments << '|' << theta << '|' << n
       << '|' << D << '|' << P << '|' << replicates << '|' << seed << '|' << iters << '|' << burn
       << '|' << thin << '|' << methods << '|' << blr_prior_scale << '|' << pls_components;
    return os.str();
  }
};

int run_bench(const BenchOptions& o) {
  mm::BenchConfig cfg;
  cfg.scenario.study = mm::study_from_string(o.study);
  cfg.scenario.scenario = mm::scenario_from_string(o.scenario);
  cfg.scenario.range = mm::range_from_string(o.range);
  cfg.scenario.increments = mm::increments_from_string(o.increments);
  cfg.scenario.theta = mm::theta_from_string(o.theta);
  cfg.scenario.n = o.n;
  cfg.scenario.D = o.D;
  cfg.scenario.P = o.P;
  cfg.scenario.seed = o.seed;
  cfg.sampler.n_iter = o.iters;
  cfg.sampler.n_burn = o.burn;
  cfg.sampler.thin = o.thin;
  cfg.sampler.seed = o.seed;
  cfg.replicates = o.replicates;
  cfg.jobs = o.jobs;
  cfg.blr_prior_scale = o.blr_prior_scale;
  cfg.pls_components = o.pls_components;
  cfg.run_multimarker = o.methods.find("multimarker") != std::string::npos ||
                        o.methods.find("mm") != std::string::npos;
  cfg.run_blr = o.methods.find("blr") != std::string::npos;
  cfg.run_pls = o.methods.find("pls") != std::string::npos;

  const mm::ErrorTable table = mm::run_bench(cfg);
  if (!o.output.empty()) {
    mm::write_error_table_csv(o.output, table);
    write_manifest(o.output, "bench", o.seed, o.canonical());
  }
  std::cout << mm::format_error_table_text(table);
  return 0;
}

struct DiagOptions {
  std::string chain_path, output, traces;
  std::string canonical() const { return chain_path + '|' + output + '|' + traces; }
};

int run_diag(const DiagOptions& o) {
  const mm::PosteriorChain chain = mm::load_chain(o.chain_path);
  if (chain.draws.size() < 100) {
    throw mm::UsageError("diag needs a chain with at least 100 retained draws");
  }
  const std::size_t T = chain.draws.size();
  std::vector<double> buf(T);

  struct GroupStat {
    std::string name;
    std::vector<double> values;
  };
  std::vector<GroupStat> groups;

  std::ofstream out(o.output);
  if (!out) throw mm::IoError("cannot write ESS table: " + o.output);
  out << "parameter,dimension,ess,degenerate\n";
  auto emit = [&](const std::string& name, int dim, GroupStat& group) {
    const mm::EssResult r = mm::effective_sample_size(buf);
    out << name << ',' << dim << ',' << mm::format_double(r.ess) << ',' << (r.degenerate ? 1 : 0)
        << '\n';
    group.values.push_back(r.ess);
  };

  auto group_for = [&groups](const std::string& name) -> GroupStat& {
    for (auto& g : groups) {
      if (g.name == name) return g;
    }
    groups.push_back({name, {}});
    return groups.back();
  };

  for (Eigen::Index p = 0; p < chain.P; ++p) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].alpha(p);
    emit("alpha", static_cast<int>(p + 1), group_for("alpha"));
  }
  for (Eigen::Index p = 0; p < chain.P; ++p) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].beta(p);
    emit("beta", static_cast<int>(p + 1), group_for("beta"));
  }
  for (Eigen::Index p = 0; p < chain.P; ++p) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].sigma2(p);
    emit("sigma2", static_cast<int>(p + 1), group_for("sigma2"));
  }
  for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].mu_alpha;
  emit("mu_alpha", 1, group_for("mu_alpha"));
  for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].mu_beta;
  emit("mu_beta", 1, group_for("mu_beta"));
  for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].sigma_beta2;
  emit("sigma_beta2", 1, group_for("sigma_beta2"));
  for (Eigen::Index d = 0; d < chain.D; ++d) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].theta2(d);
    emit("theta2", static_cast<int>(d + 1), group_for("theta2"));
  }
  for (Eigen::Index d = 0; d + 1 < chain.D; ++d) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].gamma(d);
    emit("gamma", static_cast<int>(d + 1), group_for("gamma"));
  }
  for (Eigen::Index p = 0; p < chain.P; ++p) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].eta(p);
    emit("eta", static_cast<int>(p + 1), group_for("eta"));
  }
  for (Eigen::Index i = 0; i < chain.n; ++i) {
    for (std::size_t t = 0; t < T; ++t) buf[t] = chain.draws[t].z(i);
    emit("z", static_cast<int>(i + 1), group_for("z"));
  }
  write_manifest(o.output, "diag", chain.config.seed, o.canonical());

  std::cout << "parameter  min/median/max ESS\n";
  for (auto& g : groups) {
    std::sort(g.values.begin(), g.values.end());
    std::cout << g.name << "  " << g.values.front() << " / "
              << mm::quantile_sorted(g.values, 0.5) << " / " << g.values.back() << '\n';
  }

  if (!o.traces.empty()) {
    std::ofstream tr(o.traces);
    if (!tr) throw mm::IoError("cannot write traces: " + o.traces);
    tr << "draw,parameter,dimension,value\n";
    for (std::size_t t = 0; t < T; ++t) {
      const mm::ModelState& st = chain.draws[t];
      for (Eigen::Index p = 0; p < chain.P; ++p) {
        tr << (t + 1) << ",alpha," << (p + 1) << ',' << mm::format_double(st.alpha(p)) << '\n';
        tr << (t + 1) << ",beta," << (p + 1) << ',' << mm::format_double(st.beta(p)) << '\n';
        tr << (t + 1) << ",sigma2," << (p + 1) << ',' << mm::format_double(st.sigma2(p)) << '\n';
        tr << (t + 1) << ",eta," << (p + 1) << ',' << mm::format_double(st.eta(p)) << '\n';
      }
      for (Eigen::Index d = 0; d < chain.D; ++d) {
        tr << (t + 1) << ",theta2," << (d + 1) << ',' << mm::format_double(st.theta2(d)) << '\n';
      }
      for (Eigen::Index d = 0; d + 1 < chain.D; ++d) {
        tr << (t + 1) << ",gamma," << (d + 1) << ',' << mm::format_double(st.gamma(d)) << '\n';
      }
      tr << (t + 1) << ",mu_alpha,1," << mm::format_double(st.mu_alpha) << '\n';
      tr << (t + 1) << ",mu_beta,1," << mm::format_double(st.mu_beta) << '\n';
      tr << (t + 1) << ",sigma_beta2,1," << mm::format_double(st.sigma_beta2) << '\n';
    }
    write_manifest(o.traces, "diag", chain.config.seed, o.canonical());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-intake inference from biomarker panels"};
  app.require_subcommand(1);
  app.set_config("--config")->configurable(false);

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Estimate the model on intervention data");
  fit_cmd->add_option("--input", fit.input, "Training CSV (y1..yP,dose)")->required();
  fit_cmd->add_option("--chain", fit.chain_out, "Output chain file")->required();
  fit_cmd->add_option("--levels", fit.levels, "Comma-separated food-quantity levels");
  fit_cmd->add_option("--seed", fit.seed, "RNG seed");
  fit_cmd->add_option("--iters", fit.iters, "MCMC iterations (default 30000)");
  fit_cmd->add_option("--burn", fit.burn, "Burn-in iterations (default 6000)");
  fit_cmd->add_option("--thin", fit.thin, "Thinning interval");
  fit_cmd->add_option("--mh-step-gamma", fit.mh_step_gamma, "Initial cutpoint RW step");
  fit_cmd->add_option("--mh-step-eta", fit.mh_step_eta, "Initial coefficient RW step");
  fit_cmd->add_option("--adapt-window", fit.adapt_window, "Burn-in adaptation window");
  fit_cmd->add_flag("--no-scale", fit.no_scale, "Skip the standardize-and-shift biomarker scaling");
  fit_cmd->add_flag("--stochastic-allocation", fit.stochastic_allocation,
                    "Draw allocations instead of the argmax assignment");
  fit_cmd->add_flag("--theta-init-dose-variances", fit.theta_init_dose_variances,
                    "Initialize component variances from per-dose biomarker variances");
  fit_cmd->add_option("--param-summary", fit.param_summary, "Posterior parameter summary CSV");
  fit_cmd->add_option("--diag", fit.diag_out, "Acceptance-rate diagnostics CSV");

  PredictOptions pred;
  auto* pred_cmd = app.add_subcommand("predict", "Infer intake from biomarker-only data");
  pred_cmd->add_option("--chain", pred.chain_path, "Fitted chain file")->required();
  pred_cmd->add_option("--input", pred.input, "Biomarker CSV (y1..yP)")->required();
  pred_cmd->add_option("--output", pred.output, "Prediction CSV")->required();
  pred_cmd->add_option("--draws", pred.draws_out, "Full predictive draw dump CSV");
  pred_cmd->add_option("--seed", pred.seed, "RNG seed");
  pred_cmd->add_option("--verify-train", pred.train_verify,
                       "Training CSV to fingerprint-check against the chain");
  pred_cmd->add_flag_callback("--scale", [&pred]() { pred.scale_mode = 1; },
                              "Require that the chain was fitted on scaled data");
  pred_cmd->add_flag_callback("--no-scale", [&pred]() { pred.scale_mode = 0; },
                              "Require that the chain was fitted on unscaled data");
  pred_cmd->add_flag("--augmented", pred.augmented,
                     "Continue the sampler with the new rows appended instead of replaying draws");
  pred_cmd->add_option("--train", pred.train_csv, "Training CSV (augmented mode)");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate simulation-study data");
  sim_cmd->add_option("--study", sim.study, "I, II, III, varyingX, uniform, unbalanced or apple");
  sim_cmd->add_option("--scenario", sim.scenario, "S1, S2 or S3");
  sim_cmd->add_option("--range", sim.range, "small, medium or large biomarker range");
  sim_cmd->add_option("--increments", sim.increments, "stable, increasing or decreasing");
  sim_cmd->add_option("--theta", sim.theta, "low or high component variability");
  sim_cmd->add_option("--n", sim.n, "Training sample size");
  sim_cmd->add_option("--d", sim.D, "Number of food quantities");
  sim_cmd->add_option("--p", sim.P, "Number of biomarkers");
  sim_cmd->add_option("--dstar", sim.dstar, "Test component count (varying-X mode)");
  sim_cmd->add_option("--seed", sim.seed, "RNG seed");
  sim_cmd->add_option("--output-prefix", sim.prefix, "Output path prefix")->required();

  LoocvCliOptions loo;
  auto* loo_cmd = app.add_subcommand("loocv", "Leave-one-out cross validation");
  loo_cmd->add_option("--input", loo.input, "Intervention CSV (y1..yP,dose)")->required();
  loo_cmd->add_option("--levels", loo.levels, "Comma-separated food-quantity levels");
  loo_cmd->add_option("--output", loo.output, "Per-observation CSV")->required();
  loo_cmd->add_option("--summary", loo.summary, "Per-dose summary CSV");
  loo_cmd->add_option("--method", loo.method, "multimarker, blr or pls");
  loo_cmd->add_option("--seed", loo.seed, "RNG seed");
  loo_cmd->add_option("--iters", loo.iters, "MCMC iterations per fold");
  loo_cmd->add_option("--burn", loo.burn, "Burn-in per fold");
  loo_cmd->add_option("--thin", loo.thin, "Thinning interval");
  loo_cmd->add_option("--jobs", loo.jobs, "Parallel folds");
  loo_cmd->add_option("--blr-prior-scale", loo.blr_prior_scale, "BLR prior scale");
  loo_cmd->add_option("--pls-components", loo.pls_components, "PLS component count");
  loo_cmd->add_flag("--no-scale", loo.no_scale, "Skip biomarker scaling");

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Simulation-study error tables");
  bench_cmd->add_option("--study", bench.study, "I, II, III, varyingX, uniform or unbalanced");
  bench_cmd->add_option("--scenario", bench.scenario, "S1, S2 or S3");
  bench_cmd->add_option("--range", bench.range, "small, medium or large");
  bench_cmd->add_option("--increments", bench.increments, "stable, increasing or decreasing");
  bench_cmd->add_option("--theta", bench.theta, "low or high");
  bench_cmd->add_option("--n", bench.n, "Training sample size");
  bench_cmd->add_option("--d", bench.D, "Number of food quantities");
  bench_cmd->add_option("--p", bench.P, "Number of biomarkers");
  bench_cmd->add_option("--replicates", bench.replicates, "Datasets per cell");
  bench_cmd->add_option("--seed", bench.seed, "RNG seed");
  bench_cmd->add_option("--iters", bench.iters, "MCMC iterations");
  bench_cmd->add_option("--burn", bench.burn, "Burn-in");
  bench_cmd->add_option("--thin", bench.thin, "Thinning interval");
  bench_cmd->add_option("--methods", bench.methods, "Comma list of multimarker,blr,pls");
  bench_cmd->add_option("--blr-prior-scale", bench.blr_prior_scale, "BLR prior scale");
  bench_cmd->add_option("--pls-components", bench.pls_components, "PLS component count");
  bench_cmd->add_option("--jobs", bench.jobs, "Parallel replicates");
  bench_cmd->add_option("--output", bench.output, "Error-table CSV");

  DiagOptions diag;
  auto* diag_cmd = app.add_subcommand("diag", "Chain diagnostics (ESS, traces)");
  diag_cmd->add_option("--chain", diag.chain_path, "Fitted chain file")->required();
  diag_cmd->add_option("--output", diag.output, "ESS CSV")->required();
  diag_cmd->add_option("--traces", diag.traces, "Tidy trace CSV for plotting");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (fit_cmd->parsed()) {
      log_config("fit", {{"seed", std::to_string(fit.seed)},
                         {"iters", std::to_string(fit.iters)},
                         {"burn", std::to_string(fit.burn)},
                         {"thin", std::to_string(fit.thin)},
                         {"scale", fit.no_scale ? "off" : "on"}});
      return run_fit(fit);
    }
    if (pred_cmd->parsed()) return run_predict(pred);
    if (sim_cmd->parsed()) return run_simulate(sim);
    if (loo_cmd->parsed()) {
      log_config("loocv", {{"seed", std::to_string(loo.seed)},
                           {"iters", std::to_string(loo.iters)},
                           {"burn", std::to_string(loo.burn)},
                           {"jobs", std::to_string(loo.jobs)},
                           {"scale", loo.no_scale ? "off" : "on"}});
      return run_loocv(loo);
    }
    if (bench_cmd->parsed()) return run_bench(bench);
    if (diag_cmd->parsed()) return run_diag(diag);
  } catch (const mm::Error& e) {
    std::cerr << "error: category=" << e.category() << ": " << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: category=internal: " << e.what() << '\n';
    return 10;
  }
  return 2;
}
