#include "multimarker/diagnostics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include "multimarker/baselines.hpp"
#include "multimarker/errors.hpp"
#include "multimarker/sampler.hpp"
#include "multimarker/stats_util.hpp"

namespace multimarker {

EssResult effective_sample_size(std::span<const double> draws) {
  const std::size_t n = draws.size();
  if (n < 100) throw ParameterError("effective_sample_size needs at least 100 draws");
  const double nn = static_cast<double>(n);
  const auto [mn, mx] = std::minmax_element(draws.begin(), draws.end());
  if (*mn == *mx) return {nn, true};  // constant chain
  double mean = 0.0;
  for (double x : draws) mean += x;
  mean /= nn;
  double var = 0.0;
  for (double x : draws) var += (x - mean) * (x - mean);
  var /= nn;
  if (!(var > 0.0)) return {nn, true};

  auto rho = [&](std::size_t k) {
    double acc = 0.0;
    for (std::size_t t = 0; t + k < n; ++t) acc += (draws[t] - mean) * (draws[t + k] - mean);
    return acc / (nn * var);
  };

  // Geyer initial positive sequence: sum consecutive autocorrelation pairs
  // while they stay positive.
  double tau = -1.0;
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    const double pair = rho(2 * m) + rho(2 * m + 1);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  if (!(tau >= 1.0)) tau = 1.0;  // anti-correlated chains are capped at n
  const double ess = std::min(nn, nn / tau);
  return {std::max(1.0, ess), false};
}

ErrorSummary error_summary(std::span<const double> true_z, std::span<const double> est_z) {
  if (true_z.size() != est_z.size()) {
    throw ParameterError("error_summary: input lengths differ");
  }
  if (true_z.empty()) throw ParameterError("error_summary: empty inputs");
  std::vector<double> abs_err(true_z.size());
  for (std::size_t i = 0; i < true_z.size(); ++i) abs_err[i] = std::fabs(true_z[i] - est_z[i]);
  std::sort(abs_err.begin(), abs_err.end());
  ErrorSummary s;
  s.median_abs = quantile_sorted(abs_err, 0.5);
  s.width95 = quantile_sorted(abs_err, 0.975) - quantile_sorted(abs_err, 0.025);
  return s;
}

void write_error_table_csv(const std::string& path, const ErrorTable& table) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write error table: " + path);
  out << "study,scenario,method,phase,median_abs_error,ci95_width\n";
  for (const auto& r : table.rows) {
    out << r.study << ',' << r.scenario << ',' << r.method << ',' << r.phase << ','
        << format_double(r.median_abs) << ',' << format_double(r.width95) << '\n';
  }
}

std::string format_error_table_text(const ErrorTable& table) {
  // Column blocks by study, rows by method/phase, median(width) cells.
  std::vector<std::string> studies, scenarios, methods;
  auto remember = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  std::map<std::string, const ErrorTableRow*> cells;
  for (const auto& r : table.rows) {
    remember(studies, r.study);
    remember(scenarios, r.scenario);
    remember(methods, r.method);
    cells[r.study + '|' + r.scenario + '|' + r.method + '|' + r.phase] = &r;
  }
  std::ostringstream os;
  os << std::left << std::setw(14) << "method" << std::setw(6) << "phase";
  for (const auto& st : studies) {
    for (const auto& sc : scenarios) {
      os << std::setw(14) << (st + "/" + sc);
    }
  }
  os << '\n';
  for (const auto& m : methods) {
    for (const std::string phase : {"E", "I"}) {
      os << std::left << std::setw(14) << m << std::setw(6) << phase;
      for (const auto& st : studies) {
        for (const auto& sc : scenarios) {
          auto it = cells.find(st + '|' + sc + '|' + m + '|' + phase);
          if (it == cells.end()) {
            os << std::setw(14) << "-";
          } else {
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(1) << it->second->median_abs << '('
                 << std::setprecision(1) << it->second->width95 << ')';
            os << std::setw(14) << cell.str();
          }
        }
      }
      os << '\n';
    }
  }
  return os.str();
}

namespace {

// Posterior medians of the latent training intakes, used as the "estimated"
// intakes scored against the simulated truth.
Eigen::VectorXd posterior_median_z(const PosteriorChain& chain) {
  const Eigen::Index n = chain.n;
  Eigen::VectorXd med(n);
  std::vector<double> buf(chain.draws.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < chain.draws.size(); ++t) buf[t] = chain.draws[t].z(i);
    std::sort(buf.begin(), buf.end());
    med(i) = quantile_sorted(buf, 0.5);
  }
  return med;
}

struct ReplicateErrors {
  std::vector<double> mm_est, mm_inf, blr_est, blr_inf, pls_est, pls_inf;
};

ReplicateErrors bench_replicate(const BenchConfig& cfg, int rep) {
  ScenarioConfig sc = cfg.scenario;
  sc.seed = RngStream(cfg.scenario.seed).substream(static_cast<std::uint64_t>(rep)).seed();
  const SimulatedPair pair = generate(sc);

  ReplicateErrors out;
  auto abs_errors = [](const Eigen::VectorXd& truth, const Eigen::VectorXd& est,
                       std::vector<double>& sink) {
    for (Eigen::Index i = 0; i < truth.size(); ++i) sink.push_back(std::fabs(truth(i) - est(i)));
  };

  if (cfg.run_multimarker) {
    SamplerConfig scfg = cfg.sampler;
    scfg.seed = RngStream(cfg.sampler.seed).substream(static_cast<std::uint64_t>(rep)).seed() + 1;
    const Hyperparameters hyp = derive_hyperparameters(pair.train);
    const PosteriorChain chain = run_chain(pair.train, hyp, scfg);
    abs_errors(pair.truth.train_z, posterior_median_z(chain), out.mm_est);

    RngStream pred_rng(scfg.seed ^ 0xabcdef12345ULL);
    const auto preds = sample_predictive(pair.test.Y, chain, pred_rng);
    Eigen::VectorXd inf(pair.test.n());
    for (Eigen::Index j = 0; j < pair.test.n(); ++j) inf(j) = preds[static_cast<std::size_t>(j)].median;
    abs_errors(pair.truth.test_z, inf, out.mm_inf);
  }
  if (cfg.run_blr) {
    const BlrModel blr = fit_blr(pair.train, cfg.blr_prior_scale);
    const auto fit_preds = predict_blr(blr, pair.train.Y);
    Eigen::VectorXd est(pair.train.n());
    for (Eigen::Index i = 0; i < pair.train.n(); ++i) est(i) = fit_preds[static_cast<std::size_t>(i)].median;
    abs_errors(pair.truth.train_z, est, out.blr_est);
    const auto preds = predict_blr(blr, pair.test.Y);
    Eigen::VectorXd inf(pair.test.n());
    for (Eigen::Index j = 0; j < pair.test.n(); ++j) inf(j) = preds[static_cast<std::size_t>(j)].median;
    abs_errors(pair.truth.test_z, inf, out.blr_inf);
  }
  if (cfg.run_pls) {
    const int ncomp = static_cast<int>(std::min<Eigen::Index>(cfg.pls_components, pair.train.P()));
    const PlsModel pls = fit_pls(pair.train, ncomp);
    const auto fit_preds = predict_pls(pls, pair.train.Y);
    Eigen::VectorXd est(pair.train.n());
    for (Eigen::Index i = 0; i < pair.train.n(); ++i) est(i) = fit_preds[static_cast<std::size_t>(i)].median;
    abs_errors(pair.truth.train_z, est, out.pls_est);
    const auto preds = predict_pls(pls, pair.test.Y);
    Eigen::VectorXd inf(pair.test.n());
    for (Eigen::Index j = 0; j < pair.test.n(); ++j) inf(j) = preds[static_cast<std::size_t>(j)].median;
    abs_errors(pair.truth.test_z, inf, out.pls_inf);
  }
  return out;
}

ErrorSummary summarize_pooled(const std::vector<double>& abs_err) {
  std::vector<double> sorted = abs_err;
  std::sort(sorted.begin(), sorted.end());
  ErrorSummary s;
  s.median_abs = quantile_sorted(sorted, 0.5);
  s.width95 = quantile_sorted(sorted, 0.975) - quantile_sorted(sorted, 0.025);
  return s;
}

}  // namespace

ErrorTable run_bench(const BenchConfig& cfg) {
  if (cfg.replicates < 1) throw ParameterError("run_bench: replicates must be positive");
  std::vector<ReplicateErrors> reps(static_cast<std::size_t>(cfg.replicates));

  const int jobs = std::max(1, cfg.jobs);
  if (jobs == 1) {
    for (int r = 0; r < cfg.replicates; ++r) reps[static_cast<std::size_t>(r)] = bench_replicate(cfg, r);
  } else {
    std::atomic<int> next{0};
    auto worker = [&]() {
      for (;;) {
        const int r = next.fetch_add(1);
        if (r >= cfg.replicates) break;
        reps[static_cast<std::size_t>(r)] = bench_replicate(cfg, r);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ReplicateErrors pooled;
  for (const auto& r : reps) {
    auto append = [](std::vector<double>& dst, const std::vector<double>& src) {
      dst.insert(dst.end(), src.begin(), src.end());
    };
    append(pooled.mm_est, r.mm_est);
    append(pooled.mm_inf, r.mm_inf);
    append(pooled.blr_est, r.blr_est);
    append(pooled.blr_inf, r.blr_inf);
    append(pooled.pls_est, r.pls_est);
    append(pooled.pls_inf, r.pls_inf);
  }

  ErrorTable table;
  const std::string study = to_string(cfg.scenario.study);
  const std::string scen = to_string(cfg.scenario.scenario);
  auto add = [&](const std::string& method, const std::string& phase,
                 const std::vector<double>& errs) {
    if (errs.empty()) return;
    const ErrorSummary s = summarize_pooled(errs);
    table.rows.push_back({study, scen, method, phase, s.median_abs, s.width95});
  };
  add("multimarker", "E", pooled.mm_est);
  add("multimarker", "I", pooled.mm_inf);
  add("blr", "E", pooled.blr_est);
  add("blr", "I", pooled.blr_inf);
  add("pls", "E", pooled.pls_est);
  add("pls", "I", pooled.pls_inf);
  return table;
}

LoocvResult loocv(const Dataset& data, const SamplerConfig& cfg, const LoocvOptions& opts) {
  if (!data.has_dose()) throw UsageError("loocv requires intervention data with doses");
  const Eigen::Index n = data.n();
  LoocvResult result;
  result.method = opts.method;
  result.observations.resize(static_cast<std::size_t>(n));

  auto run_fold = [&](Eigen::Index i) {
    Dataset fold;
    fold.Y.resize(n - 1, data.P());
    Eigen::VectorXd dose(n - 1);
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == i) continue;
      fold.Y.row(k) = data.Y.row(r);
      dose(k) = (*data.dose)(r);
      ++k;
    }
    fold.dose = dose;
    fold.levels = data.levels;

    LoocvObservation obs;
    obs.index = i;
    obs.dose = (*data.dose)(i);

    if (opts.method == LoocvMethod::Multimarker) {
      // Fold-specific hyperparameters and an independent seed per fold.
      const Hyperparameters hyp = derive_hyperparameters(fold);
      SamplerConfig fold_cfg = cfg;
      fold_cfg.seed = RngStream(cfg.seed).substream(static_cast<std::uint64_t>(i)).seed() + 1;
      const PosteriorChain chain = run_chain(fold, hyp, fold_cfg);

      RngStream pred_rng(fold_cfg.seed ^ 0x5ca1ab1eULL);
      const auto preds = sample_predictive(data.Y.row(i), chain, pred_rng);
      const PredictiveResult& pr = preds.front();
      obs.median = pr.median;
      obs.ci_low = pr.ci95.first;
      obs.ci_high = pr.ci95.second;
      obs.component_freq = pr.component_freq;
    } else if (opts.method == LoocvMethod::Blr) {
      const BlrModel model = fit_blr(fold, opts.blr_prior_scale);
      const auto preds = predict_blr(model, data.Y.row(i));
      obs.median = preds.front().median;
      obs.ci_low = preds.front().lo;
      obs.ci_high = preds.front().hi;
    } else {
      const int ncomp = static_cast<int>(std::min<Eigen::Index>(opts.pls_components, fold.P()));
      const PlsModel model = fit_pls(fold, ncomp);
      const auto preds = predict_pls(model, data.Y.row(i));
      obs.median = preds.front().median;
      obs.ci_low = preds.front().lo;
      obs.ci_high = preds.front().hi;
    }
    obs.difference = obs.median - obs.dose;
    result.observations[static_cast<std::size_t>(i)] = std::move(obs);
  };

  const int n_jobs = std::max(1, opts.jobs);
  if (n_jobs == 1) {
    for (Eigen::Index i = 0; i < n; ++i) run_fold(i);
  } else {
    std::atomic<Eigen::Index> next{0};
    auto worker = [&]() {
      for (;;) {
        const Eigen::Index i = next.fetch_add(1);
        if (i >= n) break;
        run_fold(i);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < n_jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Per-dose median absolute differences (the headline quantities of the
  // cross-validation summary).
  for (Eigen::Index d = 0; d < data.D(); ++d) {
    std::vector<double> abs_diffs;
    for (const auto& obs : result.observations) {
      if (obs.dose == data.levels(d)) abs_diffs.push_back(std::fabs(obs.difference));
    }
    if (!abs_diffs.empty()) {
      result.per_dose_median_abs.emplace_back(data.levels(d), median(std::move(abs_diffs)));
    }
  }

  std::vector<double> doses, medians;
  for (const auto& obs : result.observations) {
    doses.push_back(obs.dose);
    medians.push_back(obs.median);
  }
  const ErrorSummary s = error_summary(doses, medians);
  result.table.rows.push_back({"loocv", "-", to_string(opts.method), "I", s.median_abs, s.width95});
  return result;
}

std::string to_string(LoocvMethod m) {
  switch (m) {
    case LoocvMethod::Multimarker: return "multimarker";
    case LoocvMethod::Blr: return "blr";
    case LoocvMethod::Pls: return "pls";
  }
  return "?";
}

LoocvMethod loocv_method_from_string(const std::string& s) {
  if (s == "multimarker" || s == "mm") return LoocvMethod::Multimarker;
  if (s == "blr") return LoocvMethod::Blr;
  if (s == "pls") return LoocvMethod::Pls;
  throw UsageError("unknown method: " + s);
}

}  // namespace multimarker
