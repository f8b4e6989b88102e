#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "multimarker/diagnostics.hpp"
#include "multimarker/errors.hpp"
#include "multimarker/distributions.hpp"
#include "multimarker/rng.hpp"
#include "test_support.hpp"

using namespace multimarker;
namespace ts = test_support;

namespace {
std::vector<double> ar1_chain(double rho, std::size_t n, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> x(n);
  x[0] = sample_normal(rng);
  const double s = std::sqrt(1.0 - rho * rho);
  for (std::size_t t = 1; t < n; ++t) x[t] = rho * x[t - 1] + s * sample_normal(rng);
  return x;
}
}  // namespace

TEST_SUITE("effective sample size") {
  TEST_CASE("white noise recovers nearly the full length") {
    const auto x = ar1_chain(0.0, 10000, 1);
    const EssResult r = effective_sample_size(x);
    CHECK_FALSE(r.degenerate);
    CHECK(r.ess > 9000.0);
    CHECK(r.ess <= 10000.0);
  }

  TEST_CASE("AR(1) with rho = 0.5 lands near n/3") {
    const auto x = ar1_chain(0.5, 100000, 2);
    const EssResult r = effective_sample_size(x);
    const double expected = 100000.0 * (1.0 - 0.5) / (1.0 + 0.5);
    CHECK(std::fabs(r.ess - expected) / expected < 0.15);
  }

  TEST_CASE("constant chain reports n with the degenerate flag") {
    const std::vector<double> x(500, 3.14);
    const EssResult r = effective_sample_size(x);
    CHECK(r.degenerate);
    CHECK(r.ess == 500.0);
  }

  TEST_CASE("too-short chains are rejected") {
    const std::vector<double> x(50, 1.0);
    CHECK_THROWS_AS(effective_sample_size(x), ParameterError);
  }

  TEST_CASE("affine transforms leave the estimate unchanged") {
    const auto x = ar1_chain(0.6, 20000, 3);
    std::vector<double> y(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) y[t] = -4.0 * x[t] + 11.0;
    const double ex = effective_sample_size(x).ess;
    const double ey = effective_sample_size(y).ess;
    CHECK(ex == doctest::Approx(ey).epsilon(1e-10));
  }
}

TEST_SUITE("error summaries") {
  TEST_CASE("perfect estimates give zeros") {
    const std::vector<double> t{10.0, 20.0, 30.0};
    const ErrorSummary s = error_summary(t, t);
    CHECK(s.median_abs == 0.0);
    CHECK(s.width95 == 0.0);
  }

  TEST_CASE("errors 1..100: order statistics of the absolute errors") {
    std::vector<double> truth(100, 0.0), est(100);
    for (int i = 0; i < 100; ++i) est[static_cast<std::size_t>(i)] = i + 1.0;
    const ErrorSummary s = error_summary(truth, est);
    CHECK(s.median_abs == doctest::Approx(50.5).epsilon(1e-12));
    // Interpolated order statistics: q97.5 - q2.5 = 97.525 - 3.475.
    CHECK(s.width95 == doctest::Approx(94.05).epsilon(1e-10));
  }

  TEST_CASE("sign symmetry and scale equivariance") {
    RngStream rng(4);
    std::vector<double> truth(60), est_plus(60), est_minus(60);
    for (int i = 0; i < 60; ++i) {
      truth[static_cast<std::size_t>(i)] = 100.0 * rng.uniform();
      const double e = 20.0 * (rng.uniform() - 0.5);
      est_plus[static_cast<std::size_t>(i)] = truth[static_cast<std::size_t>(i)] + e;
      est_minus[static_cast<std::size_t>(i)] = truth[static_cast<std::size_t>(i)] - e;
    }
    const ErrorSummary sp = error_summary(truth, est_plus);
    const ErrorSummary sm = error_summary(truth, est_minus);
    CHECK(sp.median_abs == doctest::Approx(sm.median_abs).epsilon(1e-12));
    CHECK(sp.width95 == doctest::Approx(sm.width95).epsilon(1e-12));

    std::vector<double> t3(truth), e3(est_plus);
    for (auto& v : t3) v *= 3.0;
    for (auto& v : e3) v *= 3.0;
    const ErrorSummary s3 = error_summary(t3, e3);
    CHECK(s3.median_abs == doctest::Approx(3.0 * sp.median_abs).epsilon(1e-12));
    CHECK(s3.width95 == doctest::Approx(3.0 * sp.width95).epsilon(1e-12));
  }

  TEST_CASE("length mismatch rejected") {
    const std::vector<double> a{1.0, 2.0}, b{1.0};
    CHECK_THROWS_AS(error_summary(a, b), ParameterError);
  }
}

TEST_SUITE("leave-one-out cross validation") {
  TEST_CASE("three observations run exactly three fits") {
    Dataset d;
    d.levels = Eigen::Vector3d(50.0, 100.0, 300.0);
    d.Y.resize(3, 2);
    d.Y << 1.0, 2.0, 1.5, 2.5, 3.5, 4.5;
    d.dose = Eigen::Vector3d(50.0, 100.0, 300.0);
    SamplerConfig cfg;
    cfg.n_iter = 150;
    cfg.n_burn = 50;
    cfg.seed = 5;
    const LoocvResult res = loocv(d, cfg);
    CHECK(res.observations.size() == 3);
    for (const auto& obs : res.observations) {
      CHECK(obs.ci_low <= obs.median);
      CHECK(obs.median <= obs.ci_high);
    }
    CHECK(res.per_dose_median_abs.size() == 3);
  }

  TEST_CASE("fold results do not depend on execution parallelism") {
    const SimulatedPair pair = generate_apple_like(61);
    // Eight rows spread across the three doses so every fold keeps at least
    // two distinct dose levels.
    Dataset small;
    small.levels = pair.train.levels;
    small.Y.resize(8, pair.train.P());
    Eigen::VectorXd dose(8);
    const Eigen::Index rows[8] = {0, 1, 2, 29, 30, 57, 58, 59};
    for (int k = 0; k < 8; ++k) {
      small.Y.row(k) = pair.train.Y.row(rows[k]);
      dose(k) = (*pair.train.dose)(rows[k]);
    }
    small.dose = dose;
    SamplerConfig cfg;
    cfg.n_iter = 200;
    cfg.n_burn = 50;
    cfg.seed = 6;
    LoocvOptions serial_opts;
    serial_opts.jobs = 1;
    const LoocvResult serial = loocv(small, cfg, serial_opts);
    LoocvOptions parallel_opts;
    parallel_opts.jobs = 3;
    const LoocvResult parallel = loocv(small, cfg, parallel_opts);
    REQUIRE(serial.observations.size() == parallel.observations.size());
    for (std::size_t i = 0; i < serial.observations.size(); ++i) {
      CHECK(serial.observations[i].median == parallel.observations[i].median);
      CHECK(serial.observations[i].ci_low == parallel.observations[i].ci_low);
    }
  }

  TEST_CASE("synthetic apple-structured data: per-dose medians within reach of the noise") {
    // Truth is known by construction; with theta around 5.5-20 g the
    // per-dose median absolute differences should stay within twice the
    // component scale at each dose.
    const SimulatedPair pair = generate_apple_like(62);
    Dataset data = pair.train;
    data.Y = scale_biomarkers(data.Y);
    SamplerConfig cfg;
    cfg.n_iter = 1200;
    cfg.n_burn = 300;
    cfg.seed = 7;
    const LoocvResult res = loocv(data, cfg);
    REQUIRE(res.per_dose_median_abs.size() == 3);
    const double scales[3] = {5.5, 7.5, 20.0};
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(res.per_dose_median_abs[d].second < 2.0 * 4.0 * scales[d] + 20.0);
    }
  }
}

TEST_SUITE("error table") {
  TEST_CASE("csv and text renderings carry every row") {
    ErrorTable t;
    t.rows.push_back({"I", "S1", "multimarker", "E", 3.0, 7.0});
    t.rows.push_back({"I", "S1", "multimarker", "I", 4.0, 9.0});
    t.rows.push_back({"I", "S1", "blr", "E", 77.0, 200.0});
    const std::string path = "mm_test_table.csv";
    write_error_table_csv(path, t);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "study,scenario,method,phase,median_abs_error,ci95_width");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 3);
    std::remove(path.c_str());

    const std::string text = format_error_table_text(t);
    CHECK(text.find("multimarker") != std::string::npos);
    CHECK(text.find("blr") != std::string::npos);
    CHECK(text.find("3.0(7.0)") != std::string::npos);
  }
}
