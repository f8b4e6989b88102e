#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "multimarker/distributions.hpp"
#include "multimarker/errors.hpp"
#include "multimarker/ordinal.hpp"
#include "multimarker/rng.hpp"

using namespace multimarker;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace

TEST_SUITE("cauchit link") {
  TEST_CASE("anchor points of the link") {
    // Linear predictor 0 -> 1/2; linear predictor 2 -> atan(1) = pi/4 -> 3/4.
    CHECK(cauchit_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(cauchit_cdf(2.0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(cauchit_cdf(1e12) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(cauchit_cdf(-1e12) == doctest::Approx(0.0).epsilon(1e-10));
  }

  TEST_CASE("cumulative probability through eta . y") {
    const Eigen::VectorXd eta = vec({0.5, -0.25});
    const Eigen::VectorXd y = vec({2.0, 4.0});  // eta.y = 0
    CHECK(cauchit_cumulative(0.0, eta, y) == doctest::Approx(0.5));
    CHECK(cauchit_cumulative(2.0, eta, y) == doctest::Approx(0.75));
    CHECK_THROWS_AS(cauchit_cumulative(0.0, eta, vec({1.0})), ParameterError);
  }

  TEST_CASE("link symmetry identity") {
    RngStream rng(5);
    for (int rep = 0; rep < 200; ++rep) {
      const double g = 10.0 * (rng.uniform() - 0.5);
      const Eigen::VectorXd eta = vec({rng.uniform(), -rng.uniform(), rng.uniform()});
      const Eigen::VectorXd y = vec({rng.uniform() * 4, rng.uniform() * 4, rng.uniform() * 4});
      const double a = cauchit_cumulative(g, eta, y);
      const double b = cauchit_cumulative(-g, -eta, y);
      CHECK(a + b == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_SUITE("component weights") {
  TEST_CASE("D=3 symmetric cutpoints at zero linear predictor") {
    // Oracle: evaluate (1/pi)(atan(+-0.5) + pi/2) directly.
    const double f1 = (std::atan(-0.5) + std::numbers::pi / 2) / std::numbers::pi;
    const double f2 = (std::atan(0.5) + std::numbers::pi / 2) / std::numbers::pi;
    REQUIRE(f1 == doctest::Approx(0.35241638).epsilon(1e-7));
    REQUIRE(f2 - f1 == doctest::Approx(0.29516724).epsilon(1e-7));

    const Eigen::VectorXd w = component_weights_from_lp(vec({-1.0, 1.0}), 0.0, 3);
    CHECK(w(0) == doctest::Approx(0.35242).epsilon(1e-4));
    CHECK(w(1) == doctest::Approx(0.29516).epsilon(1e-3));
    CHECK(w(2) == doctest::Approx(0.35242).epsilon(1e-4));
  }

  TEST_CASE("cutpoints symmetric about -eta.y give a symmetric weight vector") {
    const Eigen::VectorXd eta = vec({1.0});
    const Eigen::VectorXd y = vec({0.7});
    const double s = eta.dot(y);
    const Eigen::VectorXd w = component_weights_from_lp(vec({-2.0 - s, 2.0 - s}), s, 3);
    CHECK(w(0) == doctest::Approx(w(2)).epsilon(1e-12));
  }

  TEST_CASE("weights are a strict simplex for random inputs") {
    RngStream rng(9);
    for (int rep = 0; rep < 500; ++rep) {
      const Eigen::Index D = 2 + static_cast<Eigen::Index>(rng.next_u64() % 5);
      Eigen::VectorXd gamma(D - 1);
      double g = -3.0 * rng.uniform();
      for (Eigen::Index d = 0; d < D - 1; ++d) {
        g += 0.1 + 2.0 * rng.uniform();
        gamma(d) = g;
      }
      const double s = 10.0 * (rng.uniform() - 0.5);
      const Eigen::VectorXd w = component_weights_from_lp(gamma, s, D);
      CHECK(w.sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK((w.array() > 0.0).all());
    }
  }

  TEST_CASE("raising a cutpoint raises the cumulative mass below it") {
    const Eigen::VectorXd w_lo = component_weights_from_lp(vec({-1.0, 1.0}), 0.3, 3);
    const Eigen::VectorXd w_hi = component_weights_from_lp(vec({-0.5, 1.0}), 0.3, 3);
    CHECK(w_hi(0) > w_lo(0));
    CHECK(w_hi(0) + w_hi(1) == doctest::Approx(w_lo(0) + w_lo(1)).epsilon(1e-12));
  }

  TEST_CASE("non-increasing cutpoints are an invariant error") {
    CHECK_THROWS_AS(component_weights_from_lp(vec({1.0, -1.0}), 0.0, 3), ParameterError);
  }
}

namespace {

// Independent binary Cauchit MLE oracle for D=2: coarse grid then local
// coordinate refinement over (gamma_1, eta_1). Only for P=1.
std::pair<double, double> binary_cauchit_oracle(const std::vector<int>& labels,
                                               const Eigen::MatrixXd& Y) {
  auto nll = [&](double g, double e) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < Y.rows(); ++i) {
      const double f = cauchit_cdf(g + e * Y(i, 0));
      const double w = labels[static_cast<std::size_t>(i)] == 0 ? f : 1.0 - f;
      acc -= std::log(std::max(w, 1e-300));
    }
    return acc;
  };
  double best_g = 0.0, best_e = 0.0, best = nll(0.0, 0.0);
  for (double g = -8.0; g <= 8.0; g += 0.1) {
    for (double e = -8.0; e <= 8.0; e += 0.1) {
      const double v = nll(g, e);
      if (v < best) {
        best = v;
        best_g = g;
        best_e = e;
      }
    }
  }
  double step = 0.05;
  while (step > 1e-7) {
    bool improved = false;
    for (const auto& [dg, de] : std::vector<std::pair<double, double>>{
             {step, 0.0}, {-step, 0.0}, {0.0, step}, {0.0, -step},
             {step, step}, {step, -step}, {-step, step}, {-step, -step}}) {
      const double v = nll(best_g + dg, best_e + de);
      if (v < best) {
        best = v;
        best_g += dg;
        best_e += de;
        improved = true;
      }
    }
    if (!improved) step *= 0.5;
  }
  return {best_g, best_e};
}

}  // namespace

TEST_SUITE("ordinal mle") {
  TEST_CASE("separable one-dimensional data classifies its labels perfectly") {
    // Class = threshold on y; likelihood diverges, magnitudes are capped.
    const Eigen::Index n = 60;
    Eigen::MatrixXd Y(n, 1);
    std::vector<int> labels(static_cast<std::size_t>(n));
    RngStream rng(31);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double y = 10.0 * rng.uniform();
      Y(i, 0) = y;
      labels[static_cast<std::size_t>(i)] = (y < 3.0) ? 0 : (y < 7.0 ? 1 : 2);
    }
    const OrdinalFit fit = fit_ordinal_cauchit_mle(labels, Y, 3);
    int correct = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd w = component_weights(fit.model, Y.row(i).transpose(), 3);
      Eigen::Index best = 0;
      for (Eigen::Index d = 1; d < 3; ++d) {
        if (w(d) > w(best)) best = d;
      }
      correct += (static_cast<int>(best) == labels[static_cast<std::size_t>(i)]);
    }
    CHECK(correct == n);
  }

  TEST_CASE("labels independent of the biomarkers give a near-zero coefficient") {
    const Eigen::Index n = 400;
    Eigen::MatrixXd Y(n, 2);
    std::vector<int> labels(static_cast<std::size_t>(n));
    RngStream rng(32);
    std::vector<int> class_count(3, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      Y(i, 0) = rng.uniform();
      Y(i, 1) = rng.uniform();
      const int c = static_cast<int>(rng.next_u64() % 3);
      labels[static_cast<std::size_t>(i)] = c;
      ++class_count[static_cast<std::size_t>(c)];
    }
    const OrdinalFit fit = fit_ordinal_cauchit_mle(labels, Y, 3);
    CHECK(fit.model.eta.cwiseAbs().maxCoeff() < 1.0);

    // Argmax-weight accuracy is close to the majority-class frequency.
    int correct = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::VectorXd w = component_weights(fit.model, Y.row(i).transpose(), 3);
      Eigen::Index best = 0;
      for (Eigen::Index d = 1; d < 3; ++d) {
        if (w(d) > w(best)) best = d;
      }
      correct += (static_cast<int>(best) == labels[static_cast<std::size_t>(i)]);
    }
    const double majority =
        static_cast<double>(*std::max_element(class_count.begin(), class_count.end())) / n;
    const double accuracy = static_cast<double>(correct) / n;
    CHECK(accuracy < majority + 0.1);
  }

  TEST_CASE("D=2 agrees with an independent binary MLE oracle") {
    const Eigen::Index n = 80;
    Eigen::MatrixXd Y(n, 1);
    std::vector<int> labels(static_cast<std::size_t>(n));
    RngStream rng(33);
    for (Eigen::Index i = 0; i < n; ++i) {
      Y(i, 0) = 4.0 * rng.uniform();
      // Overlapping classes so the MLE is interior.
      const double p = cauchit_cdf(1.5 - 1.0 * Y(i, 0));
      labels[static_cast<std::size_t>(i)] = (rng.uniform() < p) ? 0 : 1;
    }
    const OrdinalFit fit = fit_ordinal_cauchit_mle(labels, Y, 2);
    REQUIRE(fit.converged);
    const auto [g_star, e_star] = binary_cauchit_oracle(labels, Y);
    CHECK(fit.model.gamma(0) == doctest::Approx(g_star).epsilon(2e-4));
    CHECK(fit.model.eta(0) == doctest::Approx(e_star).epsilon(2e-4));
  }

  TEST_CASE("empty class is a data error") {
    Eigen::MatrixXd Y(4, 1);
    Y << 1.0, 2.0, 3.0, 4.0;
    const std::vector<int> labels{0, 0, 2, 2};
    CHECK_THROWS_AS(fit_ordinal_cauchit_mle(labels, Y, 3), DataError);
  }

  TEST_CASE("fitted cutpoints are strictly increasing") {
    RngStream rng(34);
    const Eigen::Index n = 200;
    Eigen::MatrixXd Y(n, 3);
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index p = 0; p < 3; ++p) Y(i, p) = 5.0 * rng.uniform();
      labels[static_cast<std::size_t>(i)] = static_cast<int>(rng.next_u64() % 4);
    }
    const OrdinalFit fit = fit_ordinal_cauchit_mle(labels, Y, 4);
    for (Eigen::Index d = 0; d + 1 < fit.model.gamma.size(); ++d) {
      CHECK(fit.model.gamma(d) < fit.model.gamma(d + 1));
    }
  }
}
