// Micro-benchmarks for the hot paths: variate kernels, weight evaluation,
// one full Gibbs sweep and one posterior predictive pass.

#include <benchmark/benchmark.h>

#include <limits>

#include "multimarker/distributions.hpp"
#include "multimarker/ordinal.hpp"
#include "multimarker/predict.hpp"
#include "multimarker/sampler.hpp"
#include "multimarker/simulate.hpp"

namespace mm = multimarker;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void BM_TruncatedNormalCentral(benchmark::State& state) {
  mm::RngStream rng(1);
  const mm::TruncNormalParams p{100.0, 64.0, 0.0, kInf};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mm::sample_truncated_normal(p, rng));
  }
}
BENCHMARK(BM_TruncatedNormalCentral);

void BM_TruncatedNormalTail(benchmark::State& state) {
  mm::RngStream rng(2);
  const mm::TruncNormalParams p{0.0, 1.0, 9.0, kInf};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mm::sample_truncated_normal(p, rng));
  }
}
BENCHMARK(BM_TruncatedNormalTail);

void BM_InverseGamma(benchmark::State& state) {
  mm::RngStream rng(3);
  const mm::InvGammaParams p{50.5, 1200.0};
  for (auto _ : state) {
    benchmark::DoNotOptimize(mm::sample_inverse_gamma(p, rng));
  }
}
BENCHMARK(BM_InverseGamma);

void BM_ComponentWeights(benchmark::State& state) {
  Eigen::VectorXd gamma(2);
  gamma << -1.2, 0.7;
  double s = 0.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(mm::component_weights_from_lp(gamma, s, 3));
    s += 1e-6;
  }
}
BENCHMARK(BM_ComponentWeights);

struct SweepFixture {
  mm::SimulatedPair pair = mm::generate_apple_like(5);
  mm::Hyperparameters hyp = mm::derive_hyperparameters(pair.train);
  mm::ModelState state;
  mm::RngStream rng{7};
  SweepFixture() {
    mm::RngStream init(6);
    state = mm::initialize_state(pair.train, hyp, init);
  }
};

void BM_FullSweep(benchmark::State& state) {
  SweepFixture fx;
  for (auto _ : state) {
    fx.state = mm::update_alpha_beta(std::move(fx.state), fx.pair.train, fx.hyp, fx.rng);
    fx.state = mm::update_sigma_p(std::move(fx.state), fx.pair.train, fx.hyp, fx.rng);
    fx.state = mm::update_nuisance(std::move(fx.state), fx.hyp, fx.rng);
    auto [moved, diag] =
        mm::update_gamma_eta(std::move(fx.state), fx.pair.train, fx.hyp, fx.rng, 0.5, 0.1);
    fx.state = std::move(moved);
    fx.state = mm::update_weights_allocations(std::move(fx.state), fx.pair.train, fx.rng);
    fx.state = mm::update_latent(std::move(fx.state), fx.pair.train, fx.hyp, fx.rng);
    benchmark::DoNotOptimize(fx.state.z.sum());
  }
}
BENCHMARK(BM_FullSweep);

void BM_PredictivePass(benchmark::State& state) {
  SweepFixture fx;
  mm::SamplerConfig cfg;
  cfg.n_iter = 600;
  cfg.n_burn = 100;
  cfg.seed = 8;
  const mm::PosteriorChain chain = mm::run_chain(fx.pair.train, fx.hyp, cfg);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    mm::RngStream rng(++seed);
    benchmark::DoNotOptimize(mm::sample_predictive(fx.pair.test.Y.topRows(4), chain, rng));
  }
}
BENCHMARK(BM_PredictivePass);

}  // namespace

BENCHMARK_MAIN();
