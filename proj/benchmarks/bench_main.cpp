#include "salab/lyapunov.hpp"
#include "salab/simulate.hpp"
#include "salab/stats.hpp"

#include <benchmark/benchmark.h>

using namespace salab;

namespace {

void BM_SaStepQuadratic(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const auto op = make_grad_quadratic(Mat::Identity(d, d), Vec::Zero(d));
  const NoiseModel nm(NoiseShape::gaussian, Mat::Identity(d, d));
  SaStepper step(op, nm, 0.01);
  RngState rng = seed_rng(1, 0);
  std::vector<double> x(d, 0.0);
  for (auto _ : state) {
    step(x, rng);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SaStepQuadratic)->Arg(1)->Arg(4)->Arg(16);

void BM_SaStepQuartic(benchmark::State& state) {
  const auto op = make_quartic();
  const NoiseModel nm(NoiseShape::gaussian, Mat::Identity(1, 1));
  SaStepper step(op, nm, 0.001);
  RngState rng = seed_rng(1, 0);
  std::vector<double> x(1, 0.0);
  for (auto _ : state) {
    step(x, rng);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SaStepQuartic);

void BM_SolveLyapunov(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  RngState rng = seed_rng(2, 0);
  Mat m(d, d);
  for (int i = 0; i < d * d; ++i) m.data()[i] = 0.3 * rng.normal();
  m -= (check_hurwitz(m).max_real_part + 1.0) * Mat::Identity(d, d);
  const Mat s = Mat::Identity(d, d);
  for (auto _ : state) benchmark::DoNotOptimize(solve_lyapunov(m, s).sigma_y.data());
}
BENCHMARK(BM_SolveLyapunov)->Arg(2)->Arg(8)->Arg(24);

void BM_SolveLyapunovIntegral(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  RngState rng = seed_rng(2, 0);
  Mat m(d, d);
  for (int i = 0; i < d * d; ++i) m.data()[i] = 0.3 * rng.normal();
  m -= (check_hurwitz(m).max_real_part + 1.0) * Mat::Identity(d, d);
  const Mat s = Mat::Identity(d, d);
  for (auto _ : state) benchmark::DoNotOptimize(solve_lyapunov_integral(m, s).sigma_y.data());
}
BENCHMARK(BM_SolveLyapunovIntegral)->Arg(2)->Arg(8);

void BM_EstimateDensity(benchmark::State& state) {
  RngState rng = seed_rng(3, 0);
  std::vector<double> s(static_cast<std::size_t>(state.range(0)));
  for (double& x : s) x = rng.normal();
  const auto grid = linspace(-5, 5, 1201);
  for (auto _ : state) benchmark::DoNotOptimize(estimate_density(s, grid).density.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstimateDensity)->Arg(10000)->Arg(1000000);

}  // namespace

BENCHMARK_MAIN();
