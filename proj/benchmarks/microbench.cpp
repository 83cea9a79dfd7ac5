#include <benchmark/benchmark.h>

#include "mfbo/acquisition.hpp"
#include "mfbo/benchmarks.hpp"
#include "mfbo/gp.hpp"
#include "mfbo/math_stats.hpp"
#include "mfbo/mf_gp.hpp"

namespace {

mfbo::ObservationSet forrester_data(int n, int levels) {
  mfbo::RandomStream s(11);
  mfbo::ObservationSet data(1);
  for (int l = 1; l <= levels; ++l) {
    const Eigen::MatrixXd u = mfbo::latin_hypercube(n, 1, s);
    const int level = 4 - levels + l;
    for (Eigen::Index i = 0; i < u.cols(); ++i) data.add(u.col(i), l, mfbo::formulas::forrester(level, u(0, i)));
  }
  return data;
}

void BM_CholeskyFactor(benchmark::State& state) {
  const auto n = state.range(0);
  mfbo::RandomStream s(3);
  const Eigen::MatrixXd x = mfbo::latin_hypercube(n, 3, s);
  Eigen::MatrixXd k = mfbo::kernel_matrix({Eigen::VectorXd::Constant(3, 0.3), 1.0, 0.0}, x, x);
  k.diagonal().array() += 1e-6;
  for (auto _ : state) benchmark::DoNotOptimize(mfbo::spd_factor(k));
  state.SetComplexityN(n);
}
BENCHMARK(BM_CholeskyFactor)->RangeMultiplier(2)->Range(64, 1024)->Complexity(benchmark::oNCubed);

void BM_FitGp(benchmark::State& state) {
  const auto data = forrester_data(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) {
    mfbo::RandomStream s(5);
    benchmark::DoNotOptimize(mfbo::fit_gp(data, s));
  }
}
BENCHMARK(BM_FitGp)->Arg(10)->Arg(40)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FitMfGp(benchmark::State& state) {
  const auto data = forrester_data(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) {
    mfbo::RandomStream s(5);
    benchmark::DoNotOptimize(mfbo::fit_mf_gp(data, s));
  }
}
BENCHMARK(BM_FitMfGp)->Arg(10)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_PredictBatch(benchmark::State& state) {
  const auto data = forrester_data(static_cast<int>(state.range(0)), 1);
  mfbo::RandomStream s(5);
  const auto g = mfbo::fit_gp(data, s);
  const Eigen::MatrixXd cand = mfbo::latin_hypercube(1000, 1, s);
  Eigen::VectorXd m, sd;
  for (auto _ : state) {
    g.predict(cand, m, sd);
    benchmark::DoNotOptimize(sd.data());
  }
}
BENCHMARK(BM_PredictBatch)->Arg(20)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_MinValueSampler(benchmark::State& state) {
  const auto data = forrester_data(10, 1);
  mfbo::RandomStream s(5);
  const auto g = mfbo::fit_gp(data, s);
  for (auto _ : state) benchmark::DoNotOptimize(mfbo::sample_min_values(g, {10, 100}, s));
}
BENCHMARK(BM_MinValueSampler)->Unit(benchmark::kMicrosecond);

void BM_SpringMassHighFidelity(benchmark::State& state) {
  Eigen::VectorXd x(4);
  x << 2.0, 3.0, 1.5, 2.5;
  for (auto _ : state) benchmark::DoNotOptimize(mfbo::formulas::spring_mass(2, x));
}
BENCHMARK(BM_SpringMassHighFidelity)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
