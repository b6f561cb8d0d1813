#include <benchmark/benchmark.h>

#include <cmath>

#include "resochain/dispersion.hpp"
#include "resochain/kriging.hpp"
#include "resochain/optimizer.hpp"
#include "resochain/random.hpp"
#include "resochain/simulate.hpp"
#include "resochain/svm.hpp"

using namespace resochain;

namespace {

Eigen::MatrixXd random_points(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k) x(i, k) = rng.uniform();
  return x;
}

void BM_Accelerations(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto chain = ChainSpec::uniform(NondimUnit{0.5, 0.5, 5e-4, 0.0, 0.0}, n);
  std::vector<double> v1(n, 0.1), v2(n, -0.1), d1(n, 0.0), d2(n, 0.0), a1(n), a2(n);
  for (auto _ : state) {
    accelerations_into(chain, v1, v2, d1, d2, a1, a2);
    benchmark::DoNotOptimize(a1.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Accelerations)->Arg(100)->Arg(1000);

void BM_Simulate(benchmark::State& state) {
  const auto chain = ChainSpec::uniform(NondimUnit{0.5, 0.5, 5e-4, 0.0, 0.0}, 1000);
  Excitation e;
  e.amplitude = 10.0;
  e.frequencies = {0.5, 1.25};
  SimConfig cfg;
  cfg.t_end = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(simulate(chain, e, cfg).rms.at(100));
}
BENCHMARK(BM_Simulate)->Arg(150)->Arg(1500)->Unit(benchmark::kMillisecond);

void BM_KrigingPredict(benchmark::State& state) {
  const auto n = state.range(0);
  const Eigen::MatrixXd x = random_points(n, 6, 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = std::sin(3 * x(i, 0)) + x(i, 1);
  const auto m = kriging_build(x, y, std::vector<double>(6, 2.0), 1e-8);
  const std::vector<double> q(6, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(m.mean(q));
}
BENCHMARK(BM_KrigingPredict)->Arg(75)->Arg(200);

void BM_KrigingFit(benchmark::State& state) {
  const auto n = state.range(0);
  const Eigen::MatrixXd x = random_points(n, 6, 2);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = std::sin(3 * x(i, 0)) + x(i, 1);
  for (auto _ : state) benchmark::DoNotOptimize(kriging_fit(x, y).beta());
}
BENCHMARK(BM_KrigingFit)->Arg(75)->Unit(benchmark::kMillisecond);

void BM_SvmEval(benchmark::State& state) {
  const Eigen::MatrixXd x = random_points(150, 6, 3);
  std::vector<int> labels(150);
  for (int i = 0; i < 150; ++i) labels[static_cast<std::size_t>(i)] = x(i, 0) + x(i, 1) > 1.0 ? 1 : -1;
  const auto m = svm_train(x, labels);
  const std::vector<double> q(6, 0.4);
  for (auto _ : state) benchmark::DoNotOptimize(m.eval(q));
}
BENCHMARK(BM_SvmEval);

void BM_GalerkinResidual(benchmark::State& state) {
  HBConfig cfg;
  cfg.n_harmonics = static_cast<std::size_t>(state.range(0));
  const NondimUnit u{0.5, 0.5, 5e-4, 0.0, 0.0};
  const auto s = linear_solution(u, 1.0, Branch::kOptical, cfg);
  for (auto _ : state) benchmark::DoNotOptimize(galerkin_residual(u, 10.0, 1.0, s.omega_bar, s.lambda, cfg));
}
BENCHMARK(BM_GalerkinResidual)->Arg(1)->Arg(3);

}  // namespace

BENCHMARK_MAIN();
