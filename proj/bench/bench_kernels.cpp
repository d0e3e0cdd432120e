#include <benchmark/benchmark.h>

#include <random>

#include "mida/kernels.hpp"

namespace {

Eigen::MatrixXd random_cols(Eigen::Index dims, Eigen::Index n) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd X(dims, n);
  for (Eigen::Index k = 0; k < X.size(); ++k) X.data()[k] = dist(rng);
  return X;
}

void gram_parallel(benchmark::State& state) {
  const Eigen::MatrixXd X = random_cols(64, state.range(0));
  const mida::KernelSpec spec = mida::KernelSpec::rbf(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(mida::gram(spec, X));
}

void gram_serial(benchmark::State& state) {
  const Eigen::MatrixXd X = random_cols(64, state.range(0));
  const mida::KernelSpec spec = mida::KernelSpec::rbf(2.0);
  for (auto _ : state) benchmark::DoNotOptimize(mida::reference::gram(spec, X));
}

void hsic_parallel(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const mida::GramMatrix kx = mida::gram(mida::KernelSpec::rbf(2.0), random_cols(64, n));
  const mida::GramMatrix ky = mida::gram(mida::KernelSpec::linear(), random_cols(8, n));
  for (auto _ : state) benchmark::DoNotOptimize(mida::hsic_empirical(kx, ky));
}

void hsic_serial(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  const mida::GramMatrix kx = mida::gram(mida::KernelSpec::rbf(2.0), random_cols(64, n));
  const mida::GramMatrix ky = mida::gram(mida::KernelSpec::linear(), random_cols(8, n));
  for (auto _ : state) benchmark::DoNotOptimize(mida::reference::hsic_empirical(kx, ky));
}

}  // namespace

BENCHMARK(gram_parallel)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(gram_serial)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(hsic_parallel)->Arg(256)->Arg(1024)->Arg(4096);
BENCHMARK(hsic_serial)->Arg(256)->Arg(1024)->Arg(4096);

BENCHMARK_MAIN();
