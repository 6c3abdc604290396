// Serial vs OpenMP softmax kernels on hypercleaning-sized inputs.

#include <benchmark/benchmark.h>

#include <random>

#include "f2sa/kernels.hpp"

using namespace f2sa;
using namespace f2sa::kernels;

namespace {

struct Inputs {
  Matrix X, W;
  std::vector<int> labels;
  Vector weights;
  Inputs(int d, int n, int C) : X(d, n), W(d, C), labels(n), weights(n) {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> n01;
    for (long i = 0; i < X.size(); ++i) X.data()[i] = n01(rng);
    for (long i = 0; i < W.size(); ++i) W.data()[i] = 0.1 * n01(rng);
    for (int i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(rng() % C);
      weights[i] = 0.5;
    }
  }
};

const Inputs& inputs(int n) {
  static const Inputs small(10, 2000, 4);
  static const Inputs large(784, 20000, 10);
  return n == 2000 ? small : large;
}

template <Backend B>
void BM_LossAndGrad(benchmark::State& state) {
  const Inputs& in = inputs(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(B, in.X, in.labels, in.W, {}));
  state.SetItemsProcessed(state.iterations() * in.X.cols());
}

template <Backend B>
void BM_Hessian(benchmark::State& state) {
  const Inputs& in = inputs(2000);
  for (auto _ : state) benchmark::DoNotOptimize(hessian(B, in.X, in.labels, in.W, in.weights));
  state.SetItemsProcessed(state.iterations() * in.X.cols());
}

template <Backend B>
void BM_PerExampleGrads(benchmark::State& state) {
  const Inputs& in = inputs(2000);
  for (auto _ : state) benchmark::DoNotOptimize(per_example_grads(B, in.X, in.labels, in.W));
  state.SetItemsProcessed(state.iterations() * in.X.cols());
}

}  // namespace

BENCHMARK(BM_LossAndGrad<Backend::Serial>)->Arg(2000)->Arg(20000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LossAndGrad<Backend::OpenMP>)->Arg(2000)->Arg(20000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Hessian<Backend::Serial>)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Hessian<Backend::OpenMP>)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PerExampleGrads<Backend::Serial>)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PerExampleGrads<Backend::OpenMP>)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
