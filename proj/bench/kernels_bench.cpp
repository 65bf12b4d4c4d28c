// Serial reference kernels vs the OpenMP kernels, at the shapes the default
// network runs during a training step (batch 64, six channels per sample).
//
//   kernels_bench --benchmark_counters_tabular=true
//
// The parallel variants take the OpenMP thread count as their argument.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "tricam/kernels.hpp"

using namespace tricam::kernels;

namespace {

std::vector<double> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

// First hidden layer of the decision MLP: [64 x 1024] * [1024 x 896].
constexpr std::size_t kM = 64, kK = 1024, kN = 896;

void set_flops(benchmark::State& state, double flops) {
  state.counters["FLOP/s"] =
      benchmark::Counter(flops, benchmark::Counter::kIsIterationInvariantRate, benchmark::Counter::kIs1000);
}

void BM_GemmReference(benchmark::State& state) {
  const auto a = random_vec(kM * kK, 1), b = random_vec(kK * kN, 2);
  std::vector<double> c(kM * kN);
  for (auto _ : state) {
    reference::gemm(Trans::kNo, Trans::kNo, kM, kN, kK, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  set_flops(state, 2.0 * kM * kN * kK);
}

void BM_GemmParallel(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const auto a = random_vec(kM * kK, 1), b = random_vec(kK * kN, 2);
  std::vector<double> c(kM * kN);
  for (auto _ : state) {
    gemm(Trans::kNo, Trans::kNo, kM, kN, kK, a, b, c);
    benchmark::DoNotOptimize(c.data());
  }
  set_flops(state, 2.0 * kM * kN * kK);
}

// Weight gradient of the same layer: A^T * G.
void BM_GemmTransReference(benchmark::State& state) {
  const auto a = random_vec(kM * kK, 1), g = random_vec(kM * kN, 2);
  std::vector<double> c(kK * kN);
  for (auto _ : state) {
    reference::gemm(Trans::kYes, Trans::kNo, kK, kN, kM, a, g, c);
    benchmark::DoNotOptimize(c.data());
  }
  set_flops(state, 2.0 * kM * kN * kK);
}

void BM_GemmTransParallel(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const auto a = random_vec(kM * kK, 1), g = random_vec(kM * kN, 2);
  std::vector<double> c(kK * kN);
  for (auto _ : state) {
    gemm(Trans::kYes, Trans::kNo, kK, kN, kM, a, g, c);
    benchmark::DoNotOptimize(c.data());
  }
  set_flops(state, 2.0 * kM * kN * kK);
}

// First eye-image convolution: 384 images of 20x40, 1 -> 8 channels, stride 2.
ConvShape conv_shape() {
  ConvShape s;
  s.batch = 64 * 6;
  s.in_channels = 1;
  s.in_h = 20;
  s.in_w = 40;
  s.out_channels = 8;
  s.kernel = 3;
  s.stride = 2;
  s.pad = 1;
  return s;
}

double conv_flops(const ConvShape& s) {
  return 2.0 * static_cast<double>(s.batch * s.out_channels * s.out_h() * s.out_w() * s.patch());
}

void BM_ConvForwardReference(benchmark::State& state) {
  const ConvShape s = conv_shape();
  const auto in = random_vec(s.batch * s.in_channels * s.in_h * s.in_w, 3);
  const auto w = random_vec(s.out_channels * s.patch(), 4), b = random_vec(s.out_channels, 5);
  std::vector<double> out(s.batch * s.out_channels * s.out_h() * s.out_w());
  for (auto _ : state) {
    reference::conv2d_forward(s, in, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  set_flops(state, conv_flops(s));
}

void BM_ConvForwardParallel(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const ConvShape s = conv_shape();
  const auto in = random_vec(s.batch * s.in_channels * s.in_h * s.in_w, 3);
  const auto w = random_vec(s.out_channels * s.patch(), 4), b = random_vec(s.out_channels, 5);
  std::vector<double> out(s.batch * s.out_channels * s.out_h() * s.out_w());
  for (auto _ : state) {
    conv2d_forward(s, in, w, b, out);
    benchmark::DoNotOptimize(out.data());
  }
  set_flops(state, conv_flops(s));
}

void BM_ConvBackwardReference(benchmark::State& state) {
  const ConvShape s = conv_shape();
  const auto in = random_vec(s.batch * s.in_channels * s.in_h * s.in_w, 3);
  const auto w = random_vec(s.out_channels * s.patch(), 4);
  const auto go = random_vec(s.batch * s.out_channels * s.out_h() * s.out_w(), 6);
  std::vector<double> gi(in.size()), gw(w.size()), gb(s.out_channels);
  for (auto _ : state) {
    reference::conv2d_backward(s, in, w, go, gi, gw, gb);
    benchmark::DoNotOptimize(gi.data());
  }
  set_flops(state, 2.0 * conv_flops(s));
}

void BM_ConvBackwardParallel(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const ConvShape s = conv_shape();
  const auto in = random_vec(s.batch * s.in_channels * s.in_h * s.in_w, 3);
  const auto w = random_vec(s.out_channels * s.patch(), 4);
  const auto go = random_vec(s.batch * s.out_channels * s.out_h() * s.out_w(), 6);
  std::vector<double> gi(in.size()), gw(w.size()), gb(s.out_channels);
  for (auto _ : state) {
    conv2d_backward(s, in, w, go, gi, gw, gb);
    benchmark::DoNotOptimize(gi.data());
  }
  set_flops(state, 2.0 * conv_flops(s));
}

void thread_counts(benchmark::internal::Benchmark* b) {
  const int max = omp_get_num_procs();
  for (int t = 1; t < max; t *= 2) b->Arg(t);
  b->Arg(max);
}

}  // namespace

BENCHMARK(BM_GemmReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GemmParallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_GemmTransReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GemmTransParallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ConvForwardReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvForwardParallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ConvBackwardReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvBackwardParallel)->Apply(thread_counts)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
