// Serial reference vs OpenMP kernels at a few sizes. Run with
// --benchmark_filter=conv to narrow.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "gcd/kernels.hpp"

using namespace gcd::kernels;

namespace {

std::vector<double> random_vec(size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

void conv_args(benchmark::internal::Benchmark* b) {
    b->Args({1, 28, 8});   // desk-scale image
    b->Args({8, 64, 16});  // wider feature map
    b->Args({16, 128, 32});
}

template <bool Parallel>
void BM_conv2d_forward(benchmark::State& state) {
    const int C = static_cast<int>(state.range(0));
    const int H = static_cast<int>(state.range(1));
    const int F = static_cast<int>(state.range(2));
    const auto d = conv_dims(C, H, H, F, 3, 3, 1, 1);
    const auto x = random_vec(static_cast<size_t>(C) * H * H, 1);
    const auto k = random_vec(static_cast<size_t>(F) * C * 9, 2);
    std::vector<double> y(static_cast<size_t>(F) * d.Hout * d.Wout);
    for (auto _ : state) {
        if constexpr (Parallel)
            conv2d_forward(x.data(), k.data(), y.data(), d);
        else
            conv2d_forward_serial(x.data(), k.data(), y.data(), d);
        benchmark::DoNotOptimize(y.data());
        benchmark::ClobberMemory();
    }
}

template <bool Parallel>
void BM_conv2d_backward_input(benchmark::State& state) {
    const int C = static_cast<int>(state.range(0));
    const int H = static_cast<int>(state.range(1));
    const int F = static_cast<int>(state.range(2));
    const auto d = conv_dims(C, H, H, F, 3, 3, 1, 1);
    const auto gy = random_vec(static_cast<size_t>(F) * d.Hout * d.Wout, 3);
    const auto k = random_vec(static_cast<size_t>(F) * C * 9, 4);
    std::vector<double> gx(static_cast<size_t>(C) * H * H);
    for (auto _ : state) {
        if constexpr (Parallel)
            conv2d_backward_input(gy.data(), k.data(), gx.data(), d);
        else
            conv2d_backward_input_serial(gy.data(), k.data(), gx.data(), d);
        benchmark::DoNotOptimize(gx.data());
        benchmark::ClobberMemory();
    }
}

template <bool Parallel>
void BM_matmul(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto a = random_vec(static_cast<size_t>(n) * n, 5);
    const auto b = random_vec(static_cast<size_t>(n) * n, 6);
    std::vector<double> c(static_cast<size_t>(n) * n);
    for (auto _ : state) {
        if constexpr (Parallel)
            matmul(a.data(), b.data(), c.data(), n, n, n);
        else
            matmul_serial(a.data(), b.data(), c.data(), n, n, n);
        benchmark::DoNotOptimize(c.data());
        benchmark::ClobberMemory();
    }
}

} // namespace

BENCHMARK(BM_conv2d_forward<false>)->Name("conv2d_forward/serial")->Apply(conv_args);
BENCHMARK(BM_conv2d_forward<true>)->Name("conv2d_forward/omp")->Apply(conv_args);
BENCHMARK(BM_conv2d_backward_input<false>)->Name("conv2d_backward_input/serial")->Apply(conv_args);
BENCHMARK(BM_conv2d_backward_input<true>)->Name("conv2d_backward_input/omp")->Apply(conv_args);
BENCHMARK(BM_matmul<false>)->Name("matmul/serial")->Arg(64)->Arg(256)->Arg(512);
BENCHMARK(BM_matmul<true>)->Name("matmul/omp")->Arg(64)->Arg(256)->Arg(512);

BENCHMARK_MAIN();
