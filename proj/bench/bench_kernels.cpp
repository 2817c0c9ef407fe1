// Serial reference vs OpenMP kernels on full square grids.

#include <benchmark/benchmark.h>

#include <cstdint>
#include <random>
#include <vector>

#include "nmg/kernels.hpp"

namespace k = nmg::kernels;

namespace {

struct Fixture {
    int n;
    std::vector<std::uint8_t> mask;
    std::vector<double> x, y, w, kernel;

    Fixture(int n_, int radius, int ksize) : n(n_), mask(static_cast<std::size_t>(n_) * n_, 1) {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const std::size_t size = mask.size();
        const std::size_t block = static_cast<std::size_t>((2 * radius + 1) * (2 * radius + 1));
        x.resize(size);
        y.resize(size);
        w.resize(size * block);
        kernel.resize(static_cast<std::size_t>(ksize * ksize));
        for (double& v : x) v = u(rng);
        for (double& v : w) v = u(rng);
        for (double& v : kernel) v = u(rng);
    }
    k::Lattice lattice() const { return {n, n, mask.data()}; }
};

template <bool Parallel>
void per_point(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)), 1, 3);
    for (auto _ : state) {
        if constexpr (Parallel)
            k::omp::apply_per_point(f.lattice(), {1, f.w.data()}, f.x.data(), f.y.data());
        else
            k::serial::apply_per_point(f.lattice(), {1, f.w.data()}, f.x.data(), f.y.data());
        benchmark::DoNotOptimize(f.y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.x.size()));
}

template <bool Parallel>
void conv(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)), 0, 3);
    for (auto _ : state) {
        if constexpr (Parallel)
            k::omp::convolve(f.lattice(), 3, f.kernel.data(), f.x.data(), f.y.data());
        else
            k::serial::convolve(f.lattice(), 3, f.kernel.data(), f.x.data(), f.y.data());
        benchmark::DoNotOptimize(f.y.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.x.size()));
}

template <bool Parallel>
void kgrad(benchmark::State& state) {
    Fixture f(static_cast<int>(state.range(0)), 0, 3);
    for (auto _ : state) {
        std::vector<double> g(9, 0.0);
        if constexpr (Parallel)
            k::omp::kernel_grad(f.lattice(), 3, f.x.data(), f.x.data(), g.data());
        else
            k::serial::kernel_grad(f.lattice(), 3, f.x.data(), f.x.data(), g.data());
        benchmark::DoNotOptimize(g.data());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.x.size()));
}

} // namespace

BENCHMARK(per_point<false>)->Name("apply_per_point/serial")->Arg(63)->Arg(255)->Arg(1023);
BENCHMARK(per_point<true>)->Name("apply_per_point/omp")->Arg(63)->Arg(255)->Arg(1023);
BENCHMARK(conv<false>)->Name("convolve/serial")->Arg(63)->Arg(255)->Arg(1023);
BENCHMARK(conv<true>)->Name("convolve/omp")->Arg(63)->Arg(255)->Arg(1023);
BENCHMARK(kgrad<false>)->Name("kernel_grad/serial")->Arg(63)->Arg(255)->Arg(1023);
BENCHMARK(kgrad<true>)->Name("kernel_grad/omp")->Arg(63)->Arg(255)->Arg(1023);

BENCHMARK_MAIN();
