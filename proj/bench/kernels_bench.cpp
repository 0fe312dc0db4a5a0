// Serial reference vs OpenMP kernels on sizes close to real use:
// 448x448 keyframes, 14-pixel patches, 1280-wide tokens.

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "glarify/encoder.hpp"
#include "glarify/kernels.hpp"

namespace k = glarify::kernels;

namespace {

std::vector<double> random_values(std::size_t n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

template <bool Parallel>
void BM_GaussianSplat(benchmark::State& state) {
    const std::size_t side = 448;
    std::vector<k::SplatPoint> pts;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, side);
    for (int i = 0; i < state.range(0); ++i) pts.push_back({u(rng), u(rng)});
    std::vector<double> out(side * side);
    for (auto _ : state) {
        if constexpr (Parallel)
            k::omp::gaussian_splat(pts, side, side, 12.7, out);
        else
            k::serial::gaussian_splat(pts, side, side, 12.7, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_Patchify(benchmark::State& state) {
    const k::PatchShape shape{4, 3, 448, 448, 14};
    const auto in = random_values(shape.size(), 2);
    std::vector<double> out(shape.size());
    for (auto _ : state) {
        if constexpr (Parallel)
            k::omp::patchify(in, shape, out);
        else
            k::serial::patchify(in, shape, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_AffineRows(benchmark::State& state) {
    const std::size_t rows = 1024, in_dim = 196, out_dim = static_cast<std::size_t>(state.range(0));
    const auto in = random_values(rows * in_dim, 3);
    const auto w = random_values(in_dim * out_dim, 4);
    const auto b = random_values(out_dim, 5);
    std::vector<double> out(rows * out_dim);
    for (auto _ : state) {
        if constexpr (Parallel)
            k::omp::affine_rows(in, rows, in_dim, w, b, out_dim, out);
        else
            k::serial::affine_rows(in, rows, in_dim, w, b, out_dim, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_Add(benchmark::State& state) {
    const std::size_t n = 1024 * 1280;
    const auto a = random_values(n, 6);
    const auto b = random_values(n, 7);
    std::vector<double> out(n);
    for (auto _ : state) {
        if constexpr (Parallel)
            k::omp::add(a, b, out);
        else
            k::serial::add(a, b, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <bool Parallel>
void BM_EncodeFrames(benchmark::State& state) {
    glarify::EncoderConfig cfg;
    cfg.patch = 14;
    cfg.dim = 64;
    cfg.max_frames = 2;
    const auto params = glarify::init_encoder(cfg);
    glarify::PatchGrid x{2, 3, 16, 16, 14, random_values(2 * 3 * 224 * 224, 8)};
    const auto exec = Parallel ? glarify::Exec::parallel : glarify::Exec::serial;
    for (auto _ : state) benchmark::DoNotOptimize(glarify::encode_frames(x, params, exec));
}

}  // namespace

BENCHMARK(BM_GaussianSplat<false>)->Arg(16)->Arg(128);
BENCHMARK(BM_GaussianSplat<true>)->Arg(16)->Arg(128);
BENCHMARK(BM_Patchify<false>);
BENCHMARK(BM_Patchify<true>);
BENCHMARK(BM_AffineRows<false>)->Arg(64)->Arg(1280);
BENCHMARK(BM_AffineRows<true>)->Arg(64)->Arg(1280);
BENCHMARK(BM_Add<false>);
BENCHMARK(BM_Add<true>);
BENCHMARK(BM_EncodeFrames<false>)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EncodeFrames<true>)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
