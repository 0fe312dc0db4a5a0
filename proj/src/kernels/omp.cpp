#include <algorithm>
#include <cmath>

#include <omp.h>

#include "glarify/kernels.hpp"

namespace glarify::kernels {

int available_threads() {
    const int max = omp_get_max_threads();
    const int lim = omp_get_thread_limit();
    return max < lim ? max : lim;
}

namespace omp {

using Index = std::ptrdiff_t;

void gaussian_splat(std::span<const SplatPoint> points, std::size_t width, std::size_t height, double sigma,
                    std::span<double> out) {
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    const Index n = static_cast<Index>(width * height);
#pragma omp parallel for schedule(static)
    for (Index idx = 0; idx < n; ++idx) {
        const std::size_t r = static_cast<std::size_t>(idx) / width;
        const std::size_t c = static_cast<std::size_t>(idx) % width;
        double acc = 0.0;
        for (const auto& p : points) {
            const double dx = static_cast<double>(c) - p.px;
            const double dy = static_cast<double>(r) - p.py;
            acc += std::exp(-(dx * dx + dy * dy) * inv_two_var);
        }
        out[static_cast<std::size_t>(idx)] = acc;
    }
}

void patchify(std::span<const double> in, const PatchShape& s, std::span<double> out) {
    const std::size_t gh = s.height / s.patch;
    const std::size_t gw = s.width / s.patch;
    const std::size_t p = s.patch;
    const Index patches = static_cast<Index>(s.frames * s.channels * gh * gw);
#pragma omp parallel for schedule(static)
    for (Index q = 0; q < patches; ++q) {
        const std::size_t j = static_cast<std::size_t>(q) % gw;
        const std::size_t i = static_cast<std::size_t>(q) / gw % gh;
        const std::size_t tc = static_cast<std::size_t>(q) / (gw * gh);
        const std::size_t base = static_cast<std::size_t>(q) * p * p;
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b)
                out[base + a * p + b] = in[(tc * s.height + i * p + a) * s.width + j * p + b];
    }
}

void unpatchify(std::span<const double> in, const PatchShape& s, std::span<double> out) {
    const std::size_t gh = s.height / s.patch;
    const std::size_t gw = s.width / s.patch;
    const std::size_t p = s.patch;
    const Index patches = static_cast<Index>(s.frames * s.channels * gh * gw);
#pragma omp parallel for schedule(static)
    for (Index q = 0; q < patches; ++q) {
        const std::size_t j = static_cast<std::size_t>(q) % gw;
        const std::size_t i = static_cast<std::size_t>(q) / gw % gh;
        const std::size_t tc = static_cast<std::size_t>(q) / (gw * gh);
        const std::size_t base = static_cast<std::size_t>(q) * p * p;
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b)
                out[(tc * s.height + i * p + a) * s.width + j * p + b] = in[base + a * p + b];
    }
}

void affine_rows(std::span<const double> in, std::size_t rows, std::size_t in_dim,
                 std::span<const double> weights, std::span<const double> bias, std::size_t out_dim,
                 std::span<double> out) {
    const Index n = static_cast<Index>(rows);
#pragma omp parallel for schedule(static)
    for (Index r = 0; r < n; ++r) {
        const double* x = in.data() + static_cast<std::size_t>(r) * in_dim;
        double* y = out.data() + static_cast<std::size_t>(r) * out_dim;
        for (std::size_t d = 0; d < out_dim; ++d) {
            double acc = 0.0;
            for (std::size_t k = 0; k < in_dim; ++k) acc += x[k] * weights[k * out_dim + d];
            y[d] = acc + bias[d];
        }
    }
}

void add(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    const Index n = static_cast<Index>(out.size());
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

double max_value(std::span<const double> v) {
    double m = 0.0;
    const Index n = static_cast<Index>(v.size());
#pragma omp parallel for reduction(max : m) schedule(static)
    for (Index i = 0; i < n; ++i) m = std::max(m, v[i]);
    return m;
}

void divide_by(std::span<double> v, double divisor) {
    const Index n = static_cast<Index>(v.size());
#pragma omp parallel for schedule(static)
    for (Index i = 0; i < n; ++i) v[i] /= divisor;
}

}  // namespace omp
}  // namespace glarify::kernels
