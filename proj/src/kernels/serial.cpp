#include <algorithm>
#include <cmath>

#include "glarify/kernels.hpp"

namespace glarify::kernels::serial {

void gaussian_splat(std::span<const SplatPoint> points, std::size_t width, std::size_t height, double sigma,
                    std::span<double> out) {
    const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
            double acc = 0.0;
            for (const auto& p : points) {
                const double dx = static_cast<double>(c) - p.px;
                const double dy = static_cast<double>(r) - p.py;
                acc += std::exp(-(dx * dx + dy * dy) * inv_two_var);
            }
            out[r * width + c] = acc;
        }
    }
}

void patchify(std::span<const double> in, const PatchShape& s, std::span<double> out) {
    const std::size_t gh = s.height / s.patch;
    const std::size_t gw = s.width / s.patch;
    const std::size_t p = s.patch;
    for (std::size_t t = 0; t < s.frames; ++t)
        for (std::size_t c = 0; c < s.channels; ++c)
            for (std::size_t i = 0; i < gh; ++i)
                for (std::size_t j = 0; j < gw; ++j) {
                    const std::size_t base = ((((t * s.channels + c) * gh + i) * gw + j) * p) * p;
                    for (std::size_t a = 0; a < p; ++a)
                        for (std::size_t b = 0; b < p; ++b)
                            out[base + a * p + b] =
                                in[((t * s.channels + c) * s.height + i * p + a) * s.width + j * p + b];
                }
}

void unpatchify(std::span<const double> in, const PatchShape& s, std::span<double> out) {
    const std::size_t gh = s.height / s.patch;
    const std::size_t gw = s.width / s.patch;
    const std::size_t p = s.patch;
    for (std::size_t t = 0; t < s.frames; ++t)
        for (std::size_t c = 0; c < s.channels; ++c)
            for (std::size_t i = 0; i < gh; ++i)
                for (std::size_t j = 0; j < gw; ++j) {
                    const std::size_t base = ((((t * s.channels + c) * gh + i) * gw + j) * p) * p;
                    for (std::size_t a = 0; a < p; ++a)
                        for (std::size_t b = 0; b < p; ++b)
                            out[((t * s.channels + c) * s.height + i * p + a) * s.width + j * p + b] =
                                in[base + a * p + b];
                }
}

void affine_rows(std::span<const double> in, std::size_t rows, std::size_t in_dim,
                 std::span<const double> weights, std::span<const double> bias, std::size_t out_dim,
                 std::span<double> out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = in.data() + r * in_dim;
        for (std::size_t d = 0; d < out_dim; ++d) {
            double acc = 0.0;
            for (std::size_t k = 0; k < in_dim; ++k) acc += x[k] * weights[k * out_dim + d];
            out[r * out_dim + d] = acc + bias[d];
        }
    }
}

void add(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
}

double max_value(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, x);
    return m;
}

void divide_by(std::span<double> v, double divisor) {
    for (double& x : v) x /= divisor;
}

}  // namespace glarify::kernels::serial
