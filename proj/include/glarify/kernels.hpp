#pragma once

// Data-parallel inner loops shared by the heatmap renderer and the fusion
// path. Every kernel has a serial reference and an OpenMP version that
// computes each output element with the same arithmetic in the same order,
// so both produce bit-identical results.

#include <cstddef>
#include <span>

namespace glarify::kernels {

enum class Exec { serial, parallel };

/// A Gaussian centre in pixel coordinates (column, row).
struct SplatPoint {
    double px = 0.0;
    double py = 0.0;
};

/// Shape of a T x C x H x W field cut into p x p patches.
struct PatchShape {
    std::size_t frames = 0;
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t patch = 0;

    [[nodiscard]] std::size_t size() const { return frames * channels * height * width; }
};

#define GLARIFY_KERNEL_DECLS                                                                          \
    /* out[r*width+c] = sum_k exp(-((c-px_k)^2 + (r-py_k)^2) / (2 sigma^2)), points summed in order */ \
    void gaussian_splat(std::span<const SplatPoint> points, std::size_t width, std::size_t height,     \
                        double sigma, std::span<double> out);                                          \
    /* out[t,c,i,j,a,b] = in[t,c,i*p+a,j*p+b] */                                                        \
    void patchify(std::span<const double> in, const PatchShape& shape, std::span<double> out);         \
    void unpatchify(std::span<const double> in, const PatchShape& shape, std::span<double> out);       \
    /* out[r,:] = in[r,:] * weights + bias, weights row-major in_dim x out_dim */                       \
    void affine_rows(std::span<const double> in, std::size_t rows, std::size_t in_dim,                 \
                     std::span<const double> weights, std::span<const double> bias,                    \
                     std::size_t out_dim, std::span<double> out);                                      \
    void add(std::span<const double> a, std::span<const double> b, std::span<double> out);             \
    double max_value(std::span<const double> v);                                                       \
    void divide_by(std::span<double> v, double divisor);

namespace serial {
GLARIFY_KERNEL_DECLS
}

namespace omp {
GLARIFY_KERNEL_DECLS
}

#undef GLARIFY_KERNEL_DECLS

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int available_threads();

}  // namespace glarify::kernels
