#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "glarify/data_model.hpp"
#include "glarify/kernels.hpp"

namespace glarify {

using kernels::Exec;

/// Dense T x C x H x W field, row-major.
struct Field {
    std::size_t frames = 0;
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> data;

    Field() = default;
    Field(std::size_t t, std::size_t c, std::size_t h, std::size_t w)
        : frames(t), channels(c), height(h), width(w), data(t * c * h * w, 0.0) {}

    double& at(std::size_t t, std::size_t c, std::size_t h, std::size_t w) {
        return data[((t * channels + c) * height + h) * width + w];
    }
    [[nodiscard]] double at(std::size_t t, std::size_t c, std::size_t h, std::size_t w) const {
        return data[((t * channels + c) * height + h) * width + w];
    }
    friend bool operator==(const Field&, const Field&) = default;
};

/// Patches of a Field: T x C x H' x W' x p x p, row-major.
struct PatchGrid {
    std::size_t frames = 0;
    std::size_t channels = 0;
    std::size_t grid_h = 0;
    std::size_t grid_w = 0;
    std::size_t patch = 0;
    std::vector<double> data;

    [[nodiscard]] std::size_t patch_count() const { return frames * grid_h * grid_w; }
    [[nodiscard]] double at(std::size_t t, std::size_t c, std::size_t i, std::size_t j, std::size_t a,
                            std::size_t b) const {
        return data[(((((t * channels + c) * grid_h + i) * grid_w + j) * patch + a) * patch) + b];
    }
    friend bool operator==(const PatchGrid&, const PatchGrid&) = default;
};

/// Attention density of one keyframe, values in [0,1].
struct GazeHeatmap {
    std::uint32_t keyframe_index = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<double> values;  // row-major height x width

    [[nodiscard]] double at(std::size_t row, std::size_t col) const { return values[row * width + col]; }
    friend bool operator==(const GazeHeatmap&, const GazeHeatmap&) = default;
};

/// 2% of the image diagonal.
double default_sigma(std::size_t width, std::size_t height);

/// Sum of isotropic Gaussians at (x*width, y*height), evaluated at integer
/// pixel coordinates (column, row), then divided by the maximum. All-zero
/// when `points` is empty. Points are summed in a canonical order, so the
/// result does not depend on their order in `points`.
GazeHeatmap render_heatmap(std::span<const TracePoint> points, std::uint32_t keyframe_index,
                           std::size_t width, std::size_t height, double sigma,
                           Exec exec = Exec::parallel);

/// Stacks heatmaps of equal size into a T x 1 x H x W field.
Field stack_heatmaps(std::span<const GazeHeatmap> maps);

PatchGrid patchify(const Field& field, std::size_t patch, Exec exec = Exec::parallel);
Field unpatchify(const PatchGrid& patches, Exec exec = Exec::parallel);

// Canonical binary storage: "GLHM", u32 version, u32 H, u32 W, then H*W
// little-endian float32 values.
inline constexpr std::uint32_t kHeatmapFormatVersion = 1;
std::string encode_heatmap(const GazeHeatmap& map);
GazeHeatmap decode_heatmap(std::string_view bytes);

/// 8-bit grayscale PNG for eyeballing; value 1.0 maps to 255.
void write_heatmap_png(const GazeHeatmap& map, const std::filesystem::path& path);

/// Decodes any PNG into a 1 x 3 x H x W field with values in [0,1].
Field read_png_rgb(const std::filesystem::path& path);

}  // namespace glarify
