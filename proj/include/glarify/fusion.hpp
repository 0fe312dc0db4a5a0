#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "glarify/heatmap.hpp"

namespace glarify {

/// T x H' x W' x D token tensor, row-major. Holds visual tokens, projected
/// gaze tokens and their sum.
struct TokenGrid {
    std::size_t frames = 0;
    std::size_t grid_h = 0;
    std::size_t grid_w = 0;
    std::size_t dim = 0;
    std::vector<double> data;

    TokenGrid() = default;
    TokenGrid(std::size_t t, std::size_t h, std::size_t w, std::size_t d)
        : frames(t), grid_h(h), grid_w(w), dim(d), data(t * h * w * d, 0.0) {}

    [[nodiscard]] std::size_t token_count() const { return frames * grid_h * grid_w; }
    [[nodiscard]] bool same_shape(const TokenGrid& o) const {
        return frames == o.frames && grid_h == o.grid_h && grid_w == o.grid_w && dim == o.dim;
    }
    double& at(std::size_t t, std::size_t i, std::size_t j, std::size_t d) {
        return data[((t * grid_h + i) * grid_w + j) * dim + d];
    }
    [[nodiscard]] double at(std::size_t t, std::size_t i, std::size_t j, std::size_t d) const {
        return data[((t * grid_h + i) * grid_w + j) * dim + d];
    }
    friend bool operator==(const TokenGrid&, const TokenGrid&) = default;
};

/// Linear map from a flattened p x p gaze patch to a D-dim token.
struct GazeProjection {
    std::size_t patch = 0;
    std::size_t dim = 0;
    std::vector<double> weights;  // (p*p) x D, row-major
    std::vector<double> bias;     // D

    /// Weights and bias exactly zero, so fusion starts as the identity.
    static GazeProjection zeros(std::size_t patch, std::size_t dim);
    [[nodiscard]] std::size_t parameter_count() const { return patch * patch * dim + dim; }
    friend bool operator==(const GazeProjection&, const GazeProjection&) = default;
};

/// Z[t,i,j] = flatten(G[t,0,i,j]) * weights + bias. G must have one channel
/// and the projection's patch side.
TokenGrid project_gaze(const PatchGrid& gaze, const GazeProjection& proj, Exec exec = Exec::parallel);

/// Elementwise V + Z; shapes must match.
TokenGrid fuse(const TokenGrid& visual, const TokenGrid& gaze, Exec exec = Exec::parallel);

/// (p^2*D + D) / base_param_count. Throws UsageError when the base is 0.
double param_ratio(const GazeProjection& proj, std::size_t base_param_count);

// Token dump: "GLTK", u32 version, u32 T, H', W', D, then little-endian
// float32 values in T, H', W', D order.
inline constexpr std::uint32_t kTokenFormatVersion = 1;
std::string encode_tokens(const TokenGrid& grid);
TokenGrid decode_tokens(std::string_view bytes);

}  // namespace glarify
