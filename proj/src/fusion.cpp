#include "glarify/fusion.hpp"

#include "glarify/error.hpp"
#include "glarify/io_util.hpp"

namespace glarify {

GazeProjection GazeProjection::zeros(std::size_t patch, std::size_t dim) {
    return GazeProjection{patch, dim, std::vector<double>(patch * patch * dim, 0.0), std::vector<double>(dim, 0.0)};
}

TokenGrid project_gaze(const PatchGrid& gaze, const GazeProjection& proj, Exec exec) {
    if (gaze.channels != 1) throw DataError("gaze patches must have a single channel");
    if (gaze.patch != proj.patch)
        throw DataError("patch size mismatch: gaze p=" + std::to_string(gaze.patch) +
                        ", projection p=" + std::to_string(proj.patch));
    if (proj.weights.size() != proj.patch * proj.patch * proj.dim || proj.bias.size() != proj.dim)
        throw DataError("projection parameters do not match its shape");
    TokenGrid z(gaze.frames, gaze.grid_h, gaze.grid_w, proj.dim);
    // with C = 1 the patch grid is already one flattened p*p row per token
    const std::size_t in_dim = proj.patch * proj.patch;
    if (exec == Exec::serial)
        kernels::serial::affine_rows(gaze.data, z.token_count(), in_dim, proj.weights, proj.bias, proj.dim, z.data);
    else
        kernels::omp::affine_rows(gaze.data, z.token_count(), in_dim, proj.weights, proj.bias, proj.dim, z.data);
    return z;
}

TokenGrid fuse(const TokenGrid& visual, const TokenGrid& gaze, Exec exec) {
    if (!visual.same_shape(gaze)) throw DataError("cannot fuse token grids of different shapes");
    TokenGrid out(visual.frames, visual.grid_h, visual.grid_w, visual.dim);
    if (exec == Exec::serial)
        kernels::serial::add(visual.data, gaze.data, out.data);
    else
        kernels::omp::add(visual.data, gaze.data, out.data);
    return out;
}

double param_ratio(const GazeProjection& proj, std::size_t base_param_count) {
    if (base_param_count == 0) throw UsageError("base parameter count must be positive");
    return static_cast<double>(proj.parameter_count()) / static_cast<double>(base_param_count);
}

std::string encode_tokens(const TokenGrid& grid) {
    std::string out = "GLTK";
    put_u32_le(out, kTokenFormatVersion);
    for (std::size_t v : {grid.frames, grid.grid_h, grid.grid_w, grid.dim}) put_u32_le(out, static_cast<std::uint32_t>(v));
    for (double v : grid.data) put_f32_le(out, static_cast<float>(v));
    return out;
}

TokenGrid decode_tokens(std::string_view bytes) {
    if (bytes.size() < 24 || bytes.substr(0, 4) != "GLTK") throw DataError("not a glarify token file");
    if (get_u32_le(bytes, 4) != kTokenFormatVersion) throw DataError("unsupported token file version");
    TokenGrid g(get_u32_le(bytes, 8), get_u32_le(bytes, 12), get_u32_le(bytes, 16), get_u32_le(bytes, 20));
    if (bytes.size() != 24 + 4 * g.data.size()) throw DataError("token file size does not match its shape");
    for (std::size_t i = 0; i < g.data.size(); ++i) g.data[i] = get_f32_le(bytes, 24 + 4 * i);
    return g;
}

}  // namespace glarify
