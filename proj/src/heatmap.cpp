#include "glarify/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

#include "glarify/error.hpp"
#include "glarify/io_util.hpp"

namespace glarify {

double default_sigma(std::size_t width, std::size_t height) {
    return 0.02 * std::hypot(static_cast<double>(width), static_cast<double>(height));
}

GazeHeatmap render_heatmap(std::span<const TracePoint> points, std::uint32_t keyframe_index,
                           std::size_t width, std::size_t height, double sigma, Exec exec) {
    if (width == 0 || height == 0) throw UsageError("heatmap size must be positive");
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw UsageError("sigma must be positive");
    std::vector<kernels::SplatPoint> centres;
    centres.reserve(points.size());
    for (const auto& p : points) {
        if (p.keyframe_index != keyframe_index)
            throw DataError("trace point belongs to keyframe " + std::to_string(p.keyframe_index) +
                            ", rendering keyframe " + std::to_string(keyframe_index));
        centres.push_back({p.x * static_cast<double>(width), p.y * static_cast<double>(height)});
    }
    std::sort(centres.begin(), centres.end(), [](const auto& a, const auto& b) {
        return a.px != b.px ? a.px < b.px : a.py < b.py;
    });

    GazeHeatmap map{keyframe_index, height, width, std::vector<double>(width * height, 0.0)};
    if (centres.empty()) return map;
    if (exec == Exec::serial) {
        kernels::serial::gaussian_splat(centres, width, height, sigma, map.values);
        const double m = kernels::serial::max_value(map.values);
        if (m > 0.0) kernels::serial::divide_by(map.values, m);
    } else {
        kernels::omp::gaussian_splat(centres, width, height, sigma, map.values);
        const double m = kernels::omp::max_value(map.values);
        if (m > 0.0) kernels::omp::divide_by(map.values, m);
    }
    return map;
}

Field stack_heatmaps(std::span<const GazeHeatmap> maps) {
    if (maps.empty()) return Field{};
    Field f(maps.size(), 1, maps[0].height, maps[0].width);
    for (std::size_t t = 0; t < maps.size(); ++t) {
        if (maps[t].height != f.height || maps[t].width != f.width)
            throw DataError("heatmaps of different sizes cannot be stacked");
        std::copy(maps[t].values.begin(), maps[t].values.end(), f.data.begin() + t * f.height * f.width);
    }
    return f;
}

PatchGrid patchify(const Field& field, std::size_t patch, Exec exec) {
    if (patch == 0 || field.height % patch != 0 || field.width % patch != 0)
        throw DataError("cannot patchify H=" + std::to_string(field.height) + ", W=" +
                        std::to_string(field.width) + " with p=" + std::to_string(patch));
    const kernels::PatchShape shape{field.frames, field.channels, field.height, field.width, patch};
    PatchGrid g{field.frames, field.channels, field.height / patch, field.width / patch, patch,
                std::vector<double>(field.data.size())};
    if (exec == Exec::serial)
        kernels::serial::patchify(field.data, shape, g.data);
    else
        kernels::omp::patchify(field.data, shape, g.data);
    return g;
}

Field unpatchify(const PatchGrid& g, Exec exec) {
    Field f(g.frames, g.channels, g.grid_h * g.patch, g.grid_w * g.patch);
    if (g.data.size() != f.data.size()) throw DataError("patch grid data does not match its shape");
    const kernels::PatchShape shape{f.frames, f.channels, f.height, f.width, g.patch};
    if (exec == Exec::serial)
        kernels::serial::unpatchify(g.data, shape, f.data);
    else
        kernels::omp::unpatchify(g.data, shape, f.data);
    return f;
}

std::string encode_heatmap(const GazeHeatmap& map) {
    std::string out = "GLHM";
    put_u32_le(out, kHeatmapFormatVersion);
    put_u32_le(out, static_cast<std::uint32_t>(map.height));
    put_u32_le(out, static_cast<std::uint32_t>(map.width));
    out.reserve(out.size() + 4 * map.values.size());
    for (double v : map.values) put_f32_le(out, static_cast<float>(v));
    return out;
}

GazeHeatmap decode_heatmap(std::string_view bytes) {
    if (bytes.size() < 16 || bytes.substr(0, 4) != "GLHM") throw DataError("not a GLHM heatmap");
    const auto version = get_u32_le(bytes, 4);
    if (version != kHeatmapFormatVersion)
        throw DataError("heatmap version mismatch: expected " + std::to_string(kHeatmapFormatVersion) +
                        ", found " + std::to_string(version));
    GazeHeatmap map;
    map.height = get_u32_le(bytes, 8);
    map.width = get_u32_le(bytes, 12);
    const std::size_t n = map.height * map.width;
    if (bytes.size() != 16 + 4 * n) throw DataError("heatmap payload size does not match header");
    map.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) map.values[i] = get_f32_le(bytes, 16 + 4 * i);
    return map;
}

void write_heatmap_png(const GazeHeatmap& map, const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(tmp.c_str(), "wb"), &std::fclose);
    if (!fp) throw DataError("cannot open " + tmp.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("libpng failed writing " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(map.width), static_cast<png_uint_32>(map.height), 8,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(map.width);
    for (std::size_t r = 0; r < map.height; ++r) {
        for (std::size_t c = 0; c < map.width; ++c)
            row[c] = static_cast<png_byte>(std::lround(std::clamp(map.at(r, c), 0.0, 1.0) * 255.0));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(fp.release()) != 0) throw DataError("cannot write " + tmp.string());
    std::filesystem::rename(tmp, path);
}

Field read_png_rgb(const std::filesystem::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str()))
        throw DataError("cannot read image " + path.string() + ": " + image.message);
    image.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buf(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&image);
        throw DataError("cannot decode image " + path.string() + ": " + image.message);
    }
    Field f(1, 3, image.height, image.width);
    for (std::size_t r = 0; r < image.height; ++r)
        for (std::size_t c = 0; c < image.width; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch)
                f.at(0, ch, r, c) = buf[(r * image.width + c) * 3 + ch] / 255.0;
    return f;
}

}  // namespace glarify
