#include "glarify/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "glarify/error.hpp"

namespace glarify {

void EncoderConfig::validate() const {
    if (patch == 0 || dim == 0 || heads == 0 || channels == 0)
        throw UsageError("encoder patch, dim, heads and channels must be positive");
    if (dim % heads != 0)
        throw UsageError("encoder dim " + std::to_string(dim) + " is not divisible by " + std::to_string(heads) +
                         " heads");
    if (max_frames == 0 || max_grid_h == 0 || max_grid_w == 0)
        throw UsageError("encoder position tables must be non-empty");
}

std::size_t EncoderParams::parameter_count() const {
    std::size_t n = 0;
    visit(*this, [&](const std::string&, const std::vector<std::size_t>&, const std::vector<double>& t) {
        n += t.size();
    });
    return n;
}

EncoderParams init_encoder(const EncoderConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.dim;
    EncoderParams p;
    p.cfg = cfg;
    p.blocks.resize(cfg.depth);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 0.02);
    auto draw = [&](std::vector<double>& t, std::size_t n) {
        t.resize(n);
        for (auto& v : t) v = static_cast<float>(normal(rng));
    };
    auto fill = [](std::vector<double>& t, std::size_t n, double v) { t.assign(n, v); };

    draw(p.embed_weight, cfg.channels * cfg.patch * cfg.patch * d);
    fill(p.embed_bias, d, 0.0);
    draw(p.pos_time, cfg.max_frames * d);
    draw(p.pos_row, cfg.max_grid_h * d);
    draw(p.pos_col, cfg.max_grid_w * d);
    for (auto& b : p.blocks) {
        fill(b.ln1_gamma, d, 1.0);
        fill(b.ln1_beta, d, 0.0);
        draw(b.wq, d * d);
        fill(b.bq, d, 0.0);
        draw(b.wk, d * d);
        fill(b.bk, d, 0.0);
        draw(b.wv, d * d);
        fill(b.bv, d, 0.0);
        draw(b.wo, d * d);
        fill(b.bo, d, 0.0);
        fill(b.ln2_gamma, d, 1.0);
        fill(b.ln2_beta, d, 0.0);
        draw(b.w1, d * 4 * d);
        fill(b.b1, 4 * d, 0.0);
        draw(b.w2, 4 * d * d);
        fill(b.b2, d, 0.0);
    }
    return p;
}

double gelu_tanh(double x) {
    const double c = std::sqrt(2.0 / std::numbers::pi);
    return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

namespace {

void affine(std::span<const double> in, std::size_t rows, std::size_t in_dim, const std::vector<double>& w,
            const std::vector<double>& b, std::size_t out_dim, std::vector<double>& out, Exec exec) {
    out.assign(rows * out_dim, 0.0);
    if (exec == Exec::serial)
        kernels::serial::affine_rows(in, rows, in_dim, w, b, out_dim, out);
    else
        kernels::omp::affine_rows(in, rows, in_dim, w, b, out_dim, out);
}

void layer_norm(const std::vector<double>& x, std::size_t rows, std::size_t d, const std::vector<double>& gamma,
                const std::vector<double>& beta, std::vector<double>& out) {
    out.resize(rows * d);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* xr = x.data() + r * d;
        double mean = 0.0;
        for (std::size_t e = 0; e < d; ++e) mean += xr[e];
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t e = 0; e < d; ++e) var += (xr[e] - mean) * (xr[e] - mean);
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        for (std::size_t e = 0; e < d; ++e) out[r * d + e] = (xr[e] - mean) * inv * gamma[e] + beta[e];
    }
}

// Multi-head softmax attention of every token over every token. Each query
// row is independent, so rows are split across threads without changing the
// arithmetic.
void attention(const std::vector<double>& q, const std::vector<double>& k, const std::vector<double>& v,
               std::size_t n, std::size_t d, std::size_t heads, std::vector<double>& out, Exec exec) {
    out.assign(n * d, 0.0);
    const std::size_t dh = d / heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    auto row = [&](std::size_t i) {
        std::vector<double> score(n);
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * dh;
            double mx = -INFINITY;
            for (std::size_t m = 0; m < n; ++m) {
                double s = 0.0;
                for (std::size_t e = 0; e < dh; ++e) s += q[i * d + off + e] * k[m * d + off + e];
                score[m] = s * scale;
                mx = std::max(mx, score[m]);
            }
            double z = 0.0;
            for (std::size_t m = 0; m < n; ++m) {
                score[m] = std::exp(score[m] - mx);
                z += score[m];
            }
            for (std::size_t m = 0; m < n; ++m) {
                const double a = score[m] / z;
                for (std::size_t e = 0; e < dh; ++e) out[i * d + off + e] += a * v[m * d + off + e];
            }
        }
    };
    if (exec == Exec::serial) {
        for (std::size_t i = 0; i < n; ++i) row(i);
    } else {
        const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < rows; ++i) row(static_cast<std::size_t>(i));
    }
}

}  // namespace

TokenGrid encode_frames(const PatchGrid& frames, const EncoderParams& params, Exec exec) {
    const auto& cfg = params.cfg;
    if (frames.patch != cfg.patch)
        throw DataError("frame patch size " + std::to_string(frames.patch) + " does not match encoder patch " +
                        std::to_string(cfg.patch));
    if (frames.channels != cfg.channels)
        throw DataError("frame channels " + std::to_string(frames.channels) + " do not match encoder channels " +
                        std::to_string(cfg.channels));
    if (frames.frames > cfg.max_frames || frames.grid_h > cfg.max_grid_h || frames.grid_w > cfg.max_grid_w)
        throw DataError("frame grid exceeds the encoder position tables");
    if (frames.data.size() != frames.patch_count() * frames.channels * frames.patch * frames.patch)
        throw DataError("patch grid data does not match its shape");

    const std::size_t d = cfg.dim;
    const std::size_t p2 = cfg.patch * cfg.patch;
    const std::size_t in_dim = cfg.channels * p2;
    const std::size_t n = frames.patch_count();

    // gather each token's (c, a, b) patch vector
    std::vector<double> flat(n * in_dim);
    for (std::size_t t = 0; t < frames.frames; ++t)
        for (std::size_t c = 0; c < frames.channels; ++c)
            for (std::size_t i = 0; i < frames.grid_h; ++i)
                for (std::size_t j = 0; j < frames.grid_w; ++j) {
                    const std::size_t tok = (t * frames.grid_h + i) * frames.grid_w + j;
                    const double* src = frames.data.data() + (((t * frames.channels + c) * frames.grid_h + i) *
                                                                  frames.grid_w + j) * p2;
                    std::copy(src, src + p2, flat.begin() + static_cast<std::ptrdiff_t>(tok * in_dim + c * p2));
                }

    std::vector<double> x;
    affine(flat, n, in_dim, params.embed_weight, params.embed_bias, d, x, exec);
    for (std::size_t t = 0; t < frames.frames; ++t)
        for (std::size_t i = 0; i < frames.grid_h; ++i)
            for (std::size_t j = 0; j < frames.grid_w; ++j) {
                const std::size_t tok = (t * frames.grid_h + i) * frames.grid_w + j;
                for (std::size_t e = 0; e < d; ++e)
                    x[tok * d + e] += params.pos_time[t * d + e] + params.pos_row[i * d + e] + params.pos_col[j * d + e];
            }

    std::vector<double> h, q, k, v, att, o, hidden;
    for (const auto& b : params.blocks) {
        layer_norm(x, n, d, b.ln1_gamma, b.ln1_beta, h);
        affine(h, n, d, b.wq, b.bq, d, q, exec);
        affine(h, n, d, b.wk, b.bk, d, k, exec);
        affine(h, n, d, b.wv, b.bv, d, v, exec);
        attention(q, k, v, n, d, cfg.heads, att, exec);
        affine(att, n, d, b.wo, b.bo, d, o, exec);
        for (std::size_t e = 0; e < x.size(); ++e) x[e] += o[e];

        layer_norm(x, n, d, b.ln2_gamma, b.ln2_beta, h);
        affine(h, n, d, b.w1, b.b1, 4 * d, hidden, exec);
        for (auto& val : hidden) val = gelu_tanh(val);
        affine(hidden, n, 4 * d, b.w2, b.b2, d, o, exec);
        for (std::size_t e = 0; e < x.size(); ++e) x[e] += o[e];
    }

    TokenGrid out(frames.frames, frames.grid_h, frames.grid_w, d);
    out.data = std::move(x);
    return out;
}

}  // namespace glarify
