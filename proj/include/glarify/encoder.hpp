#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "glarify/fusion.hpp"
#include "glarify/heatmap.hpp"

namespace glarify {

/// Desk-scale vision encoder: per-patch linear embedding, additive
/// temporal + row + column position embeddings, then `depth` pre-norm
/// transformer blocks over the whole T*H'*W' token sequence.
struct EncoderConfig {
    std::size_t patch = 14;
    std::size_t dim = 64;
    std::size_t depth = 1;
    std::size_t heads = 4;
    std::size_t channels = 3;
    std::uint64_t seed = 0;
    std::size_t max_frames = 4;
    std::size_t max_grid_h = 16;
    std::size_t max_grid_w = 16;

    /// Throws UsageError unless dim % heads == 0 and all sizes are positive.
    void validate() const;
    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct EncoderBlock {
    std::vector<double> ln1_gamma, ln1_beta;  // D
    std::vector<double> wq, bq, wk, bk, wv, bv, wo, bo;  // D x D, D
    std::vector<double> ln2_gamma, ln2_beta;
    std::vector<double> w1, b1;  // D x 4D, 4D
    std::vector<double> w2, b2;  // 4D x D, D

    friend bool operator==(const EncoderBlock&, const EncoderBlock&) = default;
};

struct EncoderParams {
    EncoderConfig cfg;
    std::vector<double> embed_weight;  // (C*p*p) x D, input flattened as (c, a, b)
    std::vector<double> embed_bias;    // D
    std::vector<double> pos_time;      // max_frames x D
    std::vector<double> pos_row;       // max_grid_h x D
    std::vector<double> pos_col;       // max_grid_w x D
    std::vector<EncoderBlock> blocks;

    /// Calls f(name, shape, tensor) for every tensor in a fixed order.
    /// Works on const and mutable params alike.
    template <class Self, class F>
    static void visit(Self& self, F&& f);

    [[nodiscard]] std::size_t parameter_count() const;
    friend bool operator==(const EncoderParams&, const EncoderParams&) = default;
};

/// Normal(0, 0.02) weights and position embeddings, zero biases, unit
/// LayerNorm gains. Every value is representable as float32, so a
/// checkpoint round trip is lossless.
EncoderParams init_encoder(const EncoderConfig& cfg);

/// V = encoder(X). Throws DataError when X does not match the config.
TokenGrid encode_frames(const PatchGrid& frames, const EncoderParams& params, Exec exec = Exec::parallel);

inline constexpr double kLayerNormEps = 1e-5;

double gelu_tanh(double x);

template <class Self, class F>
void EncoderParams::visit(Self& self, F&& f) {
    const std::size_t d = self.cfg.dim;
    const std::size_t in = self.cfg.channels * self.cfg.patch * self.cfg.patch;
    f(std::string("encoder.embed.weight"), std::vector<std::size_t>{in, d}, self.embed_weight);
    f(std::string("encoder.embed.bias"), std::vector<std::size_t>{d}, self.embed_bias);
    f(std::string("encoder.pos.time"), std::vector<std::size_t>{self.cfg.max_frames, d}, self.pos_time);
    f(std::string("encoder.pos.row"), std::vector<std::size_t>{self.cfg.max_grid_h, d}, self.pos_row);
    f(std::string("encoder.pos.col"), std::vector<std::size_t>{self.cfg.max_grid_w, d}, self.pos_col);
    for (std::size_t l = 0; l < self.blocks.size(); ++l) {
        auto& b = self.blocks[l];
        const std::string p = "encoder.block" + std::to_string(l) + ".";
        f(p + "ln1.gamma", std::vector<std::size_t>{d}, b.ln1_gamma);
        f(p + "ln1.beta", std::vector<std::size_t>{d}, b.ln1_beta);
        f(p + "attn.wq", std::vector<std::size_t>{d, d}, b.wq);
        f(p + "attn.bq", std::vector<std::size_t>{d}, b.bq);
        f(p + "attn.wk", std::vector<std::size_t>{d, d}, b.wk);
        f(p + "attn.bk", std::vector<std::size_t>{d}, b.bk);
        f(p + "attn.wv", std::vector<std::size_t>{d, d}, b.wv);
        f(p + "attn.bv", std::vector<std::size_t>{d}, b.bv);
        f(p + "attn.wo", std::vector<std::size_t>{d, d}, b.wo);
        f(p + "attn.bo", std::vector<std::size_t>{d}, b.bo);
        f(p + "ln2.gamma", std::vector<std::size_t>{d}, b.ln2_gamma);
        f(p + "ln2.beta", std::vector<std::size_t>{d}, b.ln2_beta);
        f(p + "mlp.w1", std::vector<std::size_t>{d, 4 * d}, b.w1);
        f(p + "mlp.b1", std::vector<std::size_t>{4 * d}, b.b1);
        f(p + "mlp.w2", std::vector<std::size_t>{4 * d, d}, b.w2);
        f(p + "mlp.b2", std::vector<std::size_t>{d}, b.b2);
    }
}

}  // namespace glarify
