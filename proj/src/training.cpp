#include "glarify/training.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "glarify/error.hpp"
#include "glarify/io_util.hpp"

namespace glarify {

EncoderConfig ToyConfig::encoder_config() const {
    EncoderConfig e;
    e.patch = patch;
    e.dim = dim;
    e.depth = depth;
    e.heads = heads;
    e.channels = channels;
    e.seed = seed;
    e.max_frames = frames;
    e.max_grid_h = grid;
    e.max_grid_w = grid;
    return e;
}

void ToyConfig::validate() const {
    if (grid == 0 || frames == 0 || batch_size == 0) throw UsageError("toy grid, frames and batch size must be positive");
    if (patch < 2) throw UsageError("toy patch side must be at least 2");
    if (!(blob_sigma > 0.0)) throw UsageError("blob sigma must be positive");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw UsageError("learning rate must be positive");
    encoder_config().validate();
}

nlohmann::json to_json(const ToyConfig& c) {
    return json{{"grid", c.grid},
                {"patch", c.patch},
                {"channels", c.channels},
                {"frames", c.frames},
                {"dim", c.dim},
                {"heads", c.heads},
                {"depth", c.depth},
                {"blob_sigma", c.blob_sigma},
                {"batch_size", c.batch_size},
                {"learning_rate", c.learning_rate},
                {"stage1_epochs", c.stage1_epochs},
                {"stage2_epochs", c.stage2_epochs},
                {"grad_accumulation", c.grad_accumulation},
                {"seed", c.seed}};
}

ToyConfig toy_config_from_json(const nlohmann::json& j) {
    ToyConfig c;
    try {
        c.grid = j.at("grid").get<std::size_t>();
        c.patch = j.at("patch").get<std::size_t>();
        c.channels = j.at("channels").get<std::size_t>();
        c.frames = j.at("frames").get<std::size_t>();
        c.dim = j.at("dim").get<std::size_t>();
        c.heads = j.at("heads").get<std::size_t>();
        c.depth = j.at("depth").get<std::size_t>();
        c.blob_sigma = j.at("blob_sigma").get<double>();
        c.batch_size = j.at("batch_size").get<std::size_t>();
        c.learning_rate = j.at("learning_rate").get<double>();
        c.stage1_epochs = j.at("stage1_epochs").get<std::size_t>();
        c.stage2_epochs = j.at("stage2_epochs").get<std::size_t>();
        c.grad_accumulation = j.at("grad_accumulation").get<std::size_t>();
        c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw DataError(std::string("bad toy config: ") + e.what());
    }
    return c;
}

std::vector<ToyBatch> make_toy_task(std::uint64_t seed, std::size_t n, const ToyConfig& cfg) {
    if (n == 0) throw UsageError("toy task needs at least one sample");
    cfg.validate();
    const std::size_t side = cfg.image_side();
    const double p = static_cast<double>(cfg.patch);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick_class(0, cfg.classes() - 1);
    // the pixel nearest the blob centre always lies inside the target patch
    std::uniform_real_distribution<double> offset(0.25, p - 1.25);
    std::uniform_real_distribution<double> pixel(0.0, 1.0);

    std::vector<ToyBatch> batches;
    for (std::size_t s = 0; s < n; ++s) {
        if (s % cfg.batch_size == 0) batches.emplace_back();
        ToySample sample;
        sample.target = pick_class(rng);
        const std::size_t gi = sample.target / cfg.grid;
        const std::size_t gj = sample.target % cfg.grid;
        const double px = static_cast<double>(gj) * p + offset(rng);
        const double py = static_cast<double>(gi) * p + offset(rng);

        Field frames(cfg.frames, cfg.channels, side, side);
        for (auto& v : frames.data) v = pixel(rng);
        std::vector<GazeHeatmap> maps;
        for (std::size_t t = 0; t < cfg.frames; ++t) {
            const auto kf = static_cast<std::uint32_t>(t);
            const TracePoint point{px / static_cast<double>(side), py / static_cast<double>(side), kf, 0};
            maps.push_back(render_heatmap({&point, 1}, kf, side, side, cfg.blob_sigma, Exec::serial));
        }
        sample.frames = patchify(frames, cfg.patch, Exec::serial);
        sample.gaze = patchify(stack_heatmaps(maps), cfg.patch, Exec::serial);
        batches.back().samples.push_back(std::move(sample));
    }
    return batches;
}

ToyModel make_toy_model(const ToyConfig& cfg, std::uint64_t thinker_seed) {
    cfg.validate();
    ToyModel m;
    m.encoder = init_encoder(cfg.encoder_config());
    m.projection = GazeProjection::zeros(cfg.patch, cfg.dim);
    m.thinker.dim = cfg.dim;
    std::mt19937_64 rng(thinker_seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    const double key_std = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
    m.thinker.query.resize(cfg.dim);
    for (auto& v : m.thinker.query) v = static_cast<float>(unit(rng));
    m.thinker.key.resize(cfg.dim * cfg.dim);
    for (auto& v : m.thinker.key) v = static_cast<float>(unit(rng) * key_std);
    return m;
}

EncodedBatch encode_batch(const ToyModel& model, const ToyBatch& batch, Exec exec) {
    EncodedBatch out;
    for (const auto& s : batch.samples) {
        out.visual.push_back(encode_frames(s.frames, model.encoder, exec));
        out.gaze.push_back(s.gaze);
        out.target.push_back(s.target);
    }
    return out;
}

namespace {

// Per-sample forward state kept for the backward pass.
struct Forward {
    TokenGrid fused;
    std::vector<double> h;       // tanh(K x) per token, tokens x D
    std::vector<double> logits;  // grid_h * grid_w
    double loss = 0.0;
    std::vector<double> prob;
};

Forward forward(const ToyModel& model, const TokenGrid& visual, const PatchGrid& gaze, std::size_t target,
                bool use_gaze) {
    const std::size_t d = model.thinker.dim;
    Forward f;
    f.fused = use_gaze ? fuse(visual, project_gaze(gaze, model.projection, Exec::serial), Exec::serial) : visual;
    const std::size_t classes = f.fused.grid_h * f.fused.grid_w;
    const std::size_t tokens = f.fused.token_count();
    if (target >= classes) throw DataError("toy target outside the patch grid");
    f.h.assign(tokens * d, 0.0);
    f.logits.assign(classes, 0.0);
    const double norm = 1.0 / (static_cast<double>(f.fused.frames) * std::sqrt(static_cast<double>(d)));
    for (std::size_t tok = 0; tok < tokens; ++tok) {
        const double* x = f.fused.data.data() + tok * d;
        double a = 0.0;
        for (std::size_t r = 0; r < d; ++r) {
            double u = 0.0;
            for (std::size_t e = 0; e < d; ++e) u += model.thinker.key[r * d + e] * x[e];
            const double h = std::tanh(u);
            f.h[tok * d + r] = h;
            a += model.thinker.query[r] * h;
        }
        f.logits[tok % classes] += a * norm;
    }
    const double mx = *std::max_element(f.logits.begin(), f.logits.end());
    double z = 0.0;
    f.prob.resize(classes);
    for (std::size_t j = 0; j < classes; ++j) {
        f.prob[j] = std::exp(f.logits[j] - mx);
        z += f.prob[j];
    }
    for (auto& pr : f.prob) pr /= z;
    f.loss = mx + std::log(z) - f.logits[target];
    if (!std::isfinite(f.loss)) throw DataError("non-finite toy loss");
    return f;
}

void check_batch(const EncodedBatch& batch) {
    if (batch.visual.empty()) throw UsageError("empty batch");
    if (batch.gaze.size() != batch.visual.size() || batch.target.size() != batch.visual.size())
        throw UsageError("batch fields are not parallel");
}

}  // namespace

double toy_loss(const ToyModel& model, const EncodedBatch& batch, bool use_gaze) {
    check_batch(batch);
    double total = 0.0;
    for (std::size_t s = 0; s < batch.visual.size(); ++s)
        total += forward(model, batch.visual[s], batch.gaze[s], batch.target[s], use_gaze).loss;
    return total / static_cast<double>(batch.visual.size());
}

double loss_and_grad(const ToyModel& model, const EncodedBatch& batch, ToyGradients& g) {
    check_batch(batch);
    const std::size_t d = model.thinker.dim;
    const std::size_t p2 = model.projection.patch * model.projection.patch;
    g.projection_weight.assign(p2 * d, 0.0);
    g.projection_bias.assign(d, 0.0);
    g.query.assign(d, 0.0);
    g.key.assign(d * d, 0.0);
    const double inv_batch = 1.0 / static_cast<double>(batch.visual.size());

    double total = 0.0;
    std::vector<double> du(d), dx(d);
    for (std::size_t s = 0; s < batch.visual.size(); ++s) {
        const auto f = forward(model, batch.visual[s], batch.gaze[s], batch.target[s], true);
        total += f.loss;
        const std::size_t classes = f.logits.size();
        const double norm = 1.0 / (static_cast<double>(f.fused.frames) * std::sqrt(static_cast<double>(d)));
        for (std::size_t tok = 0; tok < f.fused.token_count(); ++tok) {
            const std::size_t j = tok % classes;
            const double ds = (f.prob[j] - (j == batch.target[s] ? 1.0 : 0.0)) * inv_batch * norm;
            const double* x = f.fused.data.data() + tok * d;
            const double* h = f.h.data() + tok * d;
            for (std::size_t r = 0; r < d; ++r) {
                g.query[r] += ds * h[r];
                du[r] = ds * model.thinker.query[r] * (1.0 - h[r] * h[r]);
            }
            std::fill(dx.begin(), dx.end(), 0.0);
            for (std::size_t r = 0; r < d; ++r)
                for (std::size_t e = 0; e < d; ++e) {
                    g.key[r * d + e] += du[r] * x[e];
                    dx[e] += model.thinker.key[r * d + e] * du[r];
                }
            // gaze patch of this token, flattened row-major (one channel)
            const double* gp = batch.gaze[s].data.data() + tok * p2;
            for (std::size_t k = 0; k < p2; ++k)
                for (std::size_t e = 0; e < d; ++e) g.projection_weight[k * d + e] += gp[k] * dx[e];
            for (std::size_t e = 0; e < d; ++e) g.projection_bias[e] += dx[e];
        }
    }
    return total * inv_batch;
}

std::vector<std::size_t> predict(const ToyModel& model, const EncodedBatch& batch) {
    check_batch(batch);
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < batch.visual.size(); ++s) {
        const auto f = forward(model, batch.visual[s], batch.gaze[s], batch.target[s], true);
        std::size_t best = 0;
        for (std::size_t j = 1; j < f.logits.size(); ++j)
            if (f.logits[j] > f.logits[best]) best = j;
        out.push_back(best);
    }
    return out;
}

double accuracy(const ToyModel& model, const std::vector<EncodedBatch>& data) {
    std::size_t hit = 0, total = 0;
    for (const auto& b : data) {
        const auto pred = predict(model, b);
        for (std::size_t s = 0; s < pred.size(); ++s) hit += pred[s] == b.target[s] ? 1 : 0;
        total += pred.size();
    }
    if (total == 0) throw UsageError("accuracy over an empty set");
    return static_cast<double>(hit) / static_cast<double>(total);
}

long double toy_loss_extended(const ToyModel& model, const EncodedBatch& batch) {
    check_batch(batch);
    using ld = long double;
    const std::size_t d = model.thinker.dim;
    const std::size_t p2 = model.projection.patch * model.projection.patch;
    ld total = 0.0L;
    std::vector<ld> x(d);
    for (std::size_t s = 0; s < batch.visual.size(); ++s) {
        const auto& v = batch.visual[s];
        const auto& g = batch.gaze[s];
        if (g.patch != model.projection.patch || g.patch_count() != v.token_count())
            throw DataError("gaze grid does not match the visual tokens");
        const std::size_t classes = v.grid_h * v.grid_w;
        std::vector<ld> logits(classes, 0.0L);
        const ld norm = 1.0L / (static_cast<ld>(v.frames) * std::sqrt(static_cast<ld>(d)));
        for (std::size_t tok = 0; tok < v.token_count(); ++tok) {
            for (std::size_t e = 0; e < d; ++e) {
                ld z = model.projection.bias[e];
                for (std::size_t k = 0; k < p2; ++k)
                    z += static_cast<ld>(g.data[tok * p2 + k]) * model.projection.weights[k * d + e];
                x[e] = static_cast<ld>(v.data[tok * d + e]) + z;
            }
            ld a = 0.0L;
            for (std::size_t r = 0; r < d; ++r) {
                ld u = 0.0L;
                for (std::size_t e = 0; e < d; ++e) u += static_cast<ld>(model.thinker.key[r * d + e]) * x[e];
                a += static_cast<ld>(model.thinker.query[r]) * std::tanh(u);
            }
            logits[tok % classes] += a * norm;
        }
        const ld mx = *std::max_element(logits.begin(), logits.end());
        ld z = 0.0L;
        for (ld l : logits) z += std::exp(l - mx);
        total += mx + std::log(z) - logits[batch.target[s]];
    }
    const ld loss = total / static_cast<ld>(batch.visual.size());
    if (!std::isfinite(loss)) throw DataError("non-finite toy loss");
    return loss;
}

GradCheckReport grad_check(const ToyModel& model, const EncodedBatch& batch, double eps,
                           const std::function<void(ToyGradients&)>& tamper, FiniteDifference mode) {
    if (!(eps > 0.0)) throw UsageError("grad_check eps must be positive");
    ToyGradients analytic;
    loss_and_grad(model, batch, analytic);
    if (tamper) tamper(analytic);

    ToyModel probe = model;
    GradCheckReport report;
    auto loss = [&](const ToyModel& m) -> long double {
        return mode == FiniteDifference::extended ? toy_loss_extended(m, batch) : toy_loss(m, batch);
    };
    auto check = [&](const char* group, std::vector<double>& param, const std::vector<double>& grad) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double saved = param[i];
            param[i] = saved + eps;
            const double plus = param[i];
            const long double up = loss(probe);
            param[i] = saved - eps;
            const double minus = param[i];
            const long double down = loss(probe);
            param[i] = saved;
            // divide by the step actually taken after rounding saved +- eps
            const auto numeric = static_cast<double>((up - down) / (static_cast<long double>(plus) - minus));
            const double a = grad[i];
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
            ++report.parameters_checked;
            if (report.worst_parameter.empty() || rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_parameter = std::string(group) + "[" + std::to_string(i) + "]";
            }
        }
    };
    check("projection.weight", probe.projection.weights, analytic.projection_weight);
    check("projection.bias", probe.projection.bias, analytic.projection_bias);
    check("thinker.query", probe.thinker.query, analytic.query);
    check("thinker.key", probe.thinker.key, analytic.key);
    return report;
}

std::string metrics_to_jsonl(const std::vector<MetricRecord>& metrics) {
    std::string out;
    for (const auto& m : metrics) {
        out += canonical_dump(json{{"stage", m.stage}, {"step", m.step}, {"loss", m.loss}, {"accuracy", m.accuracy}});
        out.push_back('\n');
    }
    return out;
}

std::map<std::string, std::string> parameter_digests(const ToyModel& model) {
    std::vector<double> enc;
    EncoderParams::visit(model.encoder, [&](const std::string&, const std::vector<std::size_t>&,
                                            const std::vector<double>& t) { enc.insert(enc.end(), t.begin(), t.end()); });
    std::vector<double> proj = model.projection.weights;
    proj.insert(proj.end(), model.projection.bias.begin(), model.projection.bias.end());
    std::vector<double> think = model.thinker.query;
    think.insert(think.end(), model.thinker.key.begin(), model.thinker.key.end());
    return {{"encoder", tensor_digest(enc)}, {"projection", tensor_digest(proj)}, {"thinker", tensor_digest(think)}};
}

namespace {

double dataset_loss(const ToyModel& model, const std::vector<EncodedBatch>& data) {
    double total = 0.0;
    std::size_t n = 0;
    for (const auto& b : data) {
        total += toy_loss(model, b) * static_cast<double>(b.visual.size());
        n += b.visual.size();
    }
    return total / static_cast<double>(n);
}

StageResult run_stage(ToyModel& model, const std::vector<EncodedBatch>& data, const ToyConfig& cfg, int stage,
                      std::size_t epochs, bool train_thinker) {
    if (data.empty()) throw UsageError("training set is empty");
    cfg.validate();
    StageResult r;
    const std::vector<std::string> frozen =
        train_thinker ? std::vector<std::string>{"encoder"} : std::vector<std::string>{"encoder", "thinker"};
    auto digests = parameter_digests(model);
    for (const auto& name : frozen) r.frozen_before[name] = digests[name];

    r.initial_loss = dataset_loss(model, data);
    const double lr = cfg.learning_rate;
    auto descend = [lr](std::vector<double>& param, const std::vector<double>& grad) {
        for (std::size_t i = 0; i < param.size(); ++i) param[i] -= lr * grad[i];
    };
    std::size_t step = 0;
    ToyGradients g;
    for (std::size_t e = 0; e < epochs; ++e) {
        double epoch_total = 0.0;
        for (const auto& batch : data) {
            const auto pred = predict(model, batch);
            std::size_t hit = 0;
            for (std::size_t s = 0; s < pred.size(); ++s) hit += pred[s] == batch.target[s] ? 1 : 0;
            const double loss = loss_and_grad(model, batch, g);
            r.metrics.push_back({stage, step++, loss, static_cast<double>(hit) / static_cast<double>(pred.size())});
            epoch_total += loss;
            descend(model.projection.weights, g.projection_weight);
            descend(model.projection.bias, g.projection_bias);
            if (train_thinker) {
                descend(model.thinker.query, g.query);
                descend(model.thinker.key, g.key);
            }
        }
        r.epoch_losses.push_back(epoch_total / static_cast<double>(data.size()));
    }
    r.final_loss = dataset_loss(model, data);

    digests = parameter_digests(model);
    for (const auto& name : frozen) r.frozen_after[name] = digests[name];
    return r;
}

}  // namespace

StageResult train_stage1(ToyModel& model, const std::vector<EncodedBatch>& data, const ToyConfig& cfg) {
    return run_stage(model, data, cfg, 1, cfg.stage1_epochs, false);
}

StageResult train_stage2(ToyModel& model, const std::vector<EncodedBatch>& data, const ToyConfig& cfg) {
    return run_stage(model, data, cfg, 2, cfg.stage2_epochs, true);
}

Checkpoint to_checkpoint(const ToyModel& model, const ToyConfig& cfg, int stage) {
    Checkpoint ckpt;
    ckpt.config = json{{"toy", to_json(cfg)}, {"stage", stage}};
    EncoderParams::visit(model.encoder, [&](const std::string& name, const std::vector<std::size_t>& shape,
                                            const std::vector<double>& t) { ckpt.add(name, shape, t); });
    const std::size_t p2 = model.projection.patch * model.projection.patch;
    const std::size_t d = model.projection.dim;
    ckpt.add("projection.weight", {p2, d}, model.projection.weights);
    ckpt.add("projection.bias", {d}, model.projection.bias);
    ckpt.add("thinker.query", {model.thinker.dim}, model.thinker.query);
    ckpt.add("thinker.key", {model.thinker.dim, model.thinker.dim}, model.thinker.key);
    return ckpt;
}

ToyModel model_from_checkpoint(const Checkpoint& ckpt, ToyConfig* cfg_out, int* stage_out) {
    ToyConfig cfg;
    int stage = 0;
    try {
        cfg = toy_config_from_json(ckpt.config.at("toy"));
        stage = ckpt.config.at("stage").get<int>();
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint config is not a toy model: ") + e.what());
    }
    try {
        cfg.validate();
    } catch (const UsageError& e) {
        throw DataError(std::string("checkpoint config is invalid: ") + e.what());
    }
    ToyModel m;
    m.encoder = init_encoder(cfg.encoder_config());
    EncoderParams::visit(m.encoder, [&](const std::string& name, const std::vector<std::size_t>& shape,
                                        std::vector<double>& t) { ckpt.load_into(name, shape, t); });
    const std::size_t p2 = cfg.patch * cfg.patch;
    m.projection = GazeProjection::zeros(cfg.patch, cfg.dim);
    ckpt.load_into("projection.weight", {p2, cfg.dim}, m.projection.weights);
    ckpt.load_into("projection.bias", {cfg.dim}, m.projection.bias);
    m.thinker.dim = cfg.dim;
    ckpt.load_into("thinker.query", {cfg.dim}, m.thinker.query);
    ckpt.load_into("thinker.key", {cfg.dim, cfg.dim}, m.thinker.key);
    if (cfg_out) *cfg_out = cfg;
    if (stage_out) *stage_out = stage;
    return m;
}

}  // namespace glarify
