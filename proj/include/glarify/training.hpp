#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "glarify/checkpoint.hpp"
#include "glarify/encoder.hpp"
#include "glarify/fusion.hpp"
#include "glarify/heatmap.hpp"

namespace glarify {

/// Synthetic gaze-pointing task: random frames, one Gaussian gaze blob per
/// sample, and the label is the index of the patch holding the blob centre.
/// Frames are (grid*patch) pixels square.
struct ToyConfig {
    std::size_t grid = 4;
    std::size_t patch = 4;
    std::size_t channels = 3;
    std::size_t frames = 1;
    std::size_t dim = 16;
    std::size_t heads = 2;
    std::size_t depth = 1;
    double blob_sigma = 1.0;  // pixels
    std::size_t batch_size = 16;
    double learning_rate = 1e-4;
    std::size_t stage1_epochs = 1;
    std::size_t stage2_epochs = 2;
    // Mirrors the large-scale recipe; gradients are averaged over the batch
    // and applied every step regardless.
    std::size_t grad_accumulation = 1;
    std::uint64_t seed = 0;

    [[nodiscard]] EncoderConfig encoder_config() const;
    [[nodiscard]] std::size_t image_side() const { return grid * patch; }
    [[nodiscard]] std::size_t classes() const { return grid * grid; }
    void validate() const;
};

nlohmann::json to_json(const ToyConfig& cfg);
ToyConfig toy_config_from_json(const nlohmann::json& j);

struct ToySample {
    PatchGrid frames;  // T x C x grid x grid x p x p
    PatchGrid gaze;    // T x 1 x grid x grid x p x p
    std::size_t target = 0;
};

struct ToyBatch {
    std::vector<ToySample> samples;
};

/// n samples cut into batches of cfg.batch_size (the last may be short).
/// Throws UsageError when n == 0.
std::vector<ToyBatch> make_toy_task(std::uint64_t seed, std::size_t n, const ToyConfig& cfg);

/// Cross-attention readout: logit_j = mean_t q . tanh(K x_tj) / sqrt(D).
struct Thinker {
    std::size_t dim = 0;
    std::vector<double> query;  // D
    std::vector<double> key;    // D x D, row d maps x to u_d

    friend bool operator==(const Thinker&, const Thinker&) = default;
};

struct ToyModel {
    EncoderParams encoder;
    GazeProjection projection;
    Thinker thinker;
};

/// Encoder from cfg.seed, zero projection, thinker drawn from `thinker_seed`.
ToyModel make_toy_model(const ToyConfig& cfg, std::uint64_t thinker_seed);

/// Encoder outputs for a batch. The encoder is frozen in both stages, so
/// training reuses these.
struct EncodedBatch {
    std::vector<TokenGrid> visual;
    std::vector<PatchGrid> gaze;
    std::vector<std::size_t> target;
};

EncodedBatch encode_batch(const ToyModel& model, const ToyBatch& batch, Exec exec = Exec::parallel);

struct ToyGradients {
    std::vector<double> projection_weight;
    std::vector<double> projection_bias;
    std::vector<double> query;
    std::vector<double> key;
};

/// Mean cross-entropy over the batch. `use_gaze == false` evaluates the
/// gaze-free model (thinker on V alone). Throws DataError on a non-finite loss.
double toy_loss(const ToyModel& model, const EncodedBatch& batch, bool use_gaze = true);

/// Loss and analytic gradient w.r.t. projection and thinker parameters.
double loss_and_grad(const ToyModel& model, const EncodedBatch& batch, ToyGradients& grad);

/// Per-sample argmax of the logits; exact ties go to the lowest index.
std::vector<std::size_t> predict(const ToyModel& model, const EncodedBatch& batch);
double accuracy(const ToyModel& model, const std::vector<EncodedBatch>& data);

/// toy_loss recomputed in long double straight from the parameters. Used as
/// the finite-difference side of grad_check.
long double toy_loss_extended(const ToyModel& model, const EncodedBatch& batch);

enum class FiniteDifference {
    extended,  // loss differences taken in long double
    plain,     // loss differences taken in double
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_parameter;
    std::size_t parameters_checked = 0;
};

/// Central differences of the loss against loss_and_grad for every
/// projection and thinker parameter. Relative error per parameter is
/// |a - n| / max(|a|, |n|, 1e-8). With `plain` differences, gradients near
/// 1e-7 hit the rounding floor of a double loss (about 1e-11 absolute at
/// eps 1e-5). `tamper` may edit the analytic gradient before comparison.
GradCheckReport grad_check(const ToyModel& model, const EncodedBatch& batch, double eps,
                           const std::function<void(ToyGradients&)>& tamper = {},
                           FiniteDifference mode = FiniteDifference::extended);

struct MetricRecord {
    int stage = 0;
    std::size_t step = 0;
    double loss = 0.0;
    double accuracy = 0.0;
};

std::string metrics_to_jsonl(const std::vector<MetricRecord>& metrics);

struct StageResult {
    std::vector<MetricRecord> metrics;       // one per step, measured before the update
    std::vector<double> epoch_losses;        // mean step loss per epoch
    double initial_loss = 0.0;               // whole training set, before the stage
    double final_loss = 0.0;                 // whole training set, after the stage
    std::map<std::string, std::string> frozen_before;  // tensor digest per frozen group
    std::map<std::string, std::string> frozen_after;
};

/// Stage 1: projection only, cfg.stage1_epochs epochs of plain gradient
/// descent. Encoder and thinker stay bit-identical.
StageResult train_stage1(ToyModel& model, const std::vector<EncodedBatch>& data, const ToyConfig& cfg);

/// Stage 2: thinker and projection jointly, cfg.stage2_epochs epochs.
/// Encoder stays bit-identical.
StageResult train_stage2(ToyModel& model, const std::vector<EncodedBatch>& data, const ToyConfig& cfg);

/// Digests of the three parameter groups: "encoder", "projection", "thinker".
std::map<std::string, std::string> parameter_digests(const ToyModel& model);

/// Checkpoint of the whole model; `stage` is recorded in the config.
Checkpoint to_checkpoint(const ToyModel& model, const ToyConfig& cfg, int stage);
/// Rebuilds a model and its config. Throws DataError on missing tensors or
/// shape mismatches.
ToyModel model_from_checkpoint(const Checkpoint& ckpt, ToyConfig* cfg = nullptr, int* stage = nullptr);

}  // namespace glarify
