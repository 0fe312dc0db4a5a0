#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "glarify/data_model.hpp"
#include "glarify/llm_client.hpp"
#include "glarify/synthesis.hpp"

namespace glarify {

inline constexpr std::string_view kStatsSchema = "glarify-stats/1";
inline constexpr std::string_view kStageGenerateQa = "Generate QA pairs";
inline constexpr std::string_view kStageModifyTrace = "Modify Trace Data";
inline constexpr std::string_view kStageGenerateCot = "Generate CoT";

/// One row of the dataset statistics table.
struct StageStats {
    std::string split;
    std::string stage;
    std::size_t videos = 0;
    std::size_t actors = 0;
    std::optional<std::size_t> questions_spatial;  // unset before trace modification types the questions
    std::optional<std::size_t> questions_temporal;
    std::size_t questions_total = 0;
    std::size_t raw_in = 0;
    std::size_t kept = 0;
    std::optional<double> survival_rate;  // unset when raw_in == 0

    friend bool operator==(const StageStats&, const StageStats&) = default;
};

struct PipelineStats {
    std::vector<StageStats> stages;

    friend bool operator==(const PipelineStats&, const PipelineStats&) = default;
};

/// One record per stage.
std::string stats_to_jsonl(const PipelineStats& stats);
PipelineStats stats_from_jsonl(std::string_view text);
/// Plain-text table: Split, Stage, #Videos, #Actors, Spatial, Temporal, SR.
std::string render_stats_table(const PipelineStats& stats);

struct DropRecord {
    std::string video_id;
    std::string actor_id;
    std::optional<std::size_t> question;  // unset for actor-level failures
    std::string stage;
    DropReason reason = DropReason::malformed_response;
    std::string detail;
};

struct PipelineConfig {
    std::filesystem::path input;
    std::filesystem::path output_dir;  // empty: nothing written
    std::uint64_t seed = 0;
    SplitName split = SplitName::training;
    std::size_t jobs = 1;
    std::ptrdiff_t max_in_flight = 4;
    LlmSettings llm;
    std::filesystem::path transcript;  // replay mode when set
    std::optional<double> sigma;       // heatmap kernel width; default derives from the frame size
    std::size_t patch = 14;
};

/// Parses `key = value` lines ('#' starts a comment). Keys: input,
/// output_dir, seed, split, jobs, max_in_flight, model, temperature,
/// max_output_tokens, transcript, sigma, patch. Unknown keys are errors.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
void apply_config_text(PipelineConfig& cfg, std::string_view text);

struct PipelineResult {
    DatasetSplit dataset;
    PipelineStats stats;
    std::vector<DropRecord> drops;
};

/// QA generation, trace attachment and perturbation, then CoT generation for
/// every non-background actor of every video. Actor tasks run on
/// `cfg.jobs` threads; results are merged in video then actor order, so the
/// output does not depend on scheduling.
PipelineResult run_pipeline(const std::vector<VideoAnnotation>& videos, const PipelineConfig& cfg,
                            LlmClient& client);

/// Reads cfg.input, runs, and when cfg.output_dir is set writes
/// dataset.jsonl, stats.jsonl, stats.txt and drops.jsonl atomically.
/// Throws DataError when the input cannot be read.
PipelineResult run_pipeline(const PipelineConfig& cfg, LlmClient& client);

std::string drops_to_jsonl(const std::vector<DropRecord>& drops);

}  // namespace glarify
