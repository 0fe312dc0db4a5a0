#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace glarify {

inline constexpr std::string_view kAnnotationSchema = "glarify-ann/1";
inline constexpr std::string_view kDatasetSchema = "glarify-ds/1";
inline constexpr std::string_view kBackgroundActor = "background";

/// One sampled pointer/gaze position. Coordinates are normalized to [0,1]
/// with the origin at the top-left of the keyframe.
struct TracePoint {
    double x = 0.0;
    double y = 0.0;
    std::uint32_t keyframe_index = 0;
    std::int64_t time_ms = 0;

    friend bool operator==(const TracePoint&, const TracePoint&) = default;
};

/// Half-open byte range of one narration word and the trace points
/// recorded while it was spoken.
struct WordSpan {
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    std::vector<std::size_t> trace_point_indices;

    friend bool operator==(const WordSpan&, const WordSpan&) = default;
};

struct ActorNarration {
    std::string actor_id;
    std::string narration;
    std::vector<WordSpan> word_spans;
    std::vector<TracePoint> trace;

    [[nodiscard]] bool is_background() const { return actor_id == kBackgroundActor; }
    friend bool operator==(const ActorNarration&, const ActorNarration&) = default;
};

struct Keyframe {
    std::string path;
    std::uint32_t width = 0;
    std::uint32_t height = 0;

    friend bool operator==(const Keyframe&, const Keyframe&) = default;
};

struct VideoAnnotation {
    std::string video_id;
    std::vector<Keyframe> keyframes;
    std::vector<ActorNarration> actors;

    /// nullptr when no actor has that id.
    [[nodiscard]] const ActorNarration* find_actor(std::string_view actor_id) const;
    friend bool operator==(const VideoAnnotation&, const VideoAnnotation&) = default;
};

enum class PointLabel { relevant, injected_irrelevant, propagated };
enum class ReasoningType { spatial, temporal };
enum class SplitName { training, test };

std::string_view to_string(PointLabel v);
std::string_view to_string(ReasoningType v);
std::string_view to_string(SplitName v);
PointLabel parse_point_label(std::string_view s);
ReasoningType parse_reasoning_type(std::string_view s);
SplitName parse_split_name(std::string_view s);

/// Trace points of one keyframe of a sample; `labels` is parallel to `points`.
struct FrameTrace {
    std::uint32_t keyframe_index = 0;
    std::vector<TracePoint> points;
    std::vector<PointLabel> labels;

    friend bool operator==(const FrameTrace&, const FrameTrace&) = default;
};

/// Where a spatial sample's injected points came from, and what they replaced.
struct InjectionProvenance {
    std::uint32_t corrupted_keyframe = 0;
    std::string source_actor_id;
    std::size_t source_char_start = 0;
    std::size_t source_char_end = 0;
    std::vector<TracePoint> original_points;

    friend bool operator==(const InjectionProvenance&, const InjectionProvenance&) = default;
};

struct QaSample {
    std::string video_id;
    std::string actor_id;
    std::string refer_tag;        // e.g. "<Q2>performing gymnastics</Q2>"
    std::size_t refer_start = 0;  // byte range of the untagged text in the narration
    std::size_t refer_end = 0;
    std::string direct_question;
    std::string indirect_question;
    std::string answer;
    std::vector<FrameTrace> trace;  // one entry per sample keyframe, ascending index
    std::optional<ReasoningType> reasoning_type;
    std::optional<std::string> cot;
    std::optional<InjectionProvenance> provenance;
    bool use_indirect_question = false;

    [[nodiscard]] std::vector<std::uint32_t> keyframe_indices() const;
    [[nodiscard]] std::size_t point_count() const;
    friend bool operator==(const QaSample&, const QaSample&) = default;
};

struct DatasetSplit {
    SplitName split = SplitName::training;
    std::vector<QaSample> samples;

    friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

struct Diagnostic {
    std::size_t line = 0;  // 1-based
    std::string cause;
};

struct AnnotationParseResult {
    std::vector<VideoAnnotation> videos;
    std::vector<Diagnostic> diagnostics;
};

/// Reads "glarify-ann/1" JSON Lines. Invalid lines are skipped and reported;
/// a later record reusing a video_id is skipped. Coordinates are snapped
/// to the 1e-6 grid on the way in.
AnnotationParseResult parse_annotations(std::istream& in);

/// Throws DataError describing the first violated invariant.
void validate_annotation(const VideoAnnotation& ann);

/// Trace points of every word span of `actor_id` overlapping
/// [char_start, char_end), grouped by keyframe (outer size = keyframe
/// count), time-ordered within a group. Throws DataError("actor not found").
std::vector<std::vector<TracePoint>> trace_for_span(const VideoAnnotation& ann,
                                                    std::string_view actor_id,
                                                    std::size_t char_start, std::size_t char_end);

/// Throws DataError when a sample breaks a QaSample invariant.
void validate_sample(const QaSample& s);
/// Sample invariants plus uniqueness of (video_id, actor_id, refer_tag).
void validate_split(const DatasetSplit& split);

/// Canonical "glarify-ds/1" text: a header line then one sample per line.
/// Validates first, so nothing is produced for an invalid split.
std::string serialize_dataset(const DatasetSplit& split);
void write_dataset(const DatasetSplit& split, std::ostream& sink);
DatasetSplit read_dataset(std::istream& source);

}  // namespace glarify
