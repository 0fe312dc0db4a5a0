#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "glarify/data_model.hpp"
#include "glarify/error.hpp"

namespace glarify {

class NoIrrelevantSource : public DataError {
  public:
    NoIrrelevantSource() : DataError("no irrelevant source") {}
};

class SubjectHasNoTrace : public DataError {
  public:
    SubjectHasNoTrace() : DataError("subject has no trace") {}
};

/// Spatial iff every sample keyframe has at least one trace point.
/// Throws UsageError when the sample has no keyframes.
ReasoningType classify_reasoning_type(const QaSample& sample);

/// A word span of another actor (or the background) usable as noise.
struct IrrelevantSource {
    std::string actor_id;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    std::vector<TracePoint> points;  // time-ordered, original keyframes
};

/// Word spans of every other actor whose text shares no content word with
/// the sample's refer_tag and that map to at least one trace point.
std::vector<IrrelevantSource> irrelevant_sources(const QaSample& sample, const VideoAnnotation& ann);

/// Replaces the points of one uniformly chosen keyframe with the trace of a
/// uniformly chosen irrelevant source, re-assigned to that keyframe and
/// linearly re-timed into the replaced points' time range.
/// Throws NoIrrelevantSource when nothing qualifies.
QaSample inject_spatial_noise(const QaSample& sample, const VideoAnnotation& ann, std::uint64_t seed);

/// Fills every empty keyframe with a copy of the points of the nearest
/// non-empty keyframe (distance in keyframe index, ties to the earlier one).
/// Throws SubjectHasNoTrace when all keyframes are empty.
QaSample propagate_temporal(const QaSample& sample, const VideoAnnotation& ann);

/// classify_reasoning_type followed by the matching procedure; the result
/// carries its reasoning_type.
QaSample perturb_sample(const QaSample& sample, const VideoAnnotation& ann, std::uint64_t seed);

/// seed_sample = derive_seed(global, video_id, actor_id, refer_tag).
std::uint64_t sample_seed(std::uint64_t global_seed, const QaSample& sample);

}  // namespace glarify
