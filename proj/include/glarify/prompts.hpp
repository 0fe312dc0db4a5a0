#pragma once

#include <string>
#include <string_view>

namespace glarify {

/// A versioned prompt file split at its "[system]" / "[user]" markers.
/// Files without markers are a single fragment held in `system`.
struct PromptTemplate {
    std::string system;
    std::string user;
};

inline constexpr std::string_view kQaPrompt = "qa_generation.v1.txt";
inline constexpr std::string_view kCotPrompt = "cot_generation.v1.txt";
inline constexpr std::string_view kCotSpatialGuidance = "cot_spatial.v1.txt";
inline constexpr std::string_view kCotTemporalGuidance = "cot_temporal.v1.txt";
inline constexpr std::string_view kJudgePrompt = "judge.v1.txt";

/// Embedded template by file name; throws UsageError for unknown names.
const PromptTemplate& prompt_template(std::string_view name);

}  // namespace glarify
