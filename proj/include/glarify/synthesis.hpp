#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "glarify/data_model.hpp"
#include "glarify/error.hpp"
#include "glarify/llm_client.hpp"

namespace glarify {

/// Why a question (or a whole draft) was filtered out. Persisted per item.
enum class DropReason {
    client_error,
    malformed_response,
    question_count,
    tag_structure,
    tag_reconstruction_mismatch,
    refer_tag,
    duplicate_refer_tag,
    empty_field,
    not_ambiguous,
    tag_offset,
    no_keyframes,
    no_irrelevant_source,
    subject_no_trace,
    cot,
};

std::string_view to_string(DropReason r);

/// Thrown by per-sample stages; the pipeline counts it and moves on.
class SampleDropped : public DataError {
  public:
    SampleDropped(DropReason reason, const std::string& detail = {})
        : DataError(std::string(to_string(reason)) + (detail.empty() ? "" : ": " + detail)), reason_(reason) {}
    [[nodiscard]] DropReason reason() const noexcept { return reason_; }

  private:
    DropReason reason_;
};

struct DraftQuestion {
    std::string refer_tag;
    std::string direct_question;
    std::string indirect_question;
    std::string answer;
};

/// One QA-generation answer: the narration with <Qn> tags and its questions.
struct QaDraft {
    std::string refer_content;
    std::vector<DraftQuestion> questions;
};

/// Reads the {"refer_content", "qa_pairs"} object. Throws
/// SampleDropped(malformed_response) when fields are missing or mistyped.
QaDraft parse_qa_draft(const nlohmann::json& value);

/// Outcome of validate_qa_draft. A draft-level failure drops every
/// question; otherwise each question is judged on its own.
struct DraftVerdict {
    std::optional<DropReason> draft_drop;
    std::vector<std::optional<DropReason>> question_drops;  // parallel to questions

    /// True when the draft and all of its questions pass.
    [[nodiscard]] bool ok() const;
    /// First failing reason; only meaningful when !ok().
    [[nodiscard]] DropReason reason() const;
    [[nodiscard]] std::vector<std::size_t> kept_questions() const;
};

DraftVerdict validate_qa_draft(const QaDraft& draft, std::string_view narration);

/// Byte range of `<Qn>...</Qn>` (refer_tag) once all tags are stripped
/// from `refer_content`. Throws SampleDropped(tag_offset) when absent.
std::pair<std::size_t, std::size_t> refer_tag_offsets(std::string_view refer_content, std::string_view refer_tag);

struct LlmSettings {
    std::string model = "gpt-4o";
    double temperature = 0.7;
    int max_output_tokens = 1024;
};

/// QA-generation request for one actor: background information is every
/// narration of the video joined by spaces, the referable sentence is the
/// actor's narration, and all keyframes ride along as attachments.
ChatRequest build_qa_request(const VideoAnnotation& ann, std::string_view actor_id, const LlmSettings& settings);

struct QaGeneration {
    QaDraft draft;
    DraftVerdict verdict;
    std::optional<DropReason> failure;  // client error or unparseable answer
    std::string failure_detail;

    [[nodiscard]] std::vector<std::size_t> kept_questions() const;
};

/// Questions requested per actor narration.
inline constexpr std::size_t kQuestionsPerActor = 3;

QaGeneration generate_qa(const VideoAnnotation& ann, std::string_view actor_id, LlmClient& client,
                         const LlmSettings& settings = {});

/// Pre-perturbation sample for question `question_index` of `draft`:
/// keyframes are those touched by the actor's whole narration trace, the
/// trace is the refer_tag's word-aligned points, all labelled relevant.
QaSample attach_trace(const QaDraft& draft, std::size_t question_index, const VideoAnnotation& ann,
                      std::string_view actor_id);

ChatRequest build_cot_request(const QaSample& sample, const VideoAnnotation& ann, const LlmSettings& settings);

/// Asks for {"reasoning": str}; throws SampleDropped(cot) on an
/// unparseable or empty answer.
std::string generate_cot(const QaSample& sample, const VideoAnnotation& ann, LlmClient& client,
                         const LlmSettings& settings = {});

/// kept / raw_in rounded to 4 decimals. Throws UsageError when raw_in is 0
/// or kept > raw_in.
double compute_survival_rate(std::size_t raw_in, std::size_t kept);

}  // namespace glarify
