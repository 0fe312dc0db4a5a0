#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glarify/data_model.hpp"
#include "glarify/llm_client.hpp"
#include "glarify/synthesis.hpp"

namespace glarify {

/// One gaze sample: its time as a fraction of the query duration and
/// whether it lands on what the user asked about.
struct LabeledFixation {
    double t = 0.0;
    bool relevant = true;
};

struct RatioBin {
    double lo = 0.0;
    double hi = 0.0;
    std::size_t n_irrelevant = 0;
    std::size_t n_total = 0;
    std::optional<double> ratio;  // unset for empty bins

    [[nodiscard]] double center() const { return 0.5 * (lo + hi); }
};

struct RatioCurve {
    std::vector<RatioBin> bins;
};

inline constexpr std::size_t kDefaultRatioBins = 20;

/// Bin k of n covers [k/n, (k+1)/n); the last bin also takes t == 1.
/// Throws UsageError when n_bins == 0 and DataError for t outside [0,1].
std::size_t ratio_bin(double t, std::size_t n_bins);

/// Per-bin share of irrelevant fixations.
RatioCurve irrelevant_ratio(std::span<const LabeledFixation> fixations, std::size_t n_bins);

/// Line-delimited {"t": number, "relevant": bool}; blank lines skipped.
std::vector<LabeledFixation> read_fixations(std::istream& in);
/// One record per bin: {bin, lo, hi, center, n_irrelevant, n_total, ratio|null}.
std::string curve_to_jsonl(const RatioCurve& curve);
/// "center\tR" rows for plotting; empty bins print "nan".
std::string curve_to_tsv(const RatioCurve& curve);

/// Seeded uniform sample of n samples without replacement, sorted by
/// (video_id, actor_id, refer_tag), each flagged to present its indirect
/// question. Throws UsageError when n exceeds the split.
DatasetSplit sample_eval_set(const DatasetSplit& split, std::size_t n, std::uint64_t seed);

enum class Verdict { aligned, not_aligned, judge_error };
std::string_view to_string(Verdict v);

struct JudgeItem {
    std::string id;
    std::string question;
    std::string reference;
    std::string response;
};

struct JudgeOutcome {
    Verdict verdict = Verdict::judge_error;
    std::string detail;  // why a verdict could not be read
};

struct JudgeReport {
    std::vector<JudgeOutcome> items;  // parallel to the input
    std::size_t aligned = 0;
    std::size_t not_aligned = 0;
    std::size_t judge_errors = 0;
    std::optional<double> accuracy;  // aligned / (aligned + not_aligned); unset when nothing was judged
};

ChatRequest build_judge_request(const JudgeItem& item, const LlmSettings& settings);

/// Accepts exactly {"verdict": "aligned"|"not_aligned"} in a fenced json
/// block (or as the whole reply); anything else is judge_error.
JudgeOutcome parse_verdict(std::string_view reply);

/// Judges every item, `jobs` at a time with at most `max_in_flight` calls
/// outstanding. Client failures count as judge_error. The report does not
/// depend on item order or scheduling.
JudgeReport judge_accuracy(std::span<const JudgeItem> items, LlmClient& client, const LlmSettings& settings,
                           std::size_t jobs = 1, std::ptrdiff_t max_in_flight = 4);

/// Line-delimited {"id", "question", "reference", "response"}.
std::vector<JudgeItem> read_judge_items(std::istream& in);
/// One {"id", "verdict", "detail"} record per item.
std::string judge_report_to_jsonl(std::span<const JudgeItem> items, const JudgeReport& report);

}  // namespace glarify
