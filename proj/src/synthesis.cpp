#include "glarify/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "glarify/prompts.hpp"
#include "glarify/text_util.hpp"

namespace glarify {

std::string_view to_string(DropReason r) {
    switch (r) {
        case DropReason::client_error: return "client error";
        case DropReason::malformed_response: return "malformed response";
        case DropReason::question_count: return "question count";
        case DropReason::tag_structure: return "tag structure";
        case DropReason::tag_reconstruction_mismatch: return "tag reconstruction mismatch";
        case DropReason::refer_tag: return "refer tag";
        case DropReason::duplicate_refer_tag: return "duplicate refer tag";
        case DropReason::empty_field: return "empty field";
        case DropReason::not_ambiguous: return "not ambiguous";
        case DropReason::tag_offset: return "tag offset";
        case DropReason::no_keyframes: return "no keyframes";
        case DropReason::no_irrelevant_source: return "no irrelevant source";
        case DropReason::subject_no_trace: return "subject has no trace";
        case DropReason::cot: return "cot";
    }
    return "?";
}

namespace {

struct QTag {
    int number = 0;
    bool closing = false;
    std::size_t pos = 0;
    std::size_t len = 0;
};

std::vector<QTag> scan_tags(std::string_view s) {
    std::vector<QTag> tags;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '<') continue;
        std::size_t j = i + 1;
        const bool closing = j < s.size() && s[j] == '/';
        if (closing) ++j;
        if (j >= s.size() || s[j] != 'Q') continue;
        std::size_t k = j + 1;
        int n = 0;
        while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) n = n * 10 + (s[k++] - '0');
        if (k == j + 1 || k >= s.size() || s[k] != '>') continue;
        tags.push_back({n, closing, i, k + 1 - i});
        i = k;
    }
    return tags;
}

bool well_formed_tags(std::string_view refer_content) {
    std::vector<int> stack;
    std::set<int> opened;
    std::set<int> closed;
    for (const auto& t : scan_tags(refer_content)) {
        if (t.number < 1 || t.number > static_cast<int>(kQuestionsPerActor)) return false;
        if (!t.closing) {
            if (!opened.insert(t.number).second) return false;
            stack.push_back(t.number);
        } else {
            if (stack.empty() || stack.back() != t.number) return false;
            stack.pop_back();
            closed.insert(t.number);
        }
    }
    return stack.empty() && opened.size() == kQuestionsPerActor && closed.size() == kQuestionsPerActor;
}

/// Tag number of a refer_tag of the exact form "<Qn>...</Qn>", else 0.
int refer_tag_number(std::string_view tag) {
    const auto tags = scan_tags(tag);
    if (tags.size() < 2) return 0;
    const auto& open = tags.front();
    const auto& close = tags.back();
    if (open.pos != 0 || open.closing || !close.closing || open.number != close.number) return 0;
    if (close.pos + close.len != tag.size()) return 0;
    return open.number;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool restates_refer_tag(const DraftQuestion& q) {
    std::set<std::string> tag_words;
    for (auto& w : text::content_words(text::strip_q_tags(q.refer_tag)))
        if (w.size() > 3) tag_words.insert(std::move(w));
    for (const auto& t : text::tokenize(q.indirect_question))
        if (tag_words.count(t)) return true;
    return false;
}

}  // namespace

QaDraft parse_qa_draft(const nlohmann::json& value) {
    try {
        QaDraft d;
        d.refer_content = value.at("refer_content").get<std::string>();
        for (const auto& q : value.at("qa_pairs")) {
            d.questions.push_back(DraftQuestion{q.at("refer_tag").get<std::string>(),
                                                q.at("direct_question").get<std::string>(),
                                                q.at("indirect_question").get<std::string>(),
                                                q.at("answer").get<std::string>()});
        }
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw SampleDropped(DropReason::malformed_response, e.what());
    }
}

bool DraftVerdict::ok() const {
    if (draft_drop) return false;
    return std::none_of(question_drops.begin(), question_drops.end(), [](const auto& r) { return r.has_value(); });
}

DropReason DraftVerdict::reason() const {
    if (draft_drop) return *draft_drop;
    for (const auto& r : question_drops)
        if (r) return *r;
    return DropReason::malformed_response;
}

std::vector<std::size_t> DraftVerdict::kept_questions() const {
    std::vector<std::size_t> out;
    if (draft_drop) return out;
    for (std::size_t i = 0; i < question_drops.size(); ++i)
        if (!question_drops[i]) out.push_back(i);
    return out;
}

DraftVerdict validate_qa_draft(const QaDraft& draft, std::string_view narration) {
    DraftVerdict v;
    v.question_drops.resize(draft.questions.size());
    auto fail_all = [&](DropReason r) {
        v.draft_drop = r;
        std::fill(v.question_drops.begin(), v.question_drops.end(), r);
        return v;
    };
    if (draft.questions.size() != kQuestionsPerActor) return fail_all(DropReason::question_count);
    if (!well_formed_tags(draft.refer_content)) return fail_all(DropReason::tag_structure);
    if (text::strip_q_tags(draft.refer_content) != narration)
        return fail_all(DropReason::tag_reconstruction_mismatch);

    std::set<int> used;
    for (std::size_t i = 0; i < draft.questions.size(); ++i) {
        const auto& q = draft.questions[i];
        auto& slot = v.question_drops[i];
        if (trim(q.refer_tag).empty() || trim(q.direct_question).empty() || trim(q.indirect_question).empty() ||
            trim(q.answer).empty()) {
            slot = DropReason::empty_field;
            continue;
        }
        const int n = refer_tag_number(q.refer_tag);
        if (n == 0 || draft.refer_content.find(q.refer_tag) == std::string::npos) {
            slot = DropReason::refer_tag;
            continue;
        }
        if (!used.insert(n).second) {
            slot = DropReason::duplicate_refer_tag;
            continue;
        }
        if (restates_refer_tag(q)) slot = DropReason::not_ambiguous;
    }
    return v;
}

std::pair<std::size_t, std::size_t> refer_tag_offsets(std::string_view refer_content, std::string_view refer_tag) {
    const auto pos = refer_tag.empty() ? std::string_view::npos : refer_content.find(refer_tag);
    if (pos == std::string_view::npos) throw SampleDropped(DropReason::tag_offset, "refer_tag not in refer_content");
    const std::size_t start = text::strip_q_tags(refer_content.substr(0, pos)).size();
    return {start, start + text::strip_q_tags(refer_tag).size()};
}

ChatRequest build_qa_request(const VideoAnnotation& ann, std::string_view actor_id, const LlmSettings& settings) {
    const ActorNarration* actor = ann.find_actor(actor_id);
    if (actor == nullptr) throw DataError("actor not found");
    std::string background;
    for (const auto& a : ann.actors) {
        if (!background.empty()) background.push_back(' ');
        background += a.narration;
    }
    const auto& tmpl = prompt_template(kQaPrompt);
    ChatRequest req;
    req.system_prompt = tmpl.system;
    req.user_text = text::render_template(tmpl.user, {{"background", background}, {"referable", actor->narration}});
    for (const auto& k : ann.keyframes) req.image_refs.push_back(k.path);
    req.model_name = settings.model;
    req.temperature = settings.temperature;
    req.max_output_tokens = settings.max_output_tokens;
    return req;
}

std::vector<std::size_t> QaGeneration::kept_questions() const {
    if (failure) return {};
    return verdict.kept_questions();
}

QaGeneration generate_qa(const VideoAnnotation& ann, std::string_view actor_id, LlmClient& client,
                         const LlmSettings& settings) {
    if (actor_id == kBackgroundActor) throw UsageError("no QA pairs are generated for the background narration");
    const ActorNarration* actor = ann.find_actor(actor_id);
    if (actor == nullptr) throw DataError("actor not found");
    QaGeneration out;
    std::string text;
    try {
        text = client.complete(build_qa_request(ann, actor_id, settings)).text;
    } catch (const ServiceError& e) {
        out.failure = DropReason::client_error;
        out.failure_detail = e.what();
        return out;
    }
    try {
        out.draft = parse_qa_draft(extract_json_block(text));
    } catch (const SampleDropped& e) {
        out.failure = e.reason();
        out.failure_detail = e.what();
        return out;
    } catch (const DataError& e) {
        out.failure = DropReason::malformed_response;
        out.failure_detail = e.what();
        return out;
    }
    out.verdict = validate_qa_draft(out.draft, actor->narration);
    return out;
}

QaSample attach_trace(const QaDraft& draft, std::size_t question_index, const VideoAnnotation& ann,
                      std::string_view actor_id) {
    if (question_index >= draft.questions.size()) throw UsageError("question index out of range");
    const ActorNarration* actor = ann.find_actor(actor_id);
    if (actor == nullptr) throw DataError("actor not found");
    const auto& q = draft.questions[question_index];
    const auto [start, end] = refer_tag_offsets(draft.refer_content, q.refer_tag);
    if (end > actor->narration.size() ||
        actor->narration.compare(start, end - start, text::strip_q_tags(q.refer_tag)) != 0)
        throw SampleDropped(DropReason::tag_offset, "refer_tag not found in narration");

    std::set<std::uint32_t> keyframes;
    for (const auto& p : actor->trace) keyframes.insert(p.keyframe_index);
    if (keyframes.empty()) throw SampleDropped(DropReason::no_keyframes);

    const auto groups = trace_for_span(ann, actor_id, start, end);
    QaSample s;
    s.video_id = ann.video_id;
    s.actor_id = std::string(actor_id);
    s.refer_tag = q.refer_tag;
    s.refer_start = start;
    s.refer_end = end;
    s.direct_question = q.direct_question;
    s.indirect_question = q.indirect_question;
    s.answer = q.answer;
    for (auto k : keyframes) {
        FrameTrace f{k, groups[k], {}};
        f.labels.assign(f.points.size(), PointLabel::relevant);
        s.trace.push_back(std::move(f));
    }
    return s;
}

namespace {

std::string trace_summary(const QaSample& s) {
    std::string out;
    char buf[96];
    for (const auto& f : s.trace) {
        out += "keyframe " + std::to_string(f.keyframe_index) + ":";
        for (const auto& p : f.points) {
            std::snprintf(buf, sizeof buf, " (%.3f, %.3f, %lldms)", p.x, p.y, static_cast<long long>(p.time_ms));
            out += buf;
        }
        out.push_back('\n');
    }
    if (!out.empty()) out.pop_back();
    return out;
}

std::string join_indices(const std::vector<std::uint32_t>& v) {
    std::string out;
    for (auto k : v) {
        if (!out.empty()) out += ", ";
        out += std::to_string(k);
    }
    return out;
}

}  // namespace

ChatRequest build_cot_request(const QaSample& sample, const VideoAnnotation& ann, const LlmSettings& settings) {
    if (!sample.reasoning_type) throw UsageError("CoT needs a perturbed, typed sample");
    const ActorNarration* actor = ann.find_actor(sample.actor_id);
    if (actor == nullptr) throw DataError("actor not found");
    std::string background;
    for (const auto& a : ann.actors) {
        if (!background.empty()) background.push_back(' ');
        background += a.narration;
    }
    std::string guidance;
    if (*sample.reasoning_type == ReasoningType::spatial) {
        std::vector<std::uint32_t> injected;
        for (const auto& f : sample.trace)
            if (std::find(f.labels.begin(), f.labels.end(), PointLabel::injected_irrelevant) != f.labels.end())
                injected.push_back(f.keyframe_index);
        guidance = text::render_template(prompt_template(kCotSpatialGuidance).system,
                                         {{"irrelevant_keyframe", join_indices(injected)}});
    } else {
        std::vector<std::uint32_t> propagated;
        for (const auto& f : sample.trace)
            if (std::find(f.labels.begin(), f.labels.end(), PointLabel::propagated) != f.labels.end())
                propagated.push_back(f.keyframe_index);
        guidance = text::render_template(prompt_template(kCotTemporalGuidance).system,
                                         {{"propagated_keyframes", join_indices(propagated)}});
    }
    const auto& tmpl = prompt_template(kCotPrompt);
    ChatRequest req;
    req.system_prompt = tmpl.system;
    req.user_text = text::render_template(tmpl.user, {{"background", background},
                                                      {"referable", actor->narration},
                                                      {"reasoning_type", std::string(to_string(*sample.reasoning_type))},
                                                      {"guidance", guidance},
                                                      {"indirect_question", sample.indirect_question},
                                                      {"direct_question", sample.direct_question},
                                                      {"answer", sample.answer},
                                                      {"trace_summary", trace_summary(sample)}});
    for (const auto& f : sample.trace)
        if (f.keyframe_index < ann.keyframes.size()) req.image_refs.push_back(ann.keyframes[f.keyframe_index].path);
    req.model_name = settings.model;
    req.temperature = settings.temperature;
    req.max_output_tokens = settings.max_output_tokens;
    return req;
}

std::string generate_cot(const QaSample& sample, const VideoAnnotation& ann, LlmClient& client,
                         const LlmSettings& settings) {
    const auto text = client.complete(build_cot_request(sample, ann, settings)).text;
    nlohmann::json value;
    try {
        value = extract_json_block(text);
    } catch (const DataError& e) {
        throw SampleDropped(DropReason::cot, e.what());
    }
    if (!value.is_object() || !value.contains("reasoning") || !value["reasoning"].is_string())
        throw SampleDropped(DropReason::cot, "missing reasoning");
    auto reasoning = value["reasoning"].get<std::string>();
    if (trim(reasoning).empty()) throw SampleDropped(DropReason::cot, "empty reasoning");
    return reasoning;
}

double compute_survival_rate(std::size_t raw_in, std::size_t kept) {
    if (raw_in == 0) throw UsageError("survival rate needs raw_in > 0");
    if (kept > raw_in) throw UsageError("kept exceeds raw_in");
    return std::round(static_cast<double>(kept) / static_cast<double>(raw_in) * 1e4) / 1e4;
}

}  // namespace glarify
