#include "glarify/data_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "glarify/error.hpp"
#include "glarify/io_util.hpp"

namespace glarify {

const ActorNarration* VideoAnnotation::find_actor(std::string_view actor_id) const {
    for (const auto& a : actors)
        if (a.actor_id == actor_id) return &a;
    return nullptr;
}

std::string_view to_string(PointLabel v) {
    switch (v) {
        case PointLabel::relevant: return "relevant";
        case PointLabel::injected_irrelevant: return "injected_irrelevant";
        case PointLabel::propagated: return "propagated";
    }
    return "?";
}

std::string_view to_string(ReasoningType v) {
    return v == ReasoningType::spatial ? "spatial" : "temporal";
}

std::string_view to_string(SplitName v) { return v == SplitName::training ? "training" : "test"; }

PointLabel parse_point_label(std::string_view s) {
    if (s == "relevant") return PointLabel::relevant;
    if (s == "injected_irrelevant") return PointLabel::injected_irrelevant;
    if (s == "propagated") return PointLabel::propagated;
    throw DataError("unknown point label '" + std::string(s) + "'");
}

ReasoningType parse_reasoning_type(std::string_view s) {
    if (s == "spatial") return ReasoningType::spatial;
    if (s == "temporal") return ReasoningType::temporal;
    throw DataError("unknown reasoning type '" + std::string(s) + "'");
}

SplitName parse_split_name(std::string_view s) {
    if (s == "training") return SplitName::training;
    if (s == "test") return SplitName::test;
    throw DataError("unknown split name '" + std::string(s) + "'");
}

std::vector<std::uint32_t> QaSample::keyframe_indices() const {
    std::vector<std::uint32_t> out;
    out.reserve(trace.size());
    for (const auto& f : trace) out.push_back(f.keyframe_index);
    return out;
}

std::size_t QaSample::point_count() const {
    std::size_t n = 0;
    for (const auto& f : trace) n += f.points.size();
    return n;
}

// ---------------------------------------------------------------------------
// Annotations

namespace {

void check_point(const TracePoint& p, std::size_t keyframe_count) {
    if (!(p.x >= 0.0 && p.x <= 1.0) || !(p.y >= 0.0 && p.y <= 1.0))
        throw DataError("coordinate out of range");
    if (p.keyframe_index >= keyframe_count) throw DataError("keyframe_index out of range");
    if (p.time_ms < 0) throw DataError("negative time_ms");
}

TracePoint point_from_json(const json& j) {
    TracePoint p;
    p.x = quantize_micro(j.at("x").get<double>());
    p.y = quantize_micro(j.at("y").get<double>());
    p.keyframe_index = j.at("keyframe_index").get<std::uint32_t>();
    p.time_ms = j.at("time_ms").get<std::int64_t>();
    return p;
}

json point_to_json(const TracePoint& p) {
    return json{{"x", p.x}, {"y", p.y}, {"keyframe_index", p.keyframe_index}, {"time_ms", p.time_ms}};
}

VideoAnnotation annotation_from_json(const json& j) {
    if (!j.is_object()) throw DataError("record is not an object");
    const auto schema = j.at("schema").get<std::string>();
    if (schema != kAnnotationSchema)
        throw DataError("schema mismatch: expected " + std::string(kAnnotationSchema) + ", found " + schema);
    VideoAnnotation ann;
    ann.video_id = j.at("video_id").get<std::string>();
    for (const auto& k : j.at("keyframes")) {
        ann.keyframes.push_back(Keyframe{k.at("path").get<std::string>(), k.at("width").get<std::uint32_t>(),
                                         k.at("height").get<std::uint32_t>()});
    }
    for (const auto& a : j.at("actors")) {
        ActorNarration actor;
        actor.actor_id = a.at("actor_id").get<std::string>();
        actor.narration = a.at("narration").get<std::string>();
        for (const auto& w : a.at("word_spans")) {
            actor.word_spans.push_back(WordSpan{w.at("char_start").get<std::size_t>(),
                                                w.at("char_end").get<std::size_t>(),
                                                w.at("trace_point_indices").get<std::vector<std::size_t>>()});
        }
        for (const auto& p : a.at("trace")) {
            // range-check before quantizing so 1.0000004 is not silently accepted
            const double x = p.at("x").get<double>();
            const double y = p.at("y").get<double>();
            if (!(x >= 0.0 && x <= 1.0) || !(y >= 0.0 && y <= 1.0)) throw DataError("coordinate out of range");
            actor.trace.push_back(point_from_json(p));
        }
        ann.actors.push_back(std::move(actor));
    }
    return ann;
}

}  // namespace

void validate_annotation(const VideoAnnotation& ann) {
    if (ann.video_id.empty()) throw DataError("empty video_id");
    if (ann.keyframes.empty()) throw DataError("video has no keyframes");
    for (const auto& k : ann.keyframes)
        if (k.width == 0 || k.height == 0) throw DataError("keyframe with zero size");
    std::set<std::string_view> ids;
    for (const auto& a : ann.actors) {
        if (a.actor_id.empty()) throw DataError("empty actor_id");
        if (!ids.insert(a.actor_id).second) throw DataError("duplicate actor_id '" + a.actor_id + "'");
        for (const auto& p : a.trace) check_point(p, ann.keyframes.size());
        std::size_t prev_end = 0;
        for (const auto& w : a.word_spans) {
            if (w.char_start >= w.char_end) throw DataError("word span with char_start >= char_end");
            if (w.char_end > a.narration.size()) throw DataError("word span beyond narration");
            if (w.char_start < prev_end) throw DataError("word spans overlap or are unordered");
            prev_end = w.char_end;
            for (std::size_t i = 0; i < w.trace_point_indices.size(); ++i) {
                if (w.trace_point_indices[i] >= a.trace.size())
                    throw DataError("word span references missing trace point");
                if (i > 0 && w.trace_point_indices[i] <= w.trace_point_indices[i - 1])
                    throw DataError("trace_point_indices not strictly increasing");
            }
        }
    }
}

AnnotationParseResult parse_annotations(std::istream& in) {
    AnnotationParseResult out;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto ann = annotation_from_json(json::parse(line));
            validate_annotation(ann);
            if (!seen.insert(ann.video_id).second) {
                out.diagnostics.push_back({lineno, "duplicate video_id '" + ann.video_id + "'"});
                continue;
            }
            out.videos.push_back(std::move(ann));
        } catch (const json::exception& e) {
            out.diagnostics.push_back({lineno, std::string("malformed record: ") + e.what()});
        } catch (const DataError& e) {
            out.diagnostics.push_back({lineno, e.what()});
        }
    }
    return out;
}

std::vector<std::vector<TracePoint>> trace_for_span(const VideoAnnotation& ann, std::string_view actor_id,
                                                    std::size_t char_start, std::size_t char_end) {
    const ActorNarration* actor = ann.find_actor(actor_id);
    if (actor == nullptr) throw DataError("actor not found");
    std::set<std::size_t> indices;
    for (const auto& w : actor->word_spans) {
        if (w.char_start < char_end && char_start < w.char_end)
            indices.insert(w.trace_point_indices.begin(), w.trace_point_indices.end());
    }
    std::vector<std::vector<std::size_t>> grouped(ann.keyframes.size());
    for (auto i : indices) grouped[actor->trace[i].keyframe_index].push_back(i);
    std::vector<std::vector<TracePoint>> out(ann.keyframes.size());
    for (std::size_t k = 0; k < grouped.size(); ++k) {
        auto& g = grouped[k];
        std::stable_sort(g.begin(), g.end(), [&](std::size_t a, std::size_t b) {
            return actor->trace[a].time_ms < actor->trace[b].time_ms;
        });
        for (auto i : g) out[k].push_back(actor->trace[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dataset

void validate_sample(const QaSample& s) {
    if (s.video_id.empty() || s.actor_id.empty()) throw DataError("sample without video_id/actor_id");
    if (s.refer_start > s.refer_end) throw DataError("refer range inverted");
    std::size_t frames_with_injected = 0;
    std::size_t injected = 0;
    std::size_t propagated = 0;
    for (std::size_t f = 0; f < s.trace.size(); ++f) {
        const auto& fr = s.trace[f];
        if (f > 0 && fr.keyframe_index <= s.trace[f - 1].keyframe_index)
            throw DataError("keyframe_indices not strictly increasing");
        if (fr.labels.size() != fr.points.size()) throw DataError("trace_labels not parallel to trace");
        std::size_t frame_injected = 0;
        for (std::size_t i = 0; i < fr.points.size(); ++i) {
            const auto& p = fr.points[i];
            if (p.keyframe_index != fr.keyframe_index) throw DataError("point keyframe_index differs from its frame");
            if (!(p.x >= 0.0 && p.x <= 1.0) || !(p.y >= 0.0 && p.y <= 1.0)) throw DataError("coordinate out of range");
            if (p.time_ms < 0) throw DataError("negative time_ms");
            if (fr.labels[i] == PointLabel::injected_irrelevant) ++frame_injected;
            if (fr.labels[i] == PointLabel::propagated) ++propagated;
        }
        injected += frame_injected;
        if (frame_injected > 0) ++frames_with_injected;
    }
    if (!s.reasoning_type) {
        if (injected || propagated) throw DataError("perturbation labels on an untyped sample");
    } else if (*s.reasoning_type == ReasoningType::spatial) {
        if (frames_with_injected != 1) throw DataError("spatial sample must have exactly one injected frame");
        if (propagated) throw DataError("spatial sample with propagated points");
    } else {
        if (injected) throw DataError("temporal sample with injected points");
        if (!propagated) throw DataError("temporal sample without propagated points");
    }
    if (s.cot && s.cot->empty()) throw DataError("empty cot");
}

void validate_split(const DatasetSplit& split) {
    std::set<std::tuple<std::string_view, std::string_view, std::string_view>> keys;
    for (const auto& s : split.samples) {
        validate_sample(s);
        if (!keys.emplace(s.video_id, s.actor_id, s.refer_tag).second)
            throw DataError("duplicate sample (" + s.video_id + ", " + s.actor_id + ", " + s.refer_tag + ")");
    }
}

namespace {

json sample_to_json(const QaSample& s) {
    json trace = json::array();
    json labels = json::array();
    json kfs = json::array();
    for (const auto& f : s.trace) {
        kfs.push_back(f.keyframe_index);
        json pts = json::array();
        for (const auto& p : f.points) pts.push_back(point_to_json(p));
        trace.push_back(std::move(pts));
        json ls = json::array();
        for (auto l : f.labels) ls.push_back(to_string(l));
        labels.push_back(std::move(ls));
    }
    json prov = nullptr;
    if (s.provenance) {
        json orig = json::array();
        for (const auto& p : s.provenance->original_points) orig.push_back(point_to_json(p));
        prov = json{{"corrupted_keyframe", s.provenance->corrupted_keyframe},
                    {"source_actor_id", s.provenance->source_actor_id},
                    {"source_char_start", s.provenance->source_char_start},
                    {"source_char_end", s.provenance->source_char_end},
                    {"original_points", std::move(orig)}};
    }
    return json{{"video_id", s.video_id},
                {"actor_id", s.actor_id},
                {"refer_tag", s.refer_tag},
                {"refer_start", s.refer_start},
                {"refer_end", s.refer_end},
                {"direct_question", s.direct_question},
                {"indirect_question", s.indirect_question},
                {"answer", s.answer},
                {"keyframe_indices", std::move(kfs)},
                {"trace", std::move(trace)},
                {"trace_labels", std::move(labels)},
                {"reasoning_type", s.reasoning_type ? json(to_string(*s.reasoning_type)) : json(nullptr)},
                {"cot", s.cot ? json(*s.cot) : json(nullptr)},
                {"provenance", std::move(prov)},
                {"use_indirect_question", s.use_indirect_question}};
}

QaSample sample_from_json(const json& j) {
    QaSample s;
    s.video_id = j.at("video_id").get<std::string>();
    s.actor_id = j.at("actor_id").get<std::string>();
    s.refer_tag = j.at("refer_tag").get<std::string>();
    s.refer_start = j.at("refer_start").get<std::size_t>();
    s.refer_end = j.at("refer_end").get<std::size_t>();
    s.direct_question = j.at("direct_question").get<std::string>();
    s.indirect_question = j.at("indirect_question").get<std::string>();
    s.answer = j.at("answer").get<std::string>();
    const auto& kfs = j.at("keyframe_indices");
    const auto& trace = j.at("trace");
    const auto& labels = j.at("trace_labels");
    if (kfs.size() != trace.size() || kfs.size() != labels.size())
        throw DataError("keyframe_indices, trace and trace_labels lengths differ");
    for (std::size_t f = 0; f < kfs.size(); ++f) {
        FrameTrace fr;
        fr.keyframe_index = kfs[f].get<std::uint32_t>();
        for (const auto& p : trace[f]) fr.points.push_back(point_from_json(p));
        for (const auto& l : labels[f]) fr.labels.push_back(parse_point_label(l.get<std::string>()));
        s.trace.push_back(std::move(fr));
    }
    if (!j.at("reasoning_type").is_null())
        s.reasoning_type = parse_reasoning_type(j.at("reasoning_type").get<std::string>());
    if (!j.at("cot").is_null()) s.cot = j.at("cot").get<std::string>();
    if (const auto& p = j.at("provenance"); !p.is_null()) {
        InjectionProvenance prov;
        prov.corrupted_keyframe = p.at("corrupted_keyframe").get<std::uint32_t>();
        prov.source_actor_id = p.at("source_actor_id").get<std::string>();
        prov.source_char_start = p.at("source_char_start").get<std::size_t>();
        prov.source_char_end = p.at("source_char_end").get<std::size_t>();
        for (const auto& q : p.at("original_points")) prov.original_points.push_back(point_from_json(q));
        s.provenance = std::move(prov);
    }
    s.use_indirect_question = j.at("use_indirect_question").get<bool>();
    return s;
}

}  // namespace

std::string serialize_dataset(const DatasetSplit& split) {
    validate_split(split);
    std::string out = canonical_dump(json{{"schema", kDatasetSchema},
                                          {"split", to_string(split.split)},
                                          {"count", split.samples.size()}});
    out.push_back('\n');
    for (const auto& s : split.samples) {
        out += canonical_dump(sample_to_json(s));
        out.push_back('\n');
    }
    return out;
}

void write_dataset(const DatasetSplit& split, std::ostream& sink) {
    const auto text = serialize_dataset(split);
    sink.write(text.data(), static_cast<std::streamsize>(text.size()));
}

DatasetSplit read_dataset(std::istream& source) {
    std::string line;
    if (!std::getline(source, line)) throw DataError("empty dataset stream");
    DatasetSplit split;
    std::size_t expected = 0;
    try {
        const auto header = json::parse(line);
        const auto schema = header.at("schema").get<std::string>();
        if (schema != kDatasetSchema)
            throw DataError("dataset schema mismatch: expected " + std::string(kDatasetSchema) + ", found " +
                            schema);
        split.split = parse_split_name(header.at("split").get<std::string>());
        expected = header.at("count").get<std::size_t>();
        std::size_t lineno = 1;
        while (std::getline(source, line)) {
            ++lineno;
            if (line.empty()) continue;
            try {
                split.samples.push_back(sample_from_json(json::parse(line)));
            } catch (const json::exception& e) {
                throw DataError("dataset line " + std::to_string(lineno) + ": " + e.what());
            }
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("dataset header: ") + e.what());
    }
    if (split.samples.size() != expected)
        throw DataError("dataset header announces " + std::to_string(expected) + " samples, found " +
                        std::to_string(split.samples.size()));
    validate_split(split);
    return split;
}

}  // namespace glarify
