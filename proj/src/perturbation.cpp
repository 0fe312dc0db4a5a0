#include "glarify/perturbation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "glarify/error.hpp"
#include "glarify/io_util.hpp"
#include "glarify/text_util.hpp"

namespace glarify {

ReasoningType classify_reasoning_type(const QaSample& sample) {
    if (sample.trace.empty()) throw UsageError("sample has no keyframes");
    const bool covered = std::all_of(sample.trace.begin(), sample.trace.end(),
                                     [](const FrameTrace& f) { return !f.points.empty(); });
    return covered ? ReasoningType::spatial : ReasoningType::temporal;
}

std::uint64_t sample_seed(std::uint64_t global_seed, const QaSample& s) {
    return derive_seed(global_seed, {s.video_id, s.actor_id, s.refer_tag});
}

std::vector<IrrelevantSource> irrelevant_sources(const QaSample& sample, const VideoAnnotation& ann) {
    const auto tag_words = text::content_words(text::strip_q_tags(sample.refer_tag));
    const std::set<std::string> tag_set(tag_words.begin(), tag_words.end());
    std::vector<IrrelevantSource> out;
    for (const auto& actor : ann.actors) {
        if (actor.actor_id == sample.actor_id) continue;
        for (const auto& w : actor.word_spans) {
            if (w.trace_point_indices.empty()) continue;
            const auto phrase = std::string_view(actor.narration).substr(w.char_start, w.char_end - w.char_start);
            const auto words = text::content_words(phrase);
            const bool shares = std::any_of(words.begin(), words.end(),
                                            [&](const std::string& t) { return tag_set.count(t) > 0; });
            if (shares) continue;
            IrrelevantSource src{actor.actor_id, w.char_start, w.char_end, {}};
            for (auto i : w.trace_point_indices) src.points.push_back(actor.trace[i]);
            std::stable_sort(src.points.begin(), src.points.end(),
                             [](const TracePoint& a, const TracePoint& b) { return a.time_ms < b.time_ms; });
            out.push_back(std::move(src));
        }
    }
    return out;
}

namespace {

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

QaSample inject_spatial_noise(const QaSample& sample, const VideoAnnotation& ann, std::uint64_t seed) {
    if (classify_reasoning_type(sample) != ReasoningType::spatial)
        throw UsageError("spatial noise needs a trace on every keyframe");
    const auto sources = irrelevant_sources(sample, ann);
    if (sources.empty()) throw NoIrrelevantSource();

    std::mt19937_64 rng(seed);
    const std::size_t frame = uniform_index(rng, sample.trace.size());
    const auto& src = sources[uniform_index(rng, sources.size())];

    QaSample out = sample;
    FrameTrace& target = out.trace[frame];
    InjectionProvenance prov{target.keyframe_index, src.actor_id, src.char_start, src.char_end, target.points};

    std::int64_t lo = target.points.front().time_ms;
    std::int64_t hi = lo;
    for (const auto& p : target.points) {
        lo = std::min(lo, p.time_ms);
        hi = std::max(hi, p.time_ms);
    }
    const std::int64_t s_lo = src.points.front().time_ms;
    const std::int64_t s_hi = src.points.back().time_ms;

    target.points.clear();
    for (const auto& p : src.points) {
        TracePoint q = p;
        q.keyframe_index = target.keyframe_index;
        if (s_hi == s_lo) {
            q.time_ms = lo;
        } else {
            const double frac = static_cast<double>(p.time_ms - s_lo) / static_cast<double>(s_hi - s_lo);
            q.time_ms = lo + std::llround(frac * static_cast<double>(hi - lo));
        }
        target.points.push_back(q);
    }
    target.labels.assign(target.points.size(), PointLabel::injected_irrelevant);
    out.provenance = std::move(prov);
    out.reasoning_type = ReasoningType::spatial;
    return out;
}

QaSample propagate_temporal(const QaSample& sample, const VideoAnnotation& /*ann*/) {
    if (classify_reasoning_type(sample) != ReasoningType::temporal)
        throw UsageError("temporal propagation needs at least one empty keyframe");
    std::vector<std::size_t> sources;
    for (std::size_t f = 0; f < sample.trace.size(); ++f)
        if (!sample.trace[f].points.empty()) sources.push_back(f);
    if (sources.empty()) throw SubjectHasNoTrace();

    QaSample out = sample;
    for (std::size_t f = 0; f < sample.trace.size(); ++f) {
        if (!sample.trace[f].points.empty()) continue;
        const auto k = static_cast<std::int64_t>(sample.trace[f].keyframe_index);
        std::size_t best = sources.front();
        std::int64_t best_dist = -1;
        for (auto s : sources) {  // ascending keyframe index, so strict < keeps the earlier on ties
            const std::int64_t d = std::abs(static_cast<std::int64_t>(sample.trace[s].keyframe_index) - k);
            if (best_dist < 0 || d < best_dist) {
                best = s;
                best_dist = d;
            }
        }
        FrameTrace& dst = out.trace[f];
        for (const auto& p : sample.trace[best].points) {
            TracePoint q = p;
            q.keyframe_index = dst.keyframe_index;
            dst.points.push_back(q);
        }
        dst.labels.assign(dst.points.size(), PointLabel::propagated);
    }
    out.reasoning_type = ReasoningType::temporal;
    return out;
}

QaSample perturb_sample(const QaSample& sample, const VideoAnnotation& ann, std::uint64_t seed) {
    return classify_reasoning_type(sample) == ReasoningType::spatial ? inject_spatial_noise(sample, ann, seed)
                                                                     : propagate_temporal(sample, ann);
}

}  // namespace glarify
