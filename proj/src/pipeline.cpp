#include "glarify/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "glarify/error.hpp"
#include "glarify/io_util.hpp"
#include "glarify/perturbation.hpp"

namespace glarify {

// ---------------------------------------------------------------------------
// Stats

namespace {

json opt(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string stats_to_jsonl(const PipelineStats& stats) {
    std::string out;
    for (const auto& s : stats.stages) {
        out += canonical_dump(json{{"schema", kStatsSchema},
                                   {"split", s.split},
                                   {"stage", s.stage},
                                   {"videos", s.videos},
                                   {"actors", s.actors},
                                   {"questions_spatial", opt(s.questions_spatial)},
                                   {"questions_temporal", opt(s.questions_temporal)},
                                   {"questions_total", s.questions_total},
                                   {"raw_in", s.raw_in},
                                   {"kept", s.kept},
                                   {"survival_rate", s.survival_rate ? json(*s.survival_rate) : json(nullptr)}});
        out.push_back('\n');
    }
    return out;
}

PipelineStats stats_from_jsonl(std::string_view text) {
    PipelineStats stats;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            const auto schema = j.at("schema").get<std::string>();
            if (schema != kStatsSchema)
                throw DataError("stats schema mismatch: expected " + std::string(kStatsSchema) + ", found " + schema);
            StageStats s;
            s.split = j.at("split").get<std::string>();
            s.stage = j.at("stage").get<std::string>();
            s.videos = j.at("videos").get<std::size_t>();
            s.actors = j.at("actors").get<std::size_t>();
            if (!j.at("questions_spatial").is_null()) s.questions_spatial = j["questions_spatial"].get<std::size_t>();
            if (!j.at("questions_temporal").is_null())
                s.questions_temporal = j["questions_temporal"].get<std::size_t>();
            s.questions_total = j.at("questions_total").get<std::size_t>();
            s.raw_in = j.at("raw_in").get<std::size_t>();
            s.kept = j.at("kept").get<std::size_t>();
            if (!j.at("survival_rate").is_null()) s.survival_rate = j["survival_rate"].get<double>();
            if (s.kept > s.raw_in) throw DataError("kept exceeds raw_in");
            stats.stages.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw DataError("stats line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return stats;
}

std::string render_stats_table(const PipelineStats& stats) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"Split", "Stage", "#Videos", "#Actors", "Spatial", "Temporal", "SR"});
    for (const auto& s : stats.stages) {
        std::string split = s.split;
        if (!split.empty()) split[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(split[0])));
        std::string spatial;
        std::string temporal;
        if (s.questions_spatial && s.questions_temporal) {
            spatial = std::to_string(*s.questions_spatial);
            temporal = std::to_string(*s.questions_temporal);
        } else {
            // untyped stage: the total spans both question columns
            spatial = std::to_string(s.questions_total);
            temporal = "";
        }
        std::string sr = "-";
        if (s.survival_rate) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.2f%%", *s.survival_rate * 100.0);
            sr = buf;
        }
        rows.push_back({split, s.stage, std::to_string(s.videos), std::to_string(s.actors), spatial, temporal, sr});
    }
    std::vector<std::size_t> width(rows.front().size(), 0);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    std::string out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < rows[i].size(); ++c) {
            if (c) out += "  ";
            out += rows[i][c];
            if (c + 1 < rows[i].size()) out.append(width[c] - rows[i][c].size(), ' ');
        }
        while (!out.empty() && out.back() == ' ') out.pop_back();
        out.push_back('\n');
        if (i == 0) {
            std::size_t total = 0;
            for (auto w : width) total += w;
            out.append(total + 2 * (width.size() - 1), '-');
            out.push_back('\n');
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Config

void apply_config_text(PipelineConfig& cfg, std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        try {
            if (key == "input") cfg.input = value;
            else if (key == "output_dir") cfg.output_dir = value;
            else if (key == "seed") cfg.seed = std::stoull(value);
            else if (key == "split") cfg.split = parse_split_name(value);
            else if (key == "jobs") cfg.jobs = std::stoul(value);
            else if (key == "max_in_flight") cfg.max_in_flight = std::stol(value);
            else if (key == "model") cfg.llm.model = value;
            else if (key == "temperature") cfg.llm.temperature = std::stod(value);
            else if (key == "max_output_tokens") cfg.llm.max_output_tokens = std::stoi(value);
            else if (key == "transcript") cfg.transcript = value;
            else if (key == "sigma") cfg.sigma = std::stod(value);
            else if (key == "patch") cfg.patch = std::stoul(value);
            else throw UsageError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        } catch (const std::logic_error&) {
            throw UsageError("config line " + std::to_string(lineno) + ": bad value for '" + key + "'");
        }
    }
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    PipelineConfig cfg;
    apply_config_text(cfg, read_file(path));
    return cfg;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

struct ActorOutcome {
    bool attempted = false;
    std::size_t qa_kept = 0;
    std::vector<QaSample> typed;
    std::vector<QaSample> finished;
    std::vector<DropRecord> drops;
};

ActorOutcome run_actor(const VideoAnnotation& ann, const ActorNarration& actor, const PipelineConfig& cfg,
                       LlmClient& client) {
    ActorOutcome out;
    out.attempted = true;
    auto drop = [&](std::optional<std::size_t> q, std::string_view stage, DropReason r, std::string detail) {
        out.drops.push_back(DropRecord{ann.video_id, actor.actor_id, q, std::string(stage), r, std::move(detail)});
    };

    const auto gen = generate_qa(ann, actor.actor_id, client, cfg.llm);
    if (gen.failure) {
        drop(std::nullopt, kStageGenerateQa, *gen.failure, gen.failure_detail);
        return out;
    }
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < gen.verdict.question_drops.size(); ++i) {
        if (const auto& r = gen.verdict.question_drops[i])
            drop(i, kStageGenerateQa, *r, {});
        else
            kept.push_back(i);
    }
    out.qa_kept = kept.size();

    std::vector<std::size_t> typed_question;
    for (auto i : kept) {
        try {
            auto sample = attach_trace(gen.draft, i, ann, actor.actor_id);
            out.typed.push_back(perturb_sample(sample, ann, sample_seed(cfg.seed, sample)));
            typed_question.push_back(i);
        } catch (const SampleDropped& e) {
            drop(i, kStageModifyTrace, e.reason(), e.what());
        } catch (const NoIrrelevantSource& e) {
            drop(i, kStageModifyTrace, DropReason::no_irrelevant_source, e.what());
        } catch (const SubjectHasNoTrace& e) {
            drop(i, kStageModifyTrace, DropReason::subject_no_trace, e.what());
        }
    }

    for (std::size_t t = 0; t < out.typed.size(); ++t) {
        try {
            QaSample done = out.typed[t];
            done.cot = generate_cot(out.typed[t], ann, client, cfg.llm);
            out.finished.push_back(std::move(done));
        } catch (const SampleDropped& e) {
            drop(typed_question[t], kStageGenerateCot, e.reason(), e.what());
        } catch (const ServiceError& e) {
            drop(typed_question[t], kStageGenerateCot, DropReason::client_error, e.what());
        }
    }
    return out;
}

StageStats stage_row(std::string_view split, std::string_view stage, std::size_t videos, std::size_t actors,
                     std::size_t raw_in, std::size_t kept, std::optional<std::pair<std::size_t, std::size_t>> typed) {
    StageStats s;
    s.split = std::string(split);
    s.stage = std::string(stage);
    s.videos = videos;
    s.actors = actors;
    s.raw_in = raw_in;
    s.kept = kept;
    s.questions_total = kept;
    if (typed) {
        s.questions_spatial = typed->first;
        s.questions_temporal = typed->second;
    }
    if (raw_in > 0) s.survival_rate = compute_survival_rate(raw_in, kept);
    return s;
}

std::pair<std::size_t, std::size_t> count_types(const std::vector<QaSample>& samples) {
    std::size_t spatial = 0;
    for (const auto& s : samples)
        if (s.reasoning_type == ReasoningType::spatial) ++spatial;
    return {spatial, samples.size() - spatial};
}

}  // namespace

PipelineResult run_pipeline(const std::vector<VideoAnnotation>& videos, const PipelineConfig& cfg,
                            LlmClient& client) {
    struct Task {
        const VideoAnnotation* ann;
        const ActorNarration* actor;
    };
    std::vector<Task> tasks;
    for (const auto& v : videos)
        for (const auto& a : v.actors)
            if (!a.is_background()) tasks.push_back({&v, &a});

    BoundedClient bounded(client, cfg.max_in_flight);
    std::vector<ActorOutcome> outcomes(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            try {
                outcomes[i] = run_actor(*tasks[i].ann, *tasks[i].actor, cfg, bounded);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(cfg.jobs, tasks.size()));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    PipelineResult result;
    result.dataset.split = cfg.split;
    std::size_t attempted = 0;
    std::size_t qa_kept = 0;
    std::set<std::string_view> qa_videos, typed_videos, done_videos;
    std::size_t qa_actors = 0, typed_actors = 0, done_actors = 0;
    std::vector<QaSample> typed_all;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        auto& o = outcomes[i];
        const std::string_view vid = tasks[i].ann->video_id;
        attempted += o.attempted ? 1 : 0;
        qa_kept += o.qa_kept;
        if (o.qa_kept) {
            qa_videos.insert(vid);
            ++qa_actors;
        }
        if (!o.typed.empty()) {
            typed_videos.insert(vid);
            ++typed_actors;
        }
        if (!o.finished.empty()) {
            done_videos.insert(vid);
            ++done_actors;
        }
        typed_all.insert(typed_all.end(), o.typed.begin(), o.typed.end());
        for (auto& s : o.finished) result.dataset.samples.push_back(std::move(s));
        for (auto& d : o.drops) result.drops.push_back(std::move(d));
    }
    const auto split = to_string(cfg.split);
    result.stats.stages.push_back(
        stage_row(split, kStageGenerateQa, qa_videos.size(), qa_actors, attempted * kQuestionsPerActor, qa_kept, {}));
    result.stats.stages.push_back(stage_row(split, kStageModifyTrace, typed_videos.size(), typed_actors, qa_kept,
                                            typed_all.size(), count_types(typed_all)));
    result.stats.stages.push_back(stage_row(split, kStageGenerateCot, done_videos.size(), done_actors,
                                            typed_all.size(), result.dataset.samples.size(),
                                            count_types(result.dataset.samples)));
    return result;
}

std::string drops_to_jsonl(const std::vector<DropRecord>& drops) {
    std::string out;
    for (const auto& d : drops) {
        out += canonical_dump(json{{"video_id", d.video_id},
                                   {"actor_id", d.actor_id},
                                   {"question", d.question ? json(*d.question) : json(nullptr)},
                                   {"stage", d.stage},
                                   {"reason", to_string(d.reason)},
                                   {"detail", d.detail}});
        out.push_back('\n');
    }
    return out;
}

PipelineResult run_pipeline(const PipelineConfig& cfg, LlmClient& client) {
    std::ifstream in(cfg.input);
    if (!in) throw DataError("cannot read annotations from " + cfg.input.string());
    const auto parsed = parse_annotations(in);
    auto result = run_pipeline(parsed.videos, cfg, client);
    if (!cfg.output_dir.empty()) {
        const auto dataset = serialize_dataset(result.dataset);
        std::filesystem::create_directories(cfg.output_dir);
        write_file_atomic(cfg.output_dir / "dataset.jsonl", dataset);
        write_file_atomic(cfg.output_dir / "stats.jsonl", stats_to_jsonl(result.stats));
        write_file_atomic(cfg.output_dir / "stats.txt", render_stats_table(result.stats));
        write_file_atomic(cfg.output_dir / "drops.jsonl", drops_to_jsonl(result.drops));
    }
    return result;
}

}  // namespace glarify
