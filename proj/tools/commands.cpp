#include "commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "glarify/analysis.hpp"
#include "glarify/checkpoint.hpp"
#include "glarify/data_model.hpp"
#include "glarify/encoder.hpp"
#include "glarify/error.hpp"
#include "glarify/fusion.hpp"
#include "glarify/heatmap.hpp"
#include "glarify/io_util.hpp"
#include "glarify/llm_client.hpp"
#include "glarify/perturbation.hpp"
#include "glarify/pipeline.hpp"
#include "glarify/synthesis.hpp"
#include "glarify/training.hpp"

namespace glarify::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
    std::string in;
    std::string out;
    std::string config;
    std::string transcript;
    std::string record;
    std::string annotations;
    std::string ckpt;
    std::string size = "224x224";
    std::string split;
    std::string model;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::optional<double> sigma;
    std::optional<std::size_t> patch;
    std::optional<double> temperature;
    std::optional<double> lr;
    std::size_t bins = kDefaultRatioBins;
    std::size_t n = 2000;
    std::size_t index = 0;
    std::size_t holdout = 1000;
    int stage = 1;
    bool png = false;
    bool strict = false;
};

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

DatasetSplit load_dataset(const fs::path& path) {
    auto in = open_in(path);
    return read_dataset(in);
}

std::vector<VideoAnnotation> load_annotations(const fs::path& path, std::ostream& err) {
    auto in = open_in(path);
    auto parsed = parse_annotations(in);
    for (const auto& d : parsed.diagnostics) err << path.string() << ":" << d.line << ": " << d.cause << "\n";
    return std::move(parsed.videos);
}

const VideoAnnotation& find_video(const std::vector<VideoAnnotation>& videos, std::string_view id) {
    for (const auto& v : videos)
        if (v.video_id == id) return v;
    throw DataError("no annotation for video " + std::string(id));
}

std::pair<std::size_t, std::size_t> parse_size(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) throw std::invalid_argument(s);
        const auto w = std::stoul(s.substr(0, x));
        const auto h = std::stoul(s.substr(x + 1));
        if (w == 0 || h == 0) throw std::invalid_argument(s);
        return {w, h};
    } catch (const std::logic_error&) {
        throw UsageError("--size must look like WIDTHxHEIGHT, got " + s);
    }
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

LlmSettings llm_settings(const Options& o, LlmSettings base = {}) {
    if (!o.model.empty()) base.model = o.model;
    if (o.temperature) base.temperature = *o.temperature;
    return base;
}

// Replay when a transcript is given, otherwise the live endpoint from the
// environment, optionally recorded.
struct ClientStack {
    std::unique_ptr<LlmClient> base;
    std::unique_ptr<RecordingClient> recorder;

    LlmClient& client() { return recorder ? static_cast<LlmClient&>(*recorder) : *base; }
    void save(const std::string& path) const {
        if (recorder && !path.empty()) write_file_atomic(path, recorder->transcript());
    }
};

ClientStack make_client(const fs::path& transcript, const std::string& record) {
    ClientStack s;
    if (!transcript.empty()) {
        if (!record.empty()) throw UsageError("--record needs a live client; drop --transcript");
        s.base = std::make_unique<ReplayClient>(ReplayClient::from_file(transcript));
    } else {
        s.base = std::make_unique<HttpChatClient>(HttpClientConfig::from_env());
        if (!record.empty()) s.recorder = std::make_unique<RecordingClient>(*s.base);
    }
    return s;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Options& o, std::ostream& out, std::ostream& err) {
    require(o.in, "--in");
    auto in = open_in(o.in);
    const auto parsed = parse_annotations(in);
    for (const auto& d : parsed.diagnostics) err << o.in << ":" << d.line << ": " << d.cause << "\n";
    std::size_t actors = 0, points = 0;
    for (const auto& v : parsed.videos)
        for (const auto& a : v.actors) {
            ++actors;
            points += a.trace.size();
        }
    out << "videos: " << parsed.videos.size() << "\nactors: " << actors << "\ntrace points: " << points
        << "\nrejected lines: " << parsed.diagnostics.size() << "\n";
    if (!o.out.empty()) {
        json report{{"videos", parsed.videos.size()}, {"actors", actors}, {"trace_points", points},
                    {"diagnostics", json::array()}};
        for (const auto& d : parsed.diagnostics) report["diagnostics"].push_back({{"line", d.line}, {"cause", d.cause}});
        write_file_atomic(o.out, canonical_dump(report) + "\n");
    }
    if (parsed.videos.empty()) throw DataError("no valid annotation records in " + o.in);
    return o.strict && !parsed.diagnostics.empty() ? kExitData : kExitOk;
}

int cmd_synthesize(const Options& o, std::ostream& out, std::ostream&) {
    PipelineConfig cfg;
    if (!o.config.empty()) cfg = load_pipeline_config(o.config);
    if (!o.in.empty()) cfg.input = o.in;
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (!o.transcript.empty()) cfg.transcript = o.transcript;
    if (!o.split.empty()) cfg.split = parse_split_name(o.split);
    cfg.seed = o.seed;
    cfg.jobs = o.jobs;
    if (o.sigma) cfg.sigma = o.sigma;
    if (o.patch) cfg.patch = *o.patch;
    cfg.llm = llm_settings(o, cfg.llm);
    if (cfg.input.empty()) throw UsageError("--in is required");
    if (cfg.output_dir.empty()) throw UsageError("--out is required");

    auto clients = make_client(cfg.transcript, o.record);
    const auto result = run_pipeline(cfg, clients.client());
    clients.save(o.record);
    out << render_stats_table(result.stats);
    out << "samples: " << result.dataset.samples.size() << "  dropped: " << result.drops.size() << "\n";
    return kExitOk;
}

int cmd_perturb(const Options& o, std::ostream& out, std::ostream& err) {
    require(o.in, "--in");
    require(o.out, "--out");
    require(o.annotations, "--annotations");
    const auto videos = load_annotations(o.annotations, err);
    const auto input = load_dataset(o.in);
    DatasetSplit result;
    result.split = input.split;
    std::size_t spatial = 0, temporal = 0, dropped = 0;
    for (const auto& s : input.samples) {
        if (s.reasoning_type) throw DataError("sample " + s.video_id + "/" + s.actor_id + " is already perturbed");
        try {
            auto p = perturb_sample(s, find_video(videos, s.video_id), sample_seed(o.seed, s));
            (*p.reasoning_type == ReasoningType::spatial ? spatial : temporal) += 1;
            result.samples.push_back(std::move(p));
        } catch (const NoIrrelevantSource& e) {
            ++dropped;
            err << s.video_id << "/" << s.actor_id << " " << s.refer_tag << ": " << e.what() << "\n";
        } catch (const SubjectHasNoTrace& e) {
            ++dropped;
            err << s.video_id << "/" << s.actor_id << " " << s.refer_tag << ": " << e.what() << "\n";
        }
    }
    write_file_atomic(o.out, serialize_dataset(result));
    out << "spatial: " << spatial << "\ntemporal: " << temporal << "\ndropped: " << dropped << "\n";
    return kExitOk;
}

int cmd_render(const Options& o, std::ostream& out, std::ostream& err) {
    require(o.in, "--in");
    require(o.out, "--out");
    const auto dataset = load_dataset(o.in);
    std::vector<VideoAnnotation> videos;
    if (!o.annotations.empty()) videos = load_annotations(o.annotations, err);
    const auto fallback = parse_size(o.size);
    const fs::path dir = o.out;
    fs::create_directories(dir);

    std::string index;
    std::size_t maps = 0;
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const auto& s = dataset.samples[i];
        for (const auto& frame : s.trace) {
            auto [w, h] = fallback;
            if (!videos.empty()) {
                const auto& kf = find_video(videos, s.video_id).keyframes.at(frame.keyframe_index);
                w = kf.width;
                h = kf.height;
            }
            const double sigma = o.sigma.value_or(default_sigma(w, h));
            const auto map = render_heatmap(frame.points, frame.keyframe_index, w, h, sigma);
            char name[64];
            std::snprintf(name, sizeof name, "s%05zu_kf%03u", i, frame.keyframe_index);
            write_file_atomic(dir / (std::string(name) + ".glhm"), encode_heatmap(map));
            if (o.png) write_heatmap_png(map, dir / (std::string(name) + ".png"));
            index += canonical_dump(json{{"sample", i},
                                         {"video_id", s.video_id},
                                         {"actor_id", s.actor_id},
                                         {"refer_tag", s.refer_tag},
                                         {"keyframe_index", frame.keyframe_index},
                                         {"file", std::string(name) + ".glhm"}});
            index.push_back('\n');
            ++maps;
        }
    }
    write_file_atomic(dir / "index.jsonl", index);
    out << "heatmaps: " << maps << " for " << dataset.samples.size() << " samples\n";
    return kExitOk;
}

Field crop(const Field& f, std::size_t h, std::size_t w) {
    Field c(f.frames, f.channels, h, w);
    for (std::size_t t = 0; t < f.frames; ++t)
        for (std::size_t ch = 0; ch < f.channels; ++ch)
            for (std::size_t r = 0; r < h; ++r)
                for (std::size_t col = 0; col < w; ++col) c.at(t, ch, r, col) = f.at(t, ch, r, col);
    return c;
}

int cmd_fuse(const Options& o, std::ostream& out, std::ostream& err) {
    require(o.in, "--in");
    require(o.out, "--out");
    require(o.annotations, "--annotations");
    const auto dataset = load_dataset(o.in);
    if (o.index >= dataset.samples.size())
        throw UsageError("--index " + std::to_string(o.index) + " is past the " +
                         std::to_string(dataset.samples.size()) + " samples");
    const auto& sample = dataset.samples[o.index];
    const auto videos = load_annotations(o.annotations, err);
    const auto& video = find_video(videos, sample.video_id);
    const fs::path base = fs::path(o.annotations).parent_path();

    std::optional<ToyModel> trained;
    std::size_t patch = o.patch.value_or(14);
    if (!o.ckpt.empty()) {
        ToyConfig tc;
        trained = model_from_checkpoint(read_checkpoint(o.ckpt), &tc);
        if (o.patch && *o.patch != tc.patch)
            throw UsageError("--patch " + std::to_string(*o.patch) + " differs from the checkpoint's " +
                             std::to_string(tc.patch));
        patch = tc.patch;
    }

    // frames and heatmaps share one size, cropped to whole patches
    std::vector<Field> frames;
    std::vector<GazeHeatmap> maps;
    std::size_t fw = 0, fh = 0;
    for (const auto& ft : sample.trace) {
        const auto& kf = video.keyframes.at(ft.keyframe_index);
        fs::path img = kf.path;
        if (img.is_relative()) img = base / img;
        auto f = read_png_rgb(img);
        if (frames.empty()) {
            fw = f.width;
            fh = f.height;
        } else if (f.width != fw || f.height != fh) {
            throw DataError("keyframes of sample " + std::to_string(o.index) + " differ in size");
        }
        frames.push_back(std::move(f));
        maps.push_back(render_heatmap(ft.points, ft.keyframe_index, fw, fh, o.sigma.value_or(default_sigma(fw, fh))));
    }
    const std::size_t ch = fh / patch * patch, cw = fw / patch * patch;
    if (ch == 0 || cw == 0) throw DataError("keyframes are smaller than one patch");

    Field x(frames.size(), 3, ch, cw);
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const auto c = crop(frames[t], ch, cw);
        std::copy(c.data.begin(), c.data.end(), x.data.begin() + static_cast<std::ptrdiff_t>(t * c.data.size()));
    }
    const auto gaze_field = crop(stack_heatmaps(maps), ch, cw);

    EncoderParams encoder;
    GazeProjection proj;
    if (trained) {
        encoder = trained->encoder;
        proj = trained->projection;
    } else {
        EncoderConfig ec;
        ec.patch = patch;
        ec.seed = o.seed;
        ec.max_frames = frames.size();
        ec.max_grid_h = ch / patch;
        ec.max_grid_w = cw / patch;
        encoder = init_encoder(ec);
        proj = GazeProjection::zeros(patch, ec.dim);
    }
    const auto v = encode_frames(patchify(x, patch), encoder);
    const auto z = project_gaze(patchify(gaze_field, patch), proj);
    const auto fused = fuse(v, z);
    write_file_atomic(o.out, encode_tokens(fused));

    const std::size_t base_params = encoder.parameter_count() + proj.parameter_count();
    char ratio[64];
    std::snprintf(ratio, sizeof ratio, "%.6f%%", 100.0 * param_ratio(proj, base_params));
    out << "tokens: " << fused.frames << "x" << fused.grid_h << "x" << fused.grid_w << "x" << fused.dim << "\n"
        << "gaze projection parameters: " << proj.parameter_count() << " of " << base_params << " (" << ratio
        << ")\n";
    return kExitOk;
}

ToyConfig toy_config(const Options& o) {
    ToyConfig cfg;
    if (!o.config.empty()) {
        json j;
        try {
            j = json::parse(read_file(o.config));
        } catch (const json::exception& e) {
            throw DataError("bad toy config " + o.config + ": " + e.what());
        }
        json merged = to_json(cfg);
        for (const auto& [k, val] : j.items()) {
            if (!merged.contains(k)) throw UsageError("unknown toy config key " + k);
            merged[k] = val;
        }
        cfg = toy_config_from_json(merged);
    }
    if (o.patch) cfg.patch = *o.patch;
    if (o.lr) cfg.learning_rate = *o.lr;
    cfg.seed = o.seed;
    cfg.validate();
    return cfg;
}

std::vector<EncodedBatch> encode_all(const ToyModel& model, const std::vector<ToyBatch>& batches) {
    std::vector<EncodedBatch> out;
    for (const auto& b : batches) out.push_back(encode_batch(model, b));
    return out;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream&) {
    require(o.out, "--out");
    if (o.stage != 1 && o.stage != 2) throw UsageError("--stage must be 1 or 2");
    const fs::path dir = o.out;
    ToyModel model;
    ToyConfig cfg;
    if (o.stage == 1) {
        cfg = toy_config(o);
        model = make_toy_model(cfg, derive_seed(o.seed, {"thinker"}));
    } else {
        require(o.ckpt, "--ckpt");
        int stage = 0;
        model = model_from_checkpoint(read_checkpoint(o.ckpt), &cfg, &stage);
        if (stage != 1) throw DataError("stage 2 starts from a stage-1 checkpoint; " + o.ckpt + " is stage " +
                                        std::to_string(stage));
        if (o.lr) cfg.learning_rate = *o.lr;
    }
    const auto train = encode_all(model, make_toy_task(derive_seed(o.seed, {"train"}), o.n, cfg));
    const auto result = o.stage == 1 ? train_stage1(model, train, cfg) : train_stage2(model, train, cfg);
    if (result.frozen_before != result.frozen_after) throw DataError("a frozen parameter group changed");

    fs::create_directories(dir);
    const std::string tag = "stage" + std::to_string(o.stage);
    write_checkpoint(dir / (tag + ".ckpt"), to_checkpoint(model, cfg, o.stage));
    write_file_atomic(dir / (tag + "_metrics.jsonl"), metrics_to_jsonl(result.metrics));

    char line[160];
    std::snprintf(line, sizeof line, "stage %d: %zu steps, loss %.6f -> %.6f\n", o.stage, result.metrics.size(),
                  result.initial_loss, result.final_loss);
    out << line;
    for (const auto& [group, digest] : result.frozen_after) out << "frozen " << group << ": " << digest.substr(0, 16) << "\n";
    if (o.holdout > 0) {
        const auto held = encode_all(model, make_toy_task(derive_seed(o.seed, {"holdout"}), o.holdout, cfg));
        std::snprintf(line, sizeof line, "held-out accuracy: %.4f (%zu samples)\n", accuracy(model, held), o.holdout);
        out << line;
    }
    return kExitOk;
}

int cmd_analyze(const Options& o, std::ostream& out, std::ostream&) {
    require(o.in, "--in");
    require(o.out, "--out");
    auto in = open_in(o.in);
    const auto fixations = read_fixations(in);
    const auto curve = irrelevant_ratio(fixations, o.bins);
    const fs::path dir = o.out;
    fs::create_directories(dir);
    write_file_atomic(dir / "curve.jsonl", curve_to_jsonl(curve));
    write_file_atomic(dir / "curve.tsv", curve_to_tsv(curve));
    out << "fixations: " << fixations.size() << "  bins: " << o.bins << "\n" << curve_to_tsv(curve);
    return kExitOk;
}

int cmd_sample(const Options& o, std::ostream& out, std::ostream&) {
    require(o.in, "--in");
    require(o.out, "--out");
    const auto split = load_dataset(o.in);
    const auto subset = sample_eval_set(split, o.n, o.seed);
    write_file_atomic(o.out, serialize_dataset(subset));
    out << "sampled " << subset.samples.size() << " of " << split.samples.size() << "\n";
    return kExitOk;
}

int cmd_judge(const Options& o, std::ostream& out, std::ostream& err) {
    require(o.in, "--in");
    require(o.out, "--out");
    auto in = open_in(o.in);
    const auto items = read_judge_items(in);
    LlmSettings base;
    base.temperature = 0.0;
    auto clients = make_client(o.transcript, o.record);
    const auto report = judge_accuracy(items, clients.client(), llm_settings(o, base), o.jobs);
    clients.save(o.record);
    write_file_atomic(o.out, judge_report_to_jsonl(items, report));
    for (std::size_t i = 0; i < items.size(); ++i)
        if (report.items[i].verdict == Verdict::judge_error)
            err << "judge_error " << items[i].id << ": " << report.items[i].detail << "\n";
    char line[160];
    if (report.accuracy)
        std::snprintf(line, sizeof line, "GPT-Accuracy: %.2f%% (%zu/%zu aligned, %zu judge errors)\n",
                      100.0 * *report.accuracy, report.aligned, report.aligned + report.not_aligned,
                      report.judge_errors);
    else
        std::snprintf(line, sizeof line, "GPT-Accuracy: undefined (0 judged, %zu judge errors)\n", report.judge_errors);
    out << line;
    return kExitOk;
}

int cmd_stats(const Options& o, std::ostream& out, std::ostream&) {
    require(o.in, "--in");
    fs::path path = o.in;
    if (fs::is_directory(path)) path /= "stats.jsonl";
    out << render_stats_table(stats_from_jsonl(read_file(path)));
    return kExitOk;
}

}  // namespace

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"glarify: gaze-grounded QA synthesis, fusion and evaluation toolkit", "glarify"};
    app.require_subcommand(1);
    Options o;

    auto add_io = [&](CLI::App* sub, const char* in_help, const char* out_help) {
        sub->add_option("--in", o.in, in_help);
        sub->add_option("--out", o.out, out_help);
    };
    auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", o.seed, "global seed (default 0)"); };
    auto add_jobs = [&](CLI::App* sub) {
        sub->add_option("--jobs", o.jobs, "worker threads (default 1)")->check(CLI::PositiveNumber);
    };
    auto add_llm = [&](CLI::App* sub) {
        sub->add_option("--transcript", o.transcript, "replay responses from this transcript");
        sub->add_option("--record", o.record, "record live responses into this transcript");
        sub->add_option("--model", o.model, "model name sent with each request");
        sub->add_option("--temperature", o.temperature, "sampling temperature");
    };

    auto* ingest = app.add_subcommand("ingest", "validate annotation records and report rejected lines");
    add_io(ingest, "annotation JSONL", "optional JSON report");
    ingest->add_flag("--strict", o.strict, "exit 2 when any line is rejected");

    auto* synth = app.add_subcommand("synthesize", "generate QA pairs, perturb traces and add reasoning");
    add_io(synth, "annotation JSONL", "output directory");
    synth->add_option("--config", o.config, "key = value pipeline config");
    synth->add_option("--split", o.split, "training or test");
    synth->add_option("--sigma", o.sigma, "heatmap kernel width in pixels");
    synth->add_option("--patch", o.patch, "patch side");
    add_seed(synth);
    add_jobs(synth);
    add_llm(synth);

    auto* perturb = app.add_subcommand("perturb", "type and perturb a pre-perturbation dataset");
    add_io(perturb, "dataset JSONL", "dataset JSONL");
    perturb->add_option("--annotations", o.annotations, "annotation JSONL the samples came from");
    add_seed(perturb);

    auto* render = app.add_subcommand("render", "render per-keyframe gaze heatmaps of a dataset");
    add_io(render, "dataset JSONL", "output directory");
    render->add_option("--annotations", o.annotations, "take keyframe sizes from these annotations");
    render->add_option("--size", o.size, "WIDTHxHEIGHT when no annotations are given");
    render->add_option("--sigma", o.sigma, "kernel width in pixels (default 2% of the diagonal)");
    render->add_flag("--png", o.png, "also write 8-bit PNGs");

    auto* fuse_cmd = app.add_subcommand("fuse", "emit fused visual + gaze tokens for one sample");
    add_io(fuse_cmd, "dataset JSONL", "token file");
    fuse_cmd->add_option("--annotations", o.annotations, "annotations holding the keyframe images");
    fuse_cmd->add_option("--index", o.index, "sample index (default 0)");
    fuse_cmd->add_option("--ckpt", o.ckpt, "trained toy checkpoint (default: fresh encoder, zero projection)");
    fuse_cmd->add_option("--patch", o.patch, "patch side (default 14)");
    fuse_cmd->add_option("--sigma", o.sigma, "heatmap kernel width in pixels");
    add_seed(fuse_cmd);

    auto* train = app.add_subcommand("train", "two-stage training on the synthetic gaze-pointing task");
    train->add_option("--out", o.out, "output directory");
    train->add_option("--stage", o.stage, "1 (projection) or 2 (thinker + projection)");
    train->add_option("--ckpt", o.ckpt, "stage-1 checkpoint to continue from (stage 2)");
    train->add_option("--config", o.config, "toy config JSON");
    train->add_option("--n", o.n, "training samples")->check(CLI::PositiveNumber);
    train->add_option("--holdout", o.holdout, "held-out samples for accuracy (0 skips)");
    train->add_option("--lr", o.lr, "learning rate (default 1e-4)");
    train->add_option("--patch", o.patch, "patch side");
    add_seed(train);

    auto* analyze = app.add_subcommand("analyze", "irrelevant gaze ratio over query time");
    add_io(analyze, "fixation JSONL {t, relevant}", "output directory");
    analyze->add_option("--bins", o.bins, "number of time bins (default 20)")->check(CLI::PositiveNumber);

    auto* sample = app.add_subcommand("sample", "seeded evaluation subset");
    add_io(sample, "dataset JSONL", "dataset JSONL");
    sample->add_option("--n", o.n, "subset size (default 2000)");
    add_seed(sample);

    auto* judge = app.add_subcommand("judge", "LLM-judged answer alignment");
    add_io(judge, "JSONL {id, question, reference, response}", "verdict JSONL");
    add_jobs(judge);
    add_llm(judge);

    auto* stats = app.add_subcommand("stats", "re-render the dataset statistics table");
    stats->add_option("--in", o.in, "stats.jsonl or a synthesize output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return kExitUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    static const std::map<std::string, int (*)(const Options&, std::ostream&, std::ostream&)> handlers{
        {"ingest", cmd_ingest},   {"synthesize", cmd_synthesize}, {"perturb", cmd_perturb}, {"render", cmd_render},
        {"fuse", cmd_fuse},       {"train", cmd_train},           {"analyze", cmd_analyze}, {"sample", cmd_sample},
        {"judge", cmd_judge},     {"stats", cmd_stats}};
    try {
        return handlers.at(sub->get_name())(o, out, err);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n" << sub->help();
        return kExitUsage;
    } catch (const ServiceError& e) {
        err << "service error: " << e.what() << "\n";
        return kExitService;
    } catch (const Error& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    }
}

}  // namespace glarify::cli
