#include "glarify/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <thread>
#include <tuple>

#include "glarify/error.hpp"
#include "glarify/io_util.hpp"
#include "glarify/prompts.hpp"
#include "glarify/text_util.hpp"

namespace glarify {

std::size_t ratio_bin(double t, std::size_t n_bins) {
    if (n_bins == 0) throw UsageError("bin count must be at least 1");
    if (!(t >= 0.0 && t <= 1.0)) throw DataError("fixation time ratio outside [0,1]");
    const double n = static_cast<double>(n_bins);
    auto k = std::min(static_cast<std::size_t>(std::floor(t * n)), n_bins - 1);
    // floor(t*n) can land one bin off when t*n rounds across an integer
    while (k > 0 && t < static_cast<double>(k) / n) --k;
    while (k + 1 < n_bins && t >= static_cast<double>(k + 1) / n) ++k;
    return k;
}

RatioCurve irrelevant_ratio(std::span<const LabeledFixation> fixations, std::size_t n_bins) {
    if (n_bins == 0) throw UsageError("bin count must be at least 1");
    RatioCurve curve;
    curve.bins.resize(n_bins);
    const double n = static_cast<double>(n_bins);
    for (std::size_t k = 0; k < n_bins; ++k) {
        curve.bins[k].lo = static_cast<double>(k) / n;
        curve.bins[k].hi = static_cast<double>(k + 1) / n;
    }
    for (const auto& f : fixations) {
        auto& bin = curve.bins[ratio_bin(f.t, n_bins)];
        ++bin.n_total;
        if (!f.relevant) ++bin.n_irrelevant;
    }
    for (auto& bin : curve.bins)
        if (bin.n_total > 0)
            bin.ratio = static_cast<double>(bin.n_irrelevant) / static_cast<double>(bin.n_total);
    return curve;
}

std::vector<LabeledFixation> read_fixations(std::istream& in) {
    std::vector<LabeledFixation> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            LabeledFixation f{j.at("t").get<double>(), j.at("relevant").get<bool>()};
            if (!(f.t >= 0.0 && f.t <= 1.0)) throw DataError("t outside [0,1]");
            out.push_back(f);
        } catch (const json::exception& e) {
            throw DataError("fixation line " + std::to_string(lineno) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("fixation line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::string curve_to_jsonl(const RatioCurve& curve) {
    std::string out;
    for (std::size_t k = 0; k < curve.bins.size(); ++k) {
        const auto& b = curve.bins[k];
        json rec{{"bin", k},           {"lo", b.lo},         {"hi", b.hi},
                 {"center", b.center()}, {"n_irrelevant", b.n_irrelevant}, {"n_total", b.n_total},
                 {"ratio", b.ratio ? json(*b.ratio) : json(nullptr)}};
        out += canonical_dump(rec);
        out.push_back('\n');
    }
    return out;
}

std::string curve_to_tsv(const RatioCurve& curve) {
    std::string out = "center\tR\n";
    char buf[64];
    for (const auto& b : curve.bins) {
        if (b.ratio)
            std::snprintf(buf, sizeof buf, "%.6f\t%.6f\n", b.center(), *b.ratio);
        else
            std::snprintf(buf, sizeof buf, "%.6f\tnan\n", b.center());
        out += buf;
    }
    return out;
}

DatasetSplit sample_eval_set(const DatasetSplit& split, std::size_t n, std::uint64_t seed) {
    const std::size_t size = split.samples.size();
    if (n > size)
        throw UsageError("cannot sample " + std::to_string(n) + " items from a split of " + std::to_string(size));
    std::vector<std::size_t> idx(size);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, size - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    DatasetSplit out;
    out.split = split.split;
    for (std::size_t i = 0; i < n; ++i) {
        out.samples.push_back(split.samples[idx[i]]);
        out.samples.back().use_indirect_question = true;
    }
    std::sort(out.samples.begin(), out.samples.end(), [](const QaSample& a, const QaSample& b) {
        return std::tie(a.video_id, a.actor_id, a.refer_tag) < std::tie(b.video_id, b.actor_id, b.refer_tag);
    });
    return out;
}

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::aligned: return "aligned";
        case Verdict::not_aligned: return "not_aligned";
        case Verdict::judge_error: return "judge_error";
    }
    return "judge_error";
}

ChatRequest build_judge_request(const JudgeItem& item, const LlmSettings& settings) {
    const auto& tmpl = prompt_template(kJudgePrompt);
    ChatRequest req;
    req.system_prompt = tmpl.system;
    req.user_text = text::render_template(
        tmpl.user, {{"question", item.question}, {"reference", item.reference}, {"response", item.response}});
    req.temperature = settings.temperature;
    req.max_output_tokens = settings.max_output_tokens;
    req.model_name = settings.model;
    return req;
}

JudgeOutcome parse_verdict(std::string_view reply) {
    json value;
    try {
        value = extract_json_block(reply);
    } catch (const DataError& e) {
        return {Verdict::judge_error, e.what()};
    }
    if (!value.is_object() || value.size() != 1 || !value.contains("verdict") || !value["verdict"].is_string())
        return {Verdict::judge_error, "expected exactly {\"verdict\": string}"};
    const auto v = value["verdict"].get<std::string>();
    if (v == "aligned") return {Verdict::aligned, {}};
    if (v == "not_aligned") return {Verdict::not_aligned, {}};
    return {Verdict::judge_error, "unknown verdict " + v};
}

JudgeReport judge_accuracy(std::span<const JudgeItem> items, LlmClient& client, const LlmSettings& settings,
                           std::size_t jobs, std::ptrdiff_t max_in_flight) {
    JudgeReport report;
    report.items.resize(items.size());
    BoundedClient bounded(client, max_in_flight);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < items.size(); i = next++) {
            try {
                report.items[i] = parse_verdict(bounded.complete(build_judge_request(items[i], settings)).text);
            } catch (const Error& e) {
                report.items[i] = {Verdict::judge_error, e.what()};
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 1; w < std::max<std::size_t>(jobs, 1); ++w) pool.emplace_back(worker);
        worker();
    }
    for (const auto& o : report.items) {
        switch (o.verdict) {
            case Verdict::aligned: ++report.aligned; break;
            case Verdict::not_aligned: ++report.not_aligned; break;
            case Verdict::judge_error: ++report.judge_errors; break;
        }
    }
    if (const auto judged = report.aligned + report.not_aligned; judged > 0)
        report.accuracy = static_cast<double>(report.aligned) / static_cast<double>(judged);
    return report;
}

std::vector<JudgeItem> read_judge_items(std::istream& in) {
    std::vector<JudgeItem> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            out.push_back({j.value("id", std::to_string(out.size())), j.at("question").get<std::string>(),
                           j.at("reference").get<std::string>(), j.at("response").get<std::string>()});
        } catch (const json::exception& e) {
            throw DataError("judge item line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::string judge_report_to_jsonl(std::span<const JudgeItem> items, const JudgeReport& report) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& o = report.items[i];
        out += canonical_dump(json{{"id", items[i].id}, {"verdict", to_string(o.verdict)}, {"detail", o.detail}});
        out.push_back('\n');
    }
    return out;
}

}  // namespace glarify
