#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "builders.hpp"
#include "glarify/analysis.hpp"
#include "glarify/error.hpp"
#include "glarify/io_util.hpp"
#include "test_util.hpp"

namespace glarify {
namespace {

TEST(RatioBin, Edges) {
    EXPECT_EQ(ratio_bin(0.0, 20), 0u);
    EXPECT_EQ(ratio_bin(0.05, 20), 1u);
    EXPECT_EQ(ratio_bin(0.0499999, 20), 0u);
    EXPECT_EQ(ratio_bin(1.0, 20), 19u);
    EXPECT_EQ(ratio_bin(0.3, 10), 3u);  // 0.3 * 10 rounds to 2.9999999999999996
    EXPECT_EQ(ratio_bin(0.7, 10), 7u);
    EXPECT_EQ(ratio_bin(1.0, 1), 0u);
    EXPECT_THROW(ratio_bin(0.5, 0), UsageError);
    EXPECT_THROW(ratio_bin(-0.01, 4), DataError);
    EXPECT_THROW(ratio_bin(1.01, 4), DataError);
    EXPECT_THROW(ratio_bin(std::nan(""), 4), DataError);
}

TEST(IrrelevantRatio, Example) {
    const std::vector<LabeledFixation> f{{0.1, false}, {0.2, true}, {0.3, true}, {0.9, false}, {1.0, false}};
    const auto c = irrelevant_ratio(f, 2);
    ASSERT_EQ(c.bins.size(), 2u);
    EXPECT_EQ(c.bins[0].n_total, 3u);
    EXPECT_EQ(c.bins[0].n_irrelevant, 1u);
    EXPECT_DOUBLE_EQ(*c.bins[0].ratio, 1.0 / 3.0);
    EXPECT_EQ(*c.bins[1].ratio, 1.0);
    EXPECT_EQ(c.bins[1].center(), 0.75);
    const auto empty = irrelevant_ratio({}, 3);
    for (const auto& b : empty.bins) EXPECT_FALSE(b.ratio.has_value());
}

// Counting oracle: every fixation is tested against every bin's edges
// k/n <= t < (k+1)/n, with t == 1 in the last bin. No floor(t*n).
TEST(IrrelevantRatio, MatchesCountingOracle) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t n_bins : {1u, 8u, 20u}) {
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<LabeledFixation> f(rng() % 60);
            for (auto& x : f) {
                const auto r = rng() % 10;
                x.t = r == 0 ? 0.0 : r == 1 ? 1.0 : r == 2 ? static_cast<double>(rng() % (n_bins + 1)) / n_bins : u(rng);
                x.relevant = rng() % 3 != 0;
            }
            const auto c = irrelevant_ratio(f, n_bins);
            ASSERT_EQ(c.bins.size(), n_bins);
            for (std::size_t k = 0; k < n_bins; ++k) {
                std::size_t total = 0, irr = 0;
                for (const auto& x : f) {
                    const bool last = k + 1 == n_bins;
                    const bool in = x.t >= static_cast<double>(k) / static_cast<double>(n_bins) &&
                                    (x.t < static_cast<double>(k + 1) / static_cast<double>(n_bins) ||
                                     (last && x.t <= 1.0));
                    if (!in) continue;
                    ++total;
                    if (!x.relevant) ++irr;
                }
                ASSERT_EQ(c.bins[k].n_total, total) << n_bins << " " << k;
                ASSERT_EQ(c.bins[k].n_irrelevant, irr);
                if (total == 0) {
                    ASSERT_FALSE(c.bins[k].ratio.has_value());
                } else {
                    ASSERT_EQ(*c.bins[k].ratio, static_cast<double>(irr) / static_cast<double>(total));
                }
            }
        }
    }
}

TEST(IrrelevantRatio, PermutationInvariant) {
    std::mt19937_64 rng(32);
    std::vector<LabeledFixation> f(300);
    for (auto& x : f) x = {static_cast<double>(rng() % 1001) / 1000.0, rng() % 2 == 0};
    const auto a = curve_to_jsonl(irrelevant_ratio(f, 20));
    std::shuffle(f.begin(), f.end(), rng);
    EXPECT_EQ(curve_to_jsonl(irrelevant_ratio(f, 20)), a);
}

TEST(Fixations, ReadAndReport) {
    std::istringstream in("{\"t\": 0.25, \"relevant\": false}\n\n{\"relevant\": true, \"t\": 1}\n");
    const auto f = read_fixations(in);
    ASSERT_EQ(f.size(), 2u);
    EXPECT_FALSE(f[0].relevant);
    const auto c = irrelevant_ratio(f, 2);
    EXPECT_EQ(curve_to_tsv(c), "center\tR\n0.250000\t1.000000\n0.750000\t0.000000\n");
    EXPECT_EQ(curve_to_tsv(irrelevant_ratio({}, 1)), "center\tR\n0.500000\tnan\n");
    EXPECT_EQ(curve_to_jsonl(c).substr(0, curve_to_jsonl(c).find('\n')),
              R"({"bin":0,"center":0.250000,"hi":0.500000,"lo":0.000000,"n_irrelevant":1,"n_total":1,"ratio":1.000000})");
    EXPECT_NE(curve_to_jsonl(irrelevant_ratio({}, 1)).find("\"ratio\":null"), std::string::npos);

    std::istringstream bad_t("{\"t\": 1.5, \"relevant\": true}\n");
    EXPECT_THROW(read_fixations(bad_t), DataError);
    std::istringstream bad_json("{\"t\": 0.5}\n");
    try {
        read_fixations(bad_json);
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
    }
}

DatasetSplit numbered_split(std::size_t n) {
    DatasetSplit s;
    for (std::size_t i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "v%05zu", i);
        s.samples.push_back(testing::make_sample(id, "a1", "<Q1>man</Q1>", {0}, {1}));
    }
    return s;
}

TEST(SampleEvalSet, FullSizeIsPermutationOfInput) {
    const auto s = numbered_split(50);
    const auto out = sample_eval_set(s, 50, 3);
    ASSERT_EQ(out.samples.size(), 50u);
    for (std::size_t i = 0; i < 50; ++i) {
        auto want = s.samples[i];
        want.use_indirect_question = true;
        EXPECT_EQ(out.samples[i], want);
    }
    EXPECT_THROW(sample_eval_set(s, 51, 3), UsageError);
    EXPECT_TRUE(sample_eval_set(s, 0, 3).samples.empty());
}

TEST(SampleEvalSet, SeededAndSorted) {
    const auto s = numbered_split(200);
    const auto a = sample_eval_set(s, 20, 9);
    EXPECT_EQ(a, sample_eval_set(s, 20, 9));
    EXPECT_NE(a, sample_eval_set(s, 20, 10));
    EXPECT_TRUE(std::is_sorted(a.samples.begin(), a.samples.end(),
                               [](const QaSample& x, const QaSample& y) { return x.video_id < y.video_id; }));
    for (std::size_t i = 1; i < a.samples.size(); ++i) EXPECT_NE(a.samples[i].video_id, a.samples[i - 1].video_id);
}

TEST(SampleEvalSet, InclusionFrequencyUniform) {
    const auto s = numbered_split(1000);
    std::vector<int> hits(1000, 0);
    const int trials = 10000;
    for (int t = 0; t < trials; ++t)
        for (const auto& x : sample_eval_set(s, 100, derive_seed(77, {std::to_string(t)})).samples)
            ++hits[std::stoul(x.video_id.substr(1))];
    // Per item: Binomial(10000, 0.1). 1000 simultaneous items, so the
    // family-wise 3 sigma rate (0.27%) sets the per-item z.
    const double sd = std::sqrt(trials * 0.1 * 0.9);
    double mean = 0.0;
    for (int h : hits) {
        EXPECT_LE(std::abs(h - trials * 0.1), 4.69 * sd);
        mean += h;
    }
    EXPECT_DOUBLE_EQ(mean / 1000.0, trials * 0.1);
}

TEST(Verdict, StrictParsing) {
    EXPECT_EQ(parse_verdict("```json\n{\"verdict\": \"aligned\"}\n```").verdict, Verdict::aligned);
    EXPECT_EQ(parse_verdict("{\"verdict\": \"not_aligned\"}").verdict, Verdict::not_aligned);
    EXPECT_EQ(parse_verdict("{\"verdict\": \"Aligned\"}").verdict, Verdict::judge_error);
    EXPECT_EQ(parse_verdict("{\"verdict\": \"aligned\", \"why\": \"x\"}").verdict, Verdict::judge_error);
    EXPECT_EQ(parse_verdict("{\"verdict\": true}").verdict, Verdict::judge_error);
    EXPECT_EQ(parse_verdict("aligned").verdict, Verdict::judge_error);
    EXPECT_FALSE(parse_verdict("aligned").detail.empty());
}

TEST(Judge, RequestUsesTemplate) {
    LlmSettings s;
    s.temperature = 0.0;
    const auto req = build_judge_request({"x", "Q?", "Ref.", "Resp."}, s);
    EXPECT_NE(req.user_text.find("Q?"), std::string::npos);
    EXPECT_NE(req.user_text.find("Ref."), std::string::npos);
    EXPECT_NE(req.user_text.find("Resp."), std::string::npos);
    EXPECT_EQ(req.temperature, 0.0);
    EXPECT_TRUE(req.image_refs.empty());
}

struct JudgeFixture {
    std::vector<JudgeItem> items;
    std::map<std::string, std::string> label;
    ReplayClient replay;
    LlmSettings settings;

    JudgeFixture() {
        const auto dir = testing::kFixtures / "judge";
        std::ifstream in(dir / "items.jsonl");
        items = read_judge_items(in);
        std::ifstream again(dir / "items.jsonl");
        std::string line;
        while (std::getline(again, line)) {
            const auto j = json::parse(line);
            label[j.at("id")] = j.at("label");
        }
        replay = ReplayClient::from_file(dir / "transcript.jsonl");
        settings.temperature = 0.0;
    }
};

// Hand labels in items.jsonl: garbled and bad_verdict both count as
// judge_error.
TEST(Judge, AggregateEqualsHandCount) {
    JudgeFixture fx;
    ASSERT_EQ(fx.items.size(), 50u);
    std::size_t aligned = 0, not_aligned = 0, errors = 0;
    for (const auto& [id, l] : fx.label) {
        if (l == "aligned") ++aligned;
        else if (l == "not_aligned") ++not_aligned;
        else ++errors;
    }
    const auto r = judge_accuracy(fx.items, fx.replay, fx.settings);
    EXPECT_EQ(r.aligned, aligned);
    EXPECT_EQ(r.not_aligned, not_aligned);
    EXPECT_EQ(r.judge_errors, errors);
    EXPECT_EQ(r.aligned, 31u);
    EXPECT_EQ(r.not_aligned, 15u);
    ASSERT_TRUE(r.accuracy.has_value());
    EXPECT_EQ(*r.accuracy, 31.0 / 46.0);
    for (std::size_t i = 0; i < fx.items.size(); ++i) {
        const auto& l = fx.label.at(fx.items[i].id);
        const auto v = std::string(to_string(r.items[i].verdict));
        EXPECT_EQ(v, l == "aligned" || l == "not_aligned" ? l : "judge_error") << fx.items[i].id;
    }
}

TEST(Judge, OrderAndJobsInvariant) {
    JudgeFixture fx;
    const auto base = judge_accuracy(fx.items, fx.replay, fx.settings);
    auto shuffled = fx.items;
    std::mt19937_64 rng(4);
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto r = judge_accuracy(shuffled, fx.replay, fx.settings, 4, 2);
    EXPECT_EQ(r.aligned, base.aligned);
    EXPECT_EQ(r.not_aligned, base.not_aligned);
    EXPECT_EQ(r.judge_errors, base.judge_errors);
    EXPECT_EQ(r.accuracy, base.accuracy);
    const auto jsonl_1 = judge_report_to_jsonl(fx.items, base);
    EXPECT_EQ(judge_report_to_jsonl(fx.items, judge_accuracy(fx.items, fx.replay, fx.settings, 4, 3)), jsonl_1);
}

TEST(Judge, ClientFailuresAndEmptyInput) {
    CallbackClient failing([](const ChatRequest&) -> std::string { throw ServiceError("down", 503); });
    const std::vector<JudgeItem> items{{"a", "q", "r", "s"}, {"b", "q", "r", "t"}};
    const auto r = judge_accuracy(items, failing, LlmSettings{});
    EXPECT_EQ(r.judge_errors, 2u);
    EXPECT_FALSE(r.accuracy.has_value());
    EXPECT_FALSE(judge_accuracy({}, failing, LlmSettings{}).accuracy.has_value());
    std::istringstream bad("{\"id\": \"x\"}\n");
    EXPECT_THROW(read_judge_items(bad), DataError);
}

}  // namespace
}  // namespace glarify
