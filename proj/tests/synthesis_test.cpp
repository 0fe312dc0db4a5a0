#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "builders.hpp"
#include "glarify/error.hpp"
#include "glarify/perturbation.hpp"
#include "glarify/synthesis.hpp"
#include "glarify/text_util.hpp"
#include "test_util.hpp"

namespace glarify {
namespace {

using testing::make_actor;
using testing::make_video;

QaDraft good_draft() {
    QaDraft d;
    d.refer_content = "<Q1>a man</Q1> <Q2>rides</Q2> a <Q3>bike</Q3>";
    d.questions = {{"<Q1>a man</Q1>", "Who is the man?", "Who is he?", "A cyclist."},
                   {"<Q2>rides</Q2>", "What does the man do?", "What is he doing?", "He rides."},
                   {"<Q3>bike</Q3>", "What does he ride?", "What is that?", "A bike."}};
    return d;
}

const std::string kNarration = "a man rides a bike";

TEST(ValidateQaDraft, WellFormed) {
    const auto v = validate_qa_draft(good_draft(), kNarration);
    EXPECT_TRUE(v.ok());
    EXPECT_EQ(v.kept_questions(), (std::vector<std::size_t>{0, 1, 2}));
}

TEST(ValidateQaDraft, DraftLevelRules) {
    auto two = good_draft();
    two.questions.pop_back();
    auto v = validate_qa_draft(two, kNarration);
    EXPECT_EQ(v.draft_drop, DropReason::question_count);
    EXPECT_EQ(v.question_drops.size(), 2u);
    EXPECT_TRUE(v.kept_questions().empty());

    auto missing_tag = good_draft();
    missing_tag.refer_content = "<Q1>a man</Q1> <Q2>rides</Q2> a bike";
    EXPECT_EQ(validate_qa_draft(missing_tag, kNarration).draft_drop, DropReason::tag_structure);

    auto crossed = good_draft();
    crossed.refer_content = "<Q1>a <Q2>man</Q1> rides</Q2> a <Q3>bike</Q3>";
    EXPECT_EQ(validate_qa_draft(crossed, kNarration).draft_drop, DropReason::tag_structure);

    auto twice = good_draft();
    twice.refer_content = "<Q1>a man</Q1> <Q2>rides</Q2> <Q1>a</Q1> <Q3>bike</Q3>";
    EXPECT_EQ(validate_qa_draft(twice, kNarration).draft_drop, DropReason::tag_structure);

    auto changed = good_draft();
    changed.refer_content = "<Q1>a man</Q1> <Q2>rides</Q2> the <Q3>bike</Q3>";
    EXPECT_EQ(validate_qa_draft(changed, kNarration).reason(), DropReason::tag_reconstruction_mismatch);

    auto nested = good_draft();
    nested.refer_content = "<Q1>a man</Q1> <Q2>rides a <Q3>bike</Q3></Q2>";
    nested.questions[1].refer_tag = "<Q2>rides a <Q3>bike</Q3></Q2>";
    EXPECT_TRUE(validate_qa_draft(nested, kNarration).ok());
}

TEST(ValidateQaDraft, QuestionLevelRules) {
    auto d = good_draft();
    d.questions[0].answer = "  ";
    d.questions[1].refer_tag = "<Q2>ride</Q2>";
    d.questions[2].refer_tag = "<Q1>a man</Q1>";
    const auto v = validate_qa_draft(d, kNarration);
    EXPECT_FALSE(v.draft_drop.has_value());
    EXPECT_EQ(v.question_drops[0], DropReason::empty_field);
    EXPECT_EQ(v.question_drops[1], DropReason::refer_tag);
    EXPECT_FALSE(v.question_drops[2].has_value());  // first valid use of <Q1>
    EXPECT_EQ(v.kept_questions(), (std::vector<std::size_t>{2}));

    auto dup = good_draft();
    dup.questions[2].refer_tag = "<Q1>a man</Q1>";
    EXPECT_EQ(validate_qa_draft(dup, kNarration).question_drops[2], DropReason::duplicate_refer_tag);

    auto restated = good_draft();
    restated.questions[2].indirect_question = "Is the bike new?";
    EXPECT_EQ(validate_qa_draft(restated, kNarration).question_drops[2], DropReason::not_ambiguous);
}

// Twenty drafts in the appendix schema, each question labelled by hand.
TEST(ValidateQaDraft, HandLabelledAmbiguityFixtures) {
    std::ifstream in(testing::kFixtures / "ambiguity_drafts.jsonl");
    ASSERT_TRUE(in);
    std::string line;
    int drafts = 0;
    int flagged = 0;
    while (std::getline(in, line)) {
        const auto j = json::parse(line);
        const auto draft = parse_qa_draft(j.at("draft"));
        const auto v = validate_qa_draft(draft, j.at("narration").get<std::string>());
        ASSERT_FALSE(v.draft_drop.has_value()) << j.at("id");
        const auto& expected = j.at("expected");
        ASSERT_EQ(expected.size(), v.question_drops.size());
        for (std::size_t q = 0; q < expected.size(); ++q) {
            const std::string want = expected[q].is_null() ? "ok" : expected[q].get<std::string>();
            const std::string got = v.question_drops[q] ? std::string(to_string(*v.question_drops[q])) : "ok";
            EXPECT_EQ(got, want) << j.at("id") << " question " << q + 1;
            if (v.question_drops[q]) ++flagged;
        }
        ++drafts;
    }
    EXPECT_EQ(drafts, 20);
    EXPECT_EQ(flagged, 16);
}

TEST(ParseQaDraft, MalformedShapes) {
    EXPECT_THROW(parse_qa_draft(json{{"qa_pairs", json::array()}}), SampleDropped);
    try {
        parse_qa_draft(json{{"refer_content", "x"}, {"qa_pairs", json::array({{{"refer_tag", 3}}})}});
        FAIL();
    } catch (const SampleDropped& e) {
        EXPECT_EQ(e.reason(), DropReason::malformed_response);
    }
}

TEST(ReferTagOffsets, StripsEarlierTags) {
    const auto [s, e] = refer_tag_offsets("<Q1>a man</Q1> <Q2>rides a <Q3>bike</Q3></Q2>", "<Q3>bike</Q3>");
    EXPECT_EQ(kNarration.substr(s, e - s), "bike");
    const auto [s2, e2] = refer_tag_offsets("<Q1>a man</Q1> <Q2>rides a <Q3>bike</Q3></Q2>", "<Q2>rides a <Q3>bike</Q3></Q2>");
    EXPECT_EQ(kNarration.substr(s2, e2 - s2), "rides a bike");
    EXPECT_THROW(refer_tag_offsets("<Q1>a</Q1>", "<Q2>a</Q2>"), SampleDropped);
}

// Published statistics-table kept/raw counts against their percentages.
TEST(SurvivalRate, PublishedRows) {
    struct Row {
        std::size_t raw_in, kept;
        double published_percent;
    };
    const Row rows[] = {{72912, 51134 + 21604, 99.76},
                        {51134 + 21604, 51096 + 21164, 99.34},
                        {15013, 10429 + 4525, 99.61},
                        {10429 + 4525, 10420 + 4440, 99.37}};
    for (const auto& r : rows) {
        const double sr = compute_survival_rate(r.raw_in, r.kept);
        EXPECT_NEAR(sr * 100.0, r.published_percent, 0.005) << r.raw_in << "/" << r.kept;
        EXPECT_EQ(sr, std::round(sr * 1e4) / 1e4);
    }
    EXPECT_EQ(compute_survival_rate(72912, 72738), 0.9976);
    EXPECT_EQ(compute_survival_rate(72738, 72260), 0.9934);
    EXPECT_EQ(compute_survival_rate(14954, 14860), 0.9937);
}

TEST(SurvivalRate, Errors) {
    EXPECT_THROW(compute_survival_rate(0, 0), UsageError);
    EXPECT_THROW(compute_survival_rate(3, 4), UsageError);
    EXPECT_EQ(compute_survival_rate(3, 0), 0.0);
    EXPECT_EQ(compute_survival_rate(3, 3), 1.0);
}

VideoAnnotation bike_video() {
    // man -> kf 0,1; rides -> kf 1; bike -> none; kf 2 only via "a"(last)
    return make_video("v", 3,
                      {make_actor("a1", {"a", "man", "rides", "a", "bike"}, {{}, {0, 1}, {1}, {2}, {}}),
                       make_actor("a2", {"a", "dog", "barks"}, {{}, {0, 1, 2}, {2}}, 5000),
                       make_actor("background", {"quiet", "street"}, {{0}, {1}}, 9000)});
}

std::string fenced(const json& j) { return "Here you go.\n```json\n" + j.dump(1) + "\n```\nDone."; }

json draft_json(const QaDraft& d) {
    json pairs = json::array();
    for (const auto& q : d.questions)
        pairs.push_back({{"refer_tag", q.refer_tag},
                         {"direct_question", q.direct_question},
                         {"indirect_question", q.indirect_question},
                         {"answer", q.answer}});
    return {{"refer_content", d.refer_content}, {"qa_pairs", pairs}};
}

TEST(GenerateQa, RequestCarriesNarrationsAndKeyframes) {
    const auto ann = bike_video();
    const auto req = build_qa_request(ann, "a1", {});
    EXPECT_NE(req.user_text.find("Background information: a man rides a bike a dog barks quiet street"),
              std::string::npos);
    EXPECT_NE(req.user_text.find("Referable sentence: a man rides a bike"), std::string::npos);
    EXPECT_EQ(req.image_refs.size(), 3u);
    EXPECT_EQ(req.temperature, 0.7);
    EXPECT_NO_THROW(req.validate());
}

TEST(GenerateQa, PassThroughAndFailures) {
    const auto ann = bike_video();
    CallbackClient ok([](const ChatRequest&) { return fenced(draft_json(good_draft())); });
    const auto g = generate_qa(ann, "a1", ok);
    EXPECT_FALSE(g.failure.has_value());
    EXPECT_EQ(g.draft.questions.size(), 3u);
    EXPECT_EQ(g.kept_questions().size(), 3u);

    auto bad = good_draft();
    bad.refer_content = "<Q1>a man</Q1> <Q2>rides</Q2> his <Q3>bike</Q3>";
    CallbackClient mismatch([&](const ChatRequest&) { return fenced(draft_json(bad)); });
    const auto m = generate_qa(ann, "a1", mismatch);
    EXPECT_EQ(m.verdict.reason(), DropReason::tag_reconstruction_mismatch);
    EXPECT_TRUE(m.kept_questions().empty());

    CallbackClient down([](const ChatRequest&) -> std::string { throw ServiceError("down", 503); });
    EXPECT_EQ(generate_qa(ann, "a1", down).failure, DropReason::client_error);

    CallbackClient prose([](const ChatRequest&) { return std::string("I cannot help."); });
    EXPECT_EQ(generate_qa(ann, "a1", prose).failure, DropReason::malformed_response);

    EXPECT_THROW(generate_qa(ann, "background", ok), UsageError);
    EXPECT_THROW(generate_qa(ann, "zz", ok), DataError);
}

TEST(AttachTrace, KeyframesFromWholeNarration) {
    const auto ann = bike_video();
    const auto d = good_draft();
    const auto man = attach_trace(d, 0, ann, "a1");
    EXPECT_EQ(man.keyframe_indices(), (std::vector<std::uint32_t>{0, 1, 2}));
    EXPECT_EQ(man.trace[0].points.size(), 1u);
    EXPECT_EQ(man.trace[1].points.size(), 1u);
    EXPECT_TRUE(man.trace[2].points.empty());
    EXPECT_EQ(kNarration.substr(man.refer_start, man.refer_end - man.refer_start), "a man");
    EXPECT_EQ(classify_reasoning_type(man), ReasoningType::temporal);
    for (const auto& f : man.trace)
        for (auto l : f.labels) EXPECT_EQ(l, PointLabel::relevant);

    const auto bike = attach_trace(d, 2, ann, "a1");
    EXPECT_EQ(bike.point_count(), 0u);
    EXPECT_EQ(bike.trace.size(), 3u);
}

TEST(AttachTrace, RandomTagsMatchTraceForSpan) {
    std::mt19937_64 rng(4);
    const std::vector<std::string> words{"one", "two", "three", "four", "five", "six", "seven", "eight"};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::vector<std::uint32_t>> pts;
        for (std::size_t w = 0; w < words.size(); ++w) {
            std::vector<std::uint32_t> p;
            for (std::size_t n = rng() % 3; n > 0; --n) p.push_back(static_cast<std::uint32_t>(rng() % 4));
            pts.push_back(p);
        }
        pts[0].push_back(0);
        const auto ann = make_video("v", 4, {make_actor("a", words, pts)});
        // three disjoint word ranges
        std::vector<std::size_t> cuts{0, 1 + rng() % 2, 3 + rng() % 2, 5 + rng() % 2, 8};
        QaDraft d;
        std::vector<std::string> pieces;
        for (int q = 0; q < 3; ++q) {
            std::string phrase;
            for (std::size_t w = cuts[q]; w < cuts[q + 1]; ++w) phrase += (phrase.empty() ? "" : " ") + words[w];
            const auto n = std::to_string(q + 1);
            pieces.push_back("<Q" + n + ">" + phrase + "</Q" + n + ">");
            d.questions.push_back({pieces.back(), "q?", "it?", "a."});
        }
        std::string rest;
        for (std::size_t w = cuts[3]; w < 8; ++w) rest += " " + words[w];
        d.refer_content = pieces[0] + " " + pieces[1] + " " + pieces[2] + rest;
        ASSERT_EQ(text::strip_q_tags(d.refer_content), ann.actors[0].narration);
        for (std::size_t q = 0; q < 3; ++q) {
            const auto s = attach_trace(d, q, ann, "a");
            const auto groups = trace_for_span(ann, "a", s.refer_start, s.refer_end);
            for (const auto& f : s.trace) ASSERT_EQ(f.points, groups[f.keyframe_index]);
            std::size_t total = 0;
            for (const auto& g : groups) total += g.size();
            ASSERT_EQ(s.point_count(), total);
        }
    }
}

TEST(GenerateCot, SpatialRequestNamesIrrelevantKeyframe) {
    const auto ann = bike_video();
    auto s = attach_trace(good_draft(), 0, ann, "a1");
    s = propagate_temporal(s, ann);
    // a spatial sample: every keyframe of a2 carries points
    QaDraft dog;
    dog.refer_content = "<Q1>a</Q1> <Q2>dog</Q2> <Q3>barks</Q3>";
    dog.questions = {{"<Q1>a</Q1>", "d?", "i?", "a."}, {"<Q2>dog</Q2>", "d?", "i?", "a."}, {"<Q3>barks</Q3>", "d?", "i?", "a."}};
    const auto pre = attach_trace(dog, 1, ann, "a2");
    ASSERT_EQ(classify_reasoning_type(pre), ReasoningType::spatial);
    const auto sp = perturb_sample(pre, ann, 11);
    const auto req = build_cot_request(sp, ann, {});
    EXPECT_NE(req.user_text.find("Question type: spatial"), std::string::npos);
    EXPECT_NE(req.user_text.find("Keyframe whose gaze is unrelated to the question: " +
                                 std::to_string(sp.provenance->corrupted_keyframe)),
              std::string::npos);
    const auto treq = build_cot_request(s, ann, {});
    EXPECT_NE(treq.user_text.find("Question type: temporal"), std::string::npos);
    EXPECT_NE(treq.user_text.find("Keyframes with repeated gaze: 2"), std::string::npos);
    EXPECT_THROW(build_cot_request(pre, ann, {}), UsageError);
}

TEST(GenerateCot, ParsesAndRejects) {
    const auto ann = bike_video();
    const auto s = propagate_temporal(attach_trace(good_draft(), 0, ann, "a1"), ann);
    CallbackClient ok([](const ChatRequest&) { return fenced({{"reasoning", "He is the one on the bike."}}); });
    EXPECT_EQ(generate_cot(s, ann, ok), "He is the one on the bike.");
    for (const std::string& reply : {std::string("```json\n{\"reasoning\": \"\"}\n```"), std::string("nothing"),
                                    std::string("{\"reasoning\": 3}"), std::string("{\"other\": \"x\"}")}) {
        CallbackClient bad([&](const ChatRequest&) { return reply; });
        try {
            generate_cot(s, ann, bad);
            FAIL() << reply;
        } catch (const SampleDropped& e) {
            EXPECT_EQ(e.reason(), DropReason::cot) << reply;
        }
    }
}

}  // namespace
}  // namespace glarify
