#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "glarify/error.hpp"
#include "glarify/heatmap.hpp"
#include "test_util.hpp"

namespace glarify {
namespace {

TEST(RenderHeatmap, NoPointsGivesZeroGrid) {
    const auto m = render_heatmap({}, 2, 8, 6, 1.5);
    EXPECT_EQ(m.keyframe_index, 2u);
    EXPECT_EQ(m.values, std::vector<double>(48, 0.0));
}

TEST(RenderHeatmap, SinglePointPeakAndSymmetry) {
    const std::vector<TracePoint> pts{{0.5, 0.5, 0, 0}};
    const auto m = render_heatmap(pts, 0, 64, 64, 3.0);
    EXPECT_EQ(m.at(32, 32), 1.0);
    for (std::size_t r = 0; r < 64; ++r)
        for (std::size_t c = 0; c < 64; ++c)
            if (r != 32 || c != 32) {
                EXPECT_LT(m.at(r, c), 1.0);
            }
    for (std::size_t a = 0; a < 32; ++a)
        for (std::size_t b = 0; b < 32; ++b) {
            const double v = m.at(32 + a, 32 + b);
            EXPECT_DOUBLE_EQ(v, m.at(32 - a, 32 + b));
            EXPECT_DOUBLE_EQ(v, m.at(32 + a, 32 - b));
            EXPECT_DOUBLE_EQ(v, m.at(32 + b, 32 + a));
        }
}

TEST(RenderHeatmap, MatchesBruteForceSummation) {
    const std::vector<TracePoint> pts{{0.25, 0.75, 1, 0}, {0.6, 0.3, 1, 10}};
    const double sigma = 2.0;
    const auto m = render_heatmap(pts, 1, 16, 16, sigma, Exec::serial);
    std::vector<double> want(256);
    double mx = 0.0;
    for (std::size_t r = 0; r < 16; ++r)
        for (std::size_t c = 0; c < 16; ++c) {
            double s = 0.0;
            for (const auto& p : pts) {
                const double dx = static_cast<double>(c) - p.x * 16.0;
                const double dy = static_cast<double>(r) - p.y * 16.0;
                s += std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            }
            want[r * 16 + c] = s;
            mx = std::max(mx, s);
        }
    for (std::size_t i = 0; i < 256; ++i) EXPECT_NEAR(m.values[i], want[i] / mx, 1e-12) << i;
}

TEST(RenderHeatmap, MaxIsExactlyOneAndPermutationInvariant) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<TracePoint> pts;
        for (std::size_t n = 1 + rng() % 12; n > 0; --n) pts.push_back({u(rng), u(rng), 0, 0});
        const auto a = render_heatmap(pts, 0, 23, 17, 0.5 + 3 * u(rng));
        EXPECT_EQ(*std::max_element(a.values.begin(), a.values.end()), 1.0);
        EXPECT_GE(*std::min_element(a.values.begin(), a.values.end()), 0.0);
        auto shuffled = pts;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        EXPECT_EQ(render_heatmap(shuffled, 0, 23, 17, 1.25), render_heatmap(pts, 0, 23, 17, 1.25));
    }
}

TEST(RenderHeatmap, SerialAndParallelAgreeBitwise) {
    std::vector<TracePoint> pts{{0.1, 0.2, 0, 0}, {0.9, 0.4, 0, 0}, {0.5, 0.5, 0, 0}};
    EXPECT_EQ(render_heatmap(pts, 0, 97, 61, 2.2, Exec::serial), render_heatmap(pts, 0, 97, 61, 2.2, Exec::parallel));
}

TEST(RenderHeatmap, Errors) {
    const std::vector<TracePoint> pts{{0.5, 0.5, 3, 0}};
    EXPECT_THROW(render_heatmap(pts, 0, 8, 8, 1.0), DataError);
    EXPECT_THROW(render_heatmap({}, 0, 8, 8, 0.0), UsageError);
    EXPECT_THROW(render_heatmap({}, 0, 8, 8, -1.0), UsageError);
    EXPECT_THROW(render_heatmap({}, 0, 0, 8, 1.0), UsageError);
}

TEST(DefaultSigma, TwoPercentOfDiagonal) { EXPECT_DOUBLE_EQ(default_sigma(300, 400), 10.0); }

Field iota_field(std::size_t t, std::size_t c, std::size_t h, std::size_t w) {
    Field f(t, c, h, w);
    for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = static_cast<double>(i);
    return f;
}

TEST(Patchify, SpelledOutFourByFour) {
    const auto g = patchify(iota_field(1, 1, 4, 4), 2);
    EXPECT_EQ(g.grid_h, 2u);
    EXPECT_EQ(g.grid_w, 2u);
    EXPECT_EQ(g.at(0, 0, 0, 0, 0, 0), 0.0);
    EXPECT_EQ(g.at(0, 0, 0, 0, 0, 1), 1.0);
    EXPECT_EQ(g.at(0, 0, 0, 0, 1, 0), 4.0);
    EXPECT_EQ(g.at(0, 0, 0, 0, 1, 1), 5.0);
    EXPECT_EQ(g.at(0, 0, 1, 1, 0, 0), 10.0);
    EXPECT_EQ(unpatchify(g), iota_field(1, 1, 4, 4));
}

TEST(Patchify, WholeFrameSinglePatch) {
    const auto f = iota_field(2, 1, 5, 5);
    const auto g = patchify(f, 5);
    EXPECT_EQ(g.grid_h * g.grid_w, 1u);
    EXPECT_EQ(g.data, f.data);
}

TEST(Patchify, MatchesNestedLoopOracle) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Field f(2, 3, 8, 8);
    for (auto& v : f.data) v = u(rng);
    const std::size_t p = 4;
    for (auto exec : {Exec::serial, Exec::parallel}) {
        const auto g = patchify(f, p, exec);
        for (std::size_t t = 0; t < 2; ++t)
            for (std::size_t c = 0; c < 3; ++c)
                for (std::size_t i = 0; i < 2; ++i)
                    for (std::size_t j = 0; j < 2; ++j)
                        for (std::size_t a = 0; a < p; ++a)
                            for (std::size_t b = 0; b < p; ++b)
                                ASSERT_EQ(g.at(t, c, i, j, a, b), f.at(t, c, i * p + a, j * p + b));
    }
}

TEST(Patchify, NonDivisibleNamesShape) {
    try {
        patchify(Field(1, 1, 6, 9), 4);
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("H=6"), std::string::npos) << msg;
        EXPECT_NE(msg.find("W=9"), std::string::npos) << msg;
        EXPECT_NE(msg.find("p=4"), std::string::npos) << msg;
    }
    EXPECT_THROW(patchify(Field(1, 1, 4, 4), 0), Error);
}

TEST(Unpatchify, ZerosAndRandomRoundTrips) {
    PatchGrid z{1, 2, 3, 2, 2, std::vector<double>(1 * 2 * 3 * 2 * 4, 0.0)};
    const auto f = unpatchify(z);
    EXPECT_EQ(f.height, 6u);
    EXPECT_EQ(f.width, 4u);
    EXPECT_TRUE(std::all_of(f.data.begin(), f.data.end(), [](double v) { return v == 0.0; }));

    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1e3, 1e3);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t p = 1 + rng() % 5;
        Field r(1 + rng() % 3, 1 + rng() % 3, p * (1 + rng() % 4), p * (1 + rng() % 4));
        for (auto& v : r.data) v = u(rng);
        ASSERT_EQ(unpatchify(patchify(r, p, Exec::serial), Exec::serial), r);
        ASSERT_EQ(unpatchify(patchify(r, p, Exec::parallel), Exec::parallel), r);
    }
}

TEST(StackHeatmaps, BuildsTByOneField) {
    const std::vector<TracePoint> pts{{0.5, 0.5, 1, 0}};
    std::vector<GazeHeatmap> maps{render_heatmap({}, 0, 4, 3, 1.0), render_heatmap(pts, 1, 4, 3, 1.0)};
    const auto f = stack_heatmaps(maps);
    EXPECT_EQ(f.frames, 2u);
    EXPECT_EQ(f.channels, 1u);
    EXPECT_EQ(f.at(1, 0, 1, 2), maps[1].at(1, 2));
    maps[1] = render_heatmap({}, 1, 5, 3, 1.0);
    EXPECT_THROW(stack_heatmaps(maps), DataError);
}

TEST(HeatmapStorage, BinaryRoundTripAndHeader) {
    const std::vector<TracePoint> pts{{0.3, 0.6, 0, 0}};
    auto m = render_heatmap(pts, 0, 7, 5, 1.0);
    for (auto& v : m.values) v = static_cast<double>(static_cast<float>(v));
    const auto bytes = encode_heatmap(m);
    ASSERT_EQ(bytes.size(), 16u + 4u * 35u);
    EXPECT_EQ(bytes.substr(0, 4), "GLHM");
    const auto back = decode_heatmap(bytes);
    EXPECT_EQ(back.height, 5u);
    EXPECT_EQ(back.width, 7u);
    EXPECT_EQ(back.values, m.values);
    EXPECT_THROW(decode_heatmap(bytes.substr(0, 20)), DataError);
    auto wrong = bytes;
    wrong[4] = 9;
    EXPECT_THROW(decode_heatmap(wrong), DataError);
}

TEST(HeatmapStorage, PngRoundTripIsEightBit) {
    testing::TempDir dir;
    const std::vector<TracePoint> pts{{0.4, 0.4, 0, 0}};
    const auto m = render_heatmap(pts, 0, 12, 9, 2.0);
    write_heatmap_png(m, dir / "m.png");
    const auto f = read_png_rgb(dir / "m.png");
    ASSERT_EQ(f.height, 9u);
    ASSERT_EQ(f.width, 12u);
    ASSERT_EQ(f.channels, 3u);
    for (std::size_t r = 0; r < 9; ++r)
        for (std::size_t c = 0; c < 12; ++c)
            for (std::size_t ch = 0; ch < 3; ++ch)
                EXPECT_NEAR(f.at(0, ch, r, c), m.at(r, c), 0.5 / 255.0 + 1e-12);
    EXPECT_THROW(read_png_rgb(dir / "missing.png"), DataError);
}

}  // namespace
}  // namespace glarify
