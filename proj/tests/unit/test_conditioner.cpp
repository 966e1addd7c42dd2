// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/conditioner.hpp"
#include "pii/corpus.hpp"
#include "pii/errors.hpp"
#include "pii/image.hpp"
#include "pii/text.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <thread>

namespace pii {
namespace {

RgbImage noise(int w, int h, std::uint64_t seed) {
    SplitMix64 rng(seed);
    RgbImage img(w, h);
    for (auto& b : img.pixels()) b = static_cast<std::uint8_t>(rng.next() >> 56);
    return img;
}

bool top_rows_equal(const RgbImage& out, const RgbImage& src) {
    if (out.width() != src.width() || out.height() < src.height()) return false;
    for (int y = 0; y < src.height(); ++y) {
        const auto a = out.row(y), b = src.row(y);
        if (!std::equal(a.begin(), a.end(), b.begin())) return false;
    }
    return true;
}

const std::string kQuestion = "Is there a dog in the image?";

TEST(Font, BuiltinIsPinned) {
    const auto font = Font::resolve(std::string(kBuiltinFont));
    EXPECT_EQ(font->name(), "arimo-regular");
    EXPECT_EQ(font->digest(), "88cc899855d30f9c779b73c3319d0e077b098f927187aafce11ca029add707a6");
    EXPECT_EQ(Font::resolve(std::string(kBuiltinFont)).get(), font.get());
}

TEST(Font, MeasureGrowsWithText) {
    const auto font = Font::resolve(std::string(kBuiltinFont));
    EXPECT_EQ(font->measure("", 26), 0);
    EXPECT_GT(font->measure("a", 26), 0);
    EXPECT_GT(font->measure("ab", 26), font->measure("a", 26));
    EXPECT_GT(font->measure("dog", 52), font->measure("dog", 26));
}

TEST(Font, MissingFileIsRenderError) { EXPECT_THROW(Font::resolve("/no/such/font.ttf"), RenderError); }

TEST(WrapText, FitsOnOneLine) {
    const RenderSpec spec;
    const std::vector<std::string> want{"Is there a dog?"};
    EXPECT_EQ(wrap_text("Is there a dog?", 10000, spec), want);
}

TEST(WrapText, EmptyText) {
    const RenderSpec spec;
    EXPECT_TRUE(wrap_text("", 100, spec).empty());
    EXPECT_TRUE(wrap_text("   ", 100, spec).empty());
}

TEST(WrapText, OneAndAHalfWidthGivesTwoLines) {
    const RenderSpec spec;
    const auto font = Font::resolve(spec.font_identifier);
    const std::string text = "Is there a snowboard in the image?";
    const int full = font->measure(text, spec.font_px);
    const int limit = static_cast<int>(std::lround(full / 1.5));
    const auto lines = wrap_text(text, limit, spec);
    ASSERT_EQ(lines.size(), 2u);
    std::string joined;
    for (const auto& l : lines) {
        EXPECT_LE(font->measure(l, spec.font_px), limit) << l;
        joined += (joined.empty() ? "" : " ") + l;
    }
    EXPECT_EQ(joined, text);
}

TEST(WrapText, WhitespaceIsNormalized) {
    const RenderSpec spec;
    const std::vector<std::string> want{"a b c"};
    EXPECT_EQ(wrap_text("  a \t b\n c ", 10000, spec), want);
}

TEST(WrapText, UnbreakableTokenReportsWidth) {
    const RenderSpec spec;
    try {
        wrap_text("a supercalifragilistic word", 60, spec);
        FAIL() << "expected UnbreakableToken";
    } catch (const UnbreakableToken& e) {
        EXPECT_EQ(e.token(), "supercalifragilistic");
        EXPECT_GT(e.token_width_px(), 60);
        EXPECT_EQ(e.max_width_px(), 60);
    }
}

TEST(StripGeometry, FractionClosedForm) {
    RenderSpec spec;
    const auto g = compute_strip_geometry(640, 2000, "", spec);
    EXPECT_EQ(g.strip_h, static_cast<int>(std::lround(0.05 * 2000 / 0.95)));
    EXPECT_EQ(g.strip_h, 105);
    EXPECT_NEAR(g.achieved_fraction, 105.0 / 2105.0, 1e-12);
    EXPECT_NEAR(g.achieved_fraction, 0.05, 1e-3);
    EXPECT_FALSE(g.exceeds_target);
    EXPECT_TRUE(g.lines.empty());
}

TEST(StripGeometry, LegibilityOverride) {
    RenderSpec spec;
    const auto g = compute_strip_geometry(640, 480, kQuestion, spec);
    ASSERT_EQ(g.lines.size(), 1u);
    // max(round(0.05*480/0.95) = 25, 1*(26+6) + 2*4 = 40)
    EXPECT_EQ(g.strip_h, 40);
    EXPECT_NEAR(g.achieved_fraction, 40.0 / 520.0, 1e-12);
    EXPECT_TRUE(g.exceeds_target);
    EXPECT_EQ(g.font_name, "arimo-regular");
}

TEST(StripGeometry, LinesLowerBoundHolds) {
    RenderSpec spec;
    for (int w : {120, 200, 320, 640}) {
        const auto g = compute_strip_geometry(w, 300, "Is there a giraffe standing near the tall tree?", spec);
        EXPECT_GE(g.strip_h, static_cast<int>(g.lines.size()) * (spec.font_px + spec.line_gap_px) + 2 * spec.padding_px);
    }
}

TEST(RenderSpec, Validation) {
    RenderSpec s;
    s.target_strip_fraction = 0.5;
    EXPECT_THROW(s.validate(), RenderError);
    s.target_strip_fraction = 0.0;
    EXPECT_THROW(s.validate(), RenderError);
    s = RenderSpec{};
    s.font_px = 0;
    EXPECT_THROW(s.validate(), RenderError);
}

TEST(Render, BaselineIsPassthrough) {
    const auto src = noise(64, 48, 1);
    const auto out = render_condition(src, kQuestion, Condition::Baseline, RenderSpec{});
    EXPECT_EQ(out.pixels, src);
    EXPECT_EQ(out.content_hash, content_hash(src));
    EXPECT_EQ(out.geometry.strip_h, 0);
}

TEST(Render, ControlAndPromptShareGeometry) {
    const auto src = noise(320, 240, 2);
    const RenderSpec spec;
    const auto ctl = render_condition(src, kQuestion, Condition::Control, spec);
    const auto pii = render_condition(src, kQuestion, Condition::PromptInImage, spec);
    const auto hyb = render_condition(src, kQuestion, Condition::Hybrid, spec);
    EXPECT_EQ(ctl.pixels.width(), pii.pixels.width());
    EXPECT_EQ(ctl.pixels.height(), pii.pixels.height());
    EXPECT_EQ(pii.pixels.height(), 240 + pii.geometry.strip_h);
    EXPECT_TRUE(top_rows_equal(ctl.pixels, src));
    EXPECT_TRUE(top_rows_equal(pii.pixels, src));
    EXPECT_NE(ctl.content_hash, pii.content_hash);
    EXPECT_EQ(hyb.pixels, pii.pixels);

    for (int y = 240; y < ctl.pixels.height(); ++y) {
        for (int x = 0; x < ctl.pixels.width(); ++x) ASSERT_EQ(ctl.pixels.at(x, y), spec.strip_color);
    }
}

TEST(Render, TextUsesOnlyStripAndTextColors) {
    RenderSpec spec;
    spec.text_color = {200, 0, 0};
    spec.strip_color = {0, 0, 200};
    const auto out = render_condition(noise(320, 100, 3), kQuestion, Condition::PromptInImage, spec);
    bool saw_text = false;
    for (int y = 100; y < out.pixels.height(); ++y) {
        for (int x = 0; x < out.pixels.width(); ++x) {
            const Rgb c = out.pixels.at(x, y);
            EXPECT_EQ(c.g, 0);
            EXPECT_EQ(static_cast<int>(c.r) + static_cast<int>(c.b), 200) << x << "," << y;
            saw_text |= c.r == 200;
        }
    }
    EXPECT_TRUE(saw_text);
}

TEST(Render, DeterministicAcrossThreads) {
    const auto src = noise(300, 200, 4);
    const auto first = render_condition(src, kQuestion, Condition::PromptInImage, RenderSpec{}).content_hash;
    std::vector<std::string> hashes(8);
    std::vector<std::thread> ts;
    for (std::size_t i = 0; i < hashes.size(); ++i) {
        ts.emplace_back([&, i] {
            hashes[i] = render_condition(src, kQuestion, Condition::PromptInImage, RenderSpec{}).content_hash;
        });
    }
    for (auto& t : ts) t.join();
    for (const auto& h : hashes) EXPECT_EQ(h, first);
}

TEST(Render, RasterizerGolden) {
    // Pins the rasterizer and font: any change to glyph rendering changes this digest.
    RgbImage src(320, 40, Rgb{90, 160, 220});
    const auto out = render_condition(src, kQuestion, Condition::PromptInImage, RenderSpec{});
    EXPECT_EQ(out.pixels.height(), 112);
    EXPECT_EQ(out.content_hash, "bef814d1ba346360086f573e086fc8ab84283d27335e8841f7471364976a925c");
}

TEST(Render, DegenerateFractionMakesControlEqualBaseline) {
    RenderSpec spec;
    spec.target_strip_fraction = 1e-6;
    const auto src = noise(50, 40, 5);
    const auto ctl = render_condition(src, "", Condition::Control, spec);
    EXPECT_EQ(ctl.geometry.strip_h, 0);
    EXPECT_EQ(ctl.pixels, src);
}

TEST(Render, TextConditionsNeedAQuestion) {
    const auto src = noise(50, 40, 6);
    EXPECT_THROW(render_condition(src, "", Condition::PromptInImage, RenderSpec{}), RenderError);
    EXPECT_THROW(render_condition(src, " ", Condition::Hybrid, RenderSpec{}), RenderError);
    EXPECT_THROW(render_condition(RgbImage{}, kQuestion, Condition::Control, RenderSpec{}), RenderError);
}

TEST(Condition, Names) {
    for (auto c : {Condition::Baseline, Condition::Control, Condition::PromptInImage, Condition::Hybrid}) {
        EXPECT_EQ(parse_condition(to_string(c)), c);
    }
    EXPECT_EQ(parse_condition("prompt_in_image"), Condition::PromptInImage);
    EXPECT_THROW(parse_condition("pix"), UsageError);
}

}  // namespace
}  // namespace pii
