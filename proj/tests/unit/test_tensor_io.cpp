// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/errors.hpp"
#include "pii/tensor_io.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#ifndef PII_FIXTURE_DIR
#error "PII_FIXTURE_DIR must point at tests/fixtures"
#endif

namespace fs = std::filesystem;

namespace pii {
namespace {

TEST(Piid, RandomRoundTripsAreBitExact) {
    SplitMix64 rng(42);
    for (int i = 0; i < 100; ++i) {
        const auto dump = testing::random_dump(rng);
        const auto bytes = serialize_dump(dump);
        const auto back = deserialize_dump(bytes);
        ASSERT_EQ(back, dump) << "dump " << i;
        ASSERT_EQ(serialize_dump(back), bytes);
    }
}

TEST(Piid, EveryTruncationIsDetected) {
    auto dump = testing::uniform_attention_dump(2, 2, 3, 3, true);
    const auto bytes = serialize_dump(dump);
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
        const std::span<const std::uint8_t> part(bytes.data(), cut);
        try {
            deserialize_dump(part);
            FAIL() << "truncation at " << cut << " was accepted";
        } catch (const TruncatedFile& e) {
            EXPECT_EQ(e.offset(), cut);
        } catch (const DataError&) {
            FAIL() << "truncation at " << cut << " raised a non-truncation error";
        }
    }
}

TEST(Piid, BadMagicAndVersion) {
    auto bytes = serialize_dump(testing::uniform_attention_dump(1, 1, 2, 2, false));
    auto bad = bytes;
    bad[0] = 'X';
    EXPECT_THROW(deserialize_dump(bad), BadMagic);
    bad = bytes;
    bad[4] = 2;
    EXPECT_THROW(deserialize_dump(bad), VersionUnsupported);
    bad = bytes;
    bad.push_back(0);
    EXPECT_THROW(deserialize_dump(bad), DataError);
}

TEST(Piid, ShapeMismatchOnWrite) {
    TensorDump d;
    d.arrays["x"] = {{2, 3}, std::vector<float>(5, 0.0f)};
    EXPECT_THROW(serialize_dump(d), ShapeMismatch);
}

TEST(Piid, FileRoundTrip) {
    const auto path = fs::temp_directory_path() / "pii_test_roundtrip.piid";
    const auto dump = testing::planted_diagonal_dump(2, 2, 4, 4, 4, 0.5, 0.1);
    write_dump(dump, path);
    EXPECT_FALSE(fs::exists(fs::path(path.string() + ".tmp")));
    EXPECT_EQ(read_dump(path), dump);
    fs::remove(path);
    EXPECT_THROW(read_dump(path), DataError);
}

TEST(Piid, ReadsIndependentProducer) {
    const fs::path fixture = fs::path(PII_FIXTURE_DIR) / "cross_producer.piid";
    const auto dump = read_dump(fixture);
    EXPECT_EQ(dump.header.sample_id, "fixture-0001");
    EXPECT_EQ(dump.header.producer, "make_piid_fixture.py");
    EXPECT_EQ(dump.header.condition, "pii");
    ASSERT_TRUE(dump.header.patch_grid);
    EXPECT_EQ((*dump.header.patch_grid)[0], 2u);
    EXPECT_EQ(dump.header.attributes.at("patch_size"), 14);
    ASSERT_EQ(dump.header.spans.size(), 3u);
    EXPECT_EQ(dump.header.spans[2], (TokenSpan{SpanLabel::TextRegionPatches, 3, 5}));

    const auto* attn = dump.find("attn");
    ASSERT_NE(attn, nullptr);
    EXPECT_EQ(attn->dims, (std::vector<std::uint64_t>{2, 1, 5, 5}));
    EXPECT_EQ(attn->data[0], 0.6f);
    EXPECT_EQ(attn->data[1], 0.1f);
    EXPECT_EQ(attn->data[25 + 4], 1.0f);
    const auto* hidden = dump.find("hidden");
    ASSERT_NE(hidden, nullptr);
    EXPECT_EQ(hidden->data.back(), 100.0f + 40.0f + 2.0f);
    EXPECT_NO_THROW(validate_schema(dump, SchemaExpectation::VisionAttention));

    // Our writer reproduces the other producer's bytes exactly.
    std::ifstream in(fixture, std::ios::binary);
    const std::vector<std::uint8_t> original{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    EXPECT_EQ(serialize_dump(dump), original);
}

TEST(Schema, VisionAttention) {
    auto d = testing::uniform_attention_dump(2, 2, 3, 3, true);
    EXPECT_TRUE(schema_problems(d, SchemaExpectation::VisionAttention).empty());

    auto bad_rows = d;
    bad_rows.arrays["attn"].data[3] += 0.01f;
    EXPECT_EQ(schema_problems(bad_rows, SchemaExpectation::VisionAttention).size(), 1u);

    auto tiny = d;
    tiny.arrays["attn"].data[3] += 5e-5f;
    EXPECT_TRUE(schema_problems(tiny, SchemaExpectation::VisionAttention).empty());

    auto pii_without_text = d;
    pii_without_text.header.condition = "pii";
    EXPECT_THROW(validate_schema(pii_without_text, SchemaExpectation::VisionAttention), SchemaViolation);

    auto out_of_range = d;
    out_of_range.header.spans.push_back({SpanLabel::TextTokens, 5, 11});
    EXPECT_FALSE(schema_problems(out_of_range, SchemaExpectation::VisionAttention).empty());

    auto overlap = d;
    overlap.header.spans.push_back({SpanLabel::ImageTokens, 2, 4});
    EXPECT_FALSE(schema_problems(overlap, SchemaExpectation::VisionAttention).empty());

    TensorDump none;
    EXPECT_FALSE(schema_problems(none, SchemaExpectation::VisionAttention).empty());
}

TEST(Schema, DecoderHidden) {
    auto d = testing::decoder_dump({{1, 0}, {0, 1}}, {{1, 1}});
    EXPECT_TRUE(schema_problems(d, SchemaExpectation::DecoderHidden).empty());
    d.header.spans.pop_back();
    const auto problems = schema_problems(d, SchemaExpectation::DecoderHidden);
    ASSERT_EQ(problems.size(), 1u);
    EXPECT_NE(problems[0].find("text_tokens"), std::string::npos);
}

}  // namespace
}  // namespace pii
