// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "json.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pii {

// .piid layout, all integers little-endian:
//   "PIID" | u32 version (=1) | u32 header_bytes | header (UTF-8 JSON)
//   then per array: u16 name_len | name | u8 ndim | u64 dims[ndim] | f32 payload (row-major)
// The header records array_count so that a file cut at an array boundary is still detected.
inline constexpr std::uint32_t kDumpFormatVersion = 1;

enum class SpanLabel { ImageTokens, TextTokens, TextRegionPatches, Cls };

std::string_view to_string(SpanLabel l);
SpanLabel parse_span_label(std::string_view s);

/// Half-open token range [start, end).
struct TokenSpan {
    SpanLabel label = SpanLabel::ImageTokens;
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end > start ? end - start : 0; }
    bool contains(std::size_t i) const noexcept { return i >= start && i < end; }
    friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct DumpHeader {
    std::uint32_t format_version = kDumpFormatVersion;
    std::string producer;
    std::string sample_id;
    std::vector<TokenSpan> spans;
    /// Patch grid (rows, cols) of the vision encoder, when known.
    std::optional<std::array<std::uint64_t, 2>> patch_grid;
    /// Conditioning of the input image ("baseline", "control", "pii", "hybrid"), when known.
    std::optional<std::string> condition;
    /// Free-form extra metadata; must be a JSON object (or null).
    nlohmann::json attributes = nlohmann::json::object();

    std::vector<TokenSpan> spans_with(SpanLabel label) const;
    friend bool operator==(const DumpHeader&, const DumpHeader&) = default;
};

struct TensorArray {
    std::vector<std::uint64_t> dims;
    std::vector<float> data;

    std::uint64_t element_count() const;
    /// Bitwise payload comparison, so NaN payloads round-trip as equal.
    friend bool operator==(const TensorArray& a, const TensorArray& b);
};

struct TensorDump {
    DumpHeader header;
    std::map<std::string, TensorArray> arrays;

    const TensorArray* find(const std::string& name) const;
    friend bool operator==(const TensorDump&, const TensorDump&) = default;
};

std::vector<std::uint8_t> serialize_dump(const TensorDump& dump);
TensorDump deserialize_dump(std::span<const std::uint8_t> bytes);

/// Writes to a temporary sibling and renames it into place.
void write_dump(const TensorDump& dump, const std::filesystem::path& path);
TensorDump read_dump(const std::filesystem::path& path);

enum class SchemaExpectation { VisionAttention, DecoderHidden };

/// Every problem found, empty when the dump conforms.
std::vector<std::string> schema_problems(const TensorDump& dump, SchemaExpectation expectation);
/// Throws SchemaViolation listing every problem.
void validate_schema(const TensorDump& dump, SchemaExpectation expectation);

inline constexpr double kAttentionRowTolerance = 1e-4;

}  // namespace pii
