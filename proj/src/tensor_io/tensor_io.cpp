// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/tensor_io.hpp"

#include "pii/errors.hpp"
#include "pii/kernels.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace pii {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'P', 'I', 'I', 'D'};

constexpr std::pair<SpanLabel, std::string_view> kSpanNames[] = {
    {SpanLabel::ImageTokens, "image_tokens"},
    {SpanLabel::TextTokens, "text_tokens"},
    {SpanLabel::TextRegionPatches, "text_region_patches"},
    {SpanLabel::Cls, "cls"},
};

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }
    template <typename T>
    void le(T v) {
        static_assert(std::is_unsigned_v<T>);
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> take() { return std::move(out_); }
    void reserve(std::size_t n) { out_.reserve(n); }

private:
    std::vector<std::uint8_t> out_;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}

    std::span<const std::uint8_t> take(std::size_t n, const char* what) {
        if (n > data_.size() - pos_) throw TruncatedFile(std::string("while reading ") + what, data_.size());
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    template <typename T>
    T le(const char* what) {
        const auto s = take(sizeof(T), what);
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(s[i]) << (8 * i);
        return v;
    }
    std::size_t remaining() const { return data_.size() - pos_; }
    std::size_t pos() const { return pos_; }

private:
    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

json header_to_json(const DumpHeader& h, std::size_t array_count) {
    json j;
    j["format_version"] = h.format_version;
    j["producer"] = h.producer;
    j["sample_id"] = h.sample_id;
    j["spans"] = json::array();
    for (const auto& s : h.spans) {
        j["spans"].push_back({{"label", to_string(s.label)}, {"start", s.start}, {"end", s.end}});
    }
    j["patch_grid"] = h.patch_grid ? json::array({(*h.patch_grid)[0], (*h.patch_grid)[1]}) : json(nullptr);
    j["condition"] = h.condition ? json(*h.condition) : json(nullptr);
    j["attributes"] = h.attributes.is_null() ? json::object() : h.attributes;
    j["array_count"] = array_count;
    return j;
}

DumpHeader header_from_json(const json& j, std::size_t& array_count) {
    DumpHeader h;
    h.format_version = j.at("format_version").get<std::uint32_t>();
    h.producer = j.value("producer", "");
    h.sample_id = j.value("sample_id", "");
    for (const auto& s : j.value("spans", json::array())) {
        h.spans.push_back({parse_span_label(s.at("label").get<std::string>()), s.at("start").get<std::size_t>(),
                           s.at("end").get<std::size_t>()});
    }
    if (j.contains("patch_grid") && !j["patch_grid"].is_null()) {
        h.patch_grid = std::array<std::uint64_t, 2>{j["patch_grid"].at(0).get<std::uint64_t>(),
                                                    j["patch_grid"].at(1).get<std::uint64_t>()};
    }
    if (j.contains("condition") && !j["condition"].is_null()) h.condition = j["condition"].get<std::string>();
    h.attributes = j.value("attributes", json::object());
    array_count = j.at("array_count").get<std::size_t>();
    return h;
}

std::uint64_t checked_product(const std::vector<std::uint64_t>& dims) {
    std::uint64_t n = 1;
    for (auto d : dims) {
        if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) throw ShapeMismatch("dims overflow");
        n *= d;
    }
    return n;
}

}  // namespace

std::string_view to_string(SpanLabel l) {
    for (const auto& [label, name] : kSpanNames) {
        if (label == l) return name;
    }
    return "unknown";
}

SpanLabel parse_span_label(std::string_view s) {
    for (const auto& [label, name] : kSpanNames) {
        if (name == s) return label;
    }
    throw DataError("unknown span label '" + std::string(s) + "'");
}

std::vector<TokenSpan> DumpHeader::spans_with(SpanLabel label) const {
    std::vector<TokenSpan> out;
    for (const auto& s : spans) {
        if (s.label == label) out.push_back(s);
    }
    return out;
}

std::uint64_t TensorArray::element_count() const { return checked_product(dims); }

bool operator==(const TensorArray& a, const TensorArray& b) {
    return a.dims == b.dims && a.data.size() == b.data.size() &&
           (a.data.empty() || std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(float)) == 0);
}

const TensorArray* TensorDump::find(const std::string& name) const {
    auto it = arrays.find(name);
    return it == arrays.end() ? nullptr : &it->second;
}

std::vector<std::uint8_t> serialize_dump(const TensorDump& dump) {
    if (!dump.header.attributes.is_null() && !dump.header.attributes.is_object()) {
        throw DataError("header attributes must be a JSON object");
    }
    Writer w;
    std::size_t payload = 0;
    for (const auto& [name, arr] : dump.arrays) {
        if (name.empty() || name.size() > std::numeric_limits<std::uint16_t>::max()) {
            throw DataError("array name length must be in [1, 65535]");
        }
        if (arr.dims.size() > std::numeric_limits<std::uint8_t>::max()) throw ShapeMismatch(name + ": too many dims");
        if (arr.element_count() != arr.data.size()) {
            throw ShapeMismatch(name + ": dims imply " + std::to_string(arr.element_count()) + " values, have " +
                                std::to_string(arr.data.size()));
        }
        payload += 3 + name.size() + 8 * arr.dims.size() + 4 * arr.data.size();
    }
    const std::string header = header_to_json(dump.header, dump.arrays.size()).dump();
    w.reserve(12 + header.size() + payload);
    w.bytes(kMagic, 4);
    w.le<std::uint32_t>(dump.header.format_version);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(header.size()));
    w.bytes(header.data(), header.size());
    for (const auto& [name, arr] : dump.arrays) {
        w.le<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
        w.bytes(name.data(), name.size());
        w.le<std::uint8_t>(static_cast<std::uint8_t>(arr.dims.size()));
        for (auto d : arr.dims) w.le<std::uint64_t>(d);
        for (float v : arr.data) w.le<std::uint32_t>(std::bit_cast<std::uint32_t>(v));
    }
    return w.take();
}

TensorDump deserialize_dump(std::span<const std::uint8_t> bytes) {
    Reader r(bytes);
    if (bytes.size() < 4) throw TruncatedFile("while reading magic", bytes.size());
    const auto magic = r.take(4, "magic");
    if (std::memcmp(magic.data(), kMagic, 4) != 0) throw BadMagic("not a .piid file (bad magic)");
    const auto version = r.le<std::uint32_t>("version");
    if (version != kDumpFormatVersion) {
        throw VersionUnsupported("format version " + std::to_string(version) + " is not supported");
    }
    const auto header_len = r.le<std::uint32_t>("header length");
    const auto header_bytes = r.take(header_len, "header");
    json hj;
    try {
        hj = json::parse(header_bytes.begin(), header_bytes.end());
    } catch (const json::parse_error& e) {
        throw DataError(std::string("invalid dump header: ") + e.what());
    }
    TensorDump dump;
    std::size_t array_count = 0;
    try {
        dump.header = header_from_json(hj, array_count);
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid dump header: ") + e.what());
    }
    if (dump.header.format_version != version) throw DataError("header format_version disagrees with preamble");

    for (std::size_t a = 0; a < array_count; ++a) {
        const auto name_len = r.le<std::uint16_t>("array name length");
        const auto name_bytes = r.take(name_len, "array name");
        std::string name(name_bytes.begin(), name_bytes.end());
        const auto ndim = r.le<std::uint8_t>("ndim");
        TensorArray arr;
        arr.dims.reserve(ndim);
        for (std::uint8_t d = 0; d < ndim; ++d) arr.dims.push_back(r.le<std::uint64_t>("dims"));
        const std::uint64_t n = checked_product(arr.dims);
        if (n > r.remaining() / 4) throw TruncatedFile("while reading payload of '" + name + "'", bytes.size());
        const auto payload = r.take(static_cast<std::size_t>(n) * 4, "payload");
        arr.data.resize(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < arr.data.size(); ++i) {
            std::uint32_t u = 0;
            for (int k = 0; k < 4; ++k) u |= static_cast<std::uint32_t>(payload[4 * i + k]) << (8 * k);
            arr.data[i] = std::bit_cast<float>(u);
        }
        if (!dump.arrays.emplace(std::move(name), std::move(arr)).second) {
            throw DataError("duplicate array name in dump");
        }
    }
    if (r.remaining() != 0) {
        throw DataError(std::to_string(r.remaining()) + " trailing bytes after the last array");
    }
    return dump;
}

void write_dump(const TensorDump& dump, const std::filesystem::path& path) {
    const auto bytes = serialize_dump(dump);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

TensorDump read_dump(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open dump " + path.string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    try {
        return deserialize_dump(bytes);
    } catch (const TruncatedFile& e) {
        throw TruncatedFile(path.string() + ": " + e.what(), e.offset());
    }
}

namespace {

void check_spans(const DumpHeader& h, std::size_t tokens, std::vector<std::string>& problems) {
    for (const auto& s : h.spans) {
        if (s.start > s.end) {
            problems.push_back("span " + std::string(to_string(s.label)) + " has start > end");
        } else if (s.end > tokens) {
            problems.push_back("span " + std::string(to_string(s.label)) + " [" + std::to_string(s.start) + ", " +
                               std::to_string(s.end) + ") exceeds " + std::to_string(tokens) + " tokens");
        }
    }
    for (std::size_t i = 0; i < h.spans.size(); ++i) {
        for (std::size_t j = i + 1; j < h.spans.size(); ++j) {
            const auto& a = h.spans[i];
            const auto& b = h.spans[j];
            if (a.label == b.label && a.size() > 0 && b.size() > 0 && a.start < b.end && b.start < a.end) {
                problems.push_back("overlapping " + std::string(to_string(a.label)) + " spans");
            }
        }
    }
}

bool has_nonempty(const DumpHeader& h, SpanLabel label) {
    for (const auto& s : h.spans_with(label)) {
        if (s.size() > 0) return true;
    }
    return false;
}

}  // namespace

std::vector<std::string> schema_problems(const TensorDump& dump, SchemaExpectation expectation) {
    std::vector<std::string> problems;
    if (expectation == SchemaExpectation::VisionAttention) {
        const TensorArray* attn = dump.find("attn");
        if (!attn) {
            problems.push_back("missing array 'attn[L,H,T,T]'");
        } else if (attn->dims.size() != 4 || attn->dims[2] != attn->dims[3]) {
            problems.push_back("'attn' must have shape [L,H,T,T]");
        } else {
            const kernels::AttentionView view{attn->data, attn->dims[0], attn->dims[1], attn->dims[2]};
            const auto bad = kernels::parallel::row_sum_violations(view, kAttentionRowTolerance);
            for (const auto& v : bad) {
                problems.push_back("attention row (layer " + std::to_string(v.layer) + ", head " +
                                   std::to_string(v.head) + ", row " + std::to_string(v.row) + ") sums to " +
                                   std::to_string(v.sum));
            }
            check_spans(dump.header, view.tokens, problems);
            const auto cond = dump.header.condition.value_or("");
            if ((cond == "pii" || cond == "hybrid") && !has_nonempty(dump.header, SpanLabel::TextRegionPatches)) {
                problems.push_back("conditioned image dump has no text_region_patches span");
            }
        }
        if (const TensorArray* hidden = dump.find("hidden"); hidden && hidden->dims.size() != 3) {
            problems.push_back("vision 'hidden' must have shape [L,T,D]");
        }
    } else {
        const TensorArray* hidden = dump.find("hidden");
        if (!hidden) {
            problems.push_back("missing array 'hidden[T,D]'");
        } else if (hidden->dims.size() != 2) {
            problems.push_back("'hidden' must have shape [T,D]");
        } else {
            check_spans(dump.header, hidden->dims[0], problems);
        }
        if (!has_nonempty(dump.header, SpanLabel::ImageTokens)) problems.push_back("missing image_tokens span");
        if (!has_nonempty(dump.header, SpanLabel::TextTokens)) problems.push_back("missing text_tokens span");
    }
    return problems;
}

void validate_schema(const TensorDump& dump, SchemaExpectation expectation) {
    auto problems = schema_problems(dump, expectation);
    if (!problems.empty()) throw SchemaViolation(std::move(problems));
}

}  // namespace pii
