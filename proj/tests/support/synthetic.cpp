// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "synthetic.hpp"

#include <cmath>
#include <cstring>

namespace pii::testing {

double uniform01(SplitMix64& rng) { return static_cast<double>(rng.next() >> 11) * 0x1.0p-53; }

TensorDump uniform_attention_dump(std::size_t layers, std::size_t heads, std::size_t rows, std::size_t cols,
                                  bool with_cls) {
    const std::size_t t = rows * cols + (with_cls ? 1 : 0);
    TensorDump d;
    d.header.producer = "synthetic";
    d.header.sample_id = "uniform";
    d.header.patch_grid = std::array<std::uint64_t, 2>{rows, cols};
    d.header.condition = "control";
    if (with_cls) d.header.spans.push_back({SpanLabel::Cls, 0, 1});
    d.header.spans.push_back({SpanLabel::ImageTokens, with_cls ? 1u : 0u, t});
    d.header.spans.push_back({SpanLabel::TextRegionPatches, t, t});
    TensorArray a;
    a.dims = {layers, heads, t, t};
    a.data.assign(layers * heads * t * t, static_cast<float>(1.0 / static_cast<double>(t)));
    d.arrays["attn"] = std::move(a);
    return d;
}

TensorDump planted_diagonal_dump(std::size_t layers, std::size_t heads, std::size_t rows, std::size_t cols,
                                 std::size_t text_patches, double text_diag, double other_diag) {
    const std::size_t t = rows * cols;
    TensorDump d;
    d.header.producer = "synthetic";
    d.header.sample_id = "planted";
    d.header.patch_grid = std::array<std::uint64_t, 2>{rows, cols};
    d.header.condition = "pii";
    d.header.spans.push_back({SpanLabel::ImageTokens, 0, t});
    d.header.spans.push_back({SpanLabel::TextRegionPatches, t - text_patches, t});
    TensorArray a;
    a.dims = {layers, heads, t, t};
    a.data.resize(layers * heads * t * t);
    for (std::size_t m = 0; m < layers * heads; ++m) {
        float* base = a.data.data() + m * t * t;
        for (std::size_t i = 0; i < t; ++i) {
            const double dv = i >= t - text_patches ? text_diag : other_diag;
            const double off = (1.0 - dv) / static_cast<double>(t - 1);
            for (std::size_t j = 0; j < t; ++j) base[i * t + j] = static_cast<float>(i == j ? dv : off);
        }
    }
    d.arrays["attn"] = std::move(a);
    return d;
}

TensorDump decoder_dump(const std::vector<std::vector<float>>& image_rows,
                        const std::vector<std::vector<float>>& text_rows) {
    const std::size_t dim = image_rows.empty() ? text_rows.front().size() : image_rows.front().size();
    const std::size_t ni = image_rows.size(), nt = text_rows.size();
    TensorDump d;
    d.header.producer = "synthetic";
    d.header.sample_id = "decoder";
    d.header.condition = "baseline";
    d.header.spans.push_back({SpanLabel::ImageTokens, 0, ni});
    d.header.spans.push_back({SpanLabel::TextTokens, ni, ni + nt});
    TensorArray h;
    h.dims = {ni + nt, dim};
    for (const auto& r : image_rows) h.data.insert(h.data.end(), r.begin(), r.end());
    for (const auto& r : text_rows) h.data.insert(h.data.end(), r.begin(), r.end());
    d.arrays["hidden"] = std::move(h);
    return d;
}

TensorDump vision_hidden_dump(std::size_t layers, std::size_t tokens, std::size_t dim, std::uint64_t seed) {
    SplitMix64 rng(seed);
    TensorDump d;
    d.header.producer = "synthetic";
    d.header.sample_id = "hidden";
    d.header.spans.push_back({SpanLabel::Cls, 0, 1});
    d.header.spans.push_back({SpanLabel::ImageTokens, 1, tokens});
    TensorArray h;
    h.dims = {layers, tokens, dim};
    h.data.resize(layers * tokens * dim);
    for (auto& v : h.data) v = static_cast<float>(uniform01(rng) * 2.0 - 1.0);
    d.arrays["hidden"] = std::move(h);
    return d;
}

TensorDump random_dump(SplitMix64& rng) {
    TensorDump d;
    d.header.producer = "random-" + std::to_string(rng.bounded(1000));
    d.header.sample_id = "sample_" + std::to_string(rng.next());
    const std::size_t t = 1 + rng.bounded(40);
    d.header.spans.push_back({SpanLabel::ImageTokens, 0, rng.bounded(t + 1)});
    if (rng.bounded(2)) d.header.spans.push_back({SpanLabel::TextTokens, rng.bounded(t), t});
    if (rng.bounded(2)) d.header.patch_grid = std::array<std::uint64_t, 2>{1 + rng.bounded(30), 1 + rng.bounded(30)};
    if (rng.bounded(2)) d.header.condition = rng.bounded(2) ? "pii" : "control";
    if (rng.bounded(2)) d.header.attributes = {{"seed", rng.bounded(100)}, {"note", "synthetic dump"}};
    const std::size_t n_arrays = rng.bounded(4);
    for (std::size_t a = 0; a < n_arrays; ++a) {
        TensorArray arr;
        const std::size_t nd = rng.bounded(5);
        std::uint64_t count = 1;
        for (std::size_t k = 0; k < nd; ++k) {
            arr.dims.push_back(rng.bounded(7));
            count *= arr.dims.back();
        }
        arr.data.resize(count);
        for (auto& v : arr.data) {
            // raw bit patterns, NaNs and infinities included
            const auto bits = static_cast<std::uint32_t>(rng.next());
            std::memcpy(&v, &bits, sizeof v);
        }
        d.arrays["array_" + std::to_string(a) + "_" + std::to_string(rng.bounded(100))] = std::move(arr);
    }
    return d;
}

}  // namespace pii::testing
