// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/diagnostics.hpp"
#include "pii/errors.hpp"
#include "pii/kernels.hpp"
#include "synthetic.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

namespace pii {
namespace {

using testing::uniform01;

std::vector<float> random_attention(std::size_t l, std::size_t h, std::size_t t, std::uint64_t seed) {
    SplitMix64 rng(seed);
    std::vector<float> a(l * h * t * t);
    for (std::size_t m = 0; m < l * h; ++m) {
        for (std::size_t i = 0; i < t; ++i) {
            float* row = a.data() + (m * t + i) * t;
            double s = 0;
            for (std::size_t j = 0; j < t; ++j) s += row[j] = static_cast<float>(uniform01(rng) + 1e-3);
            for (std::size_t j = 0; j < t; ++j) row[j] = static_cast<float>(row[j] / s);
        }
    }
    return a;
}

bool bit_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

TEST(Kernels, ParallelMatchesSerialBitForBit) {
    for (std::size_t t : {1u, 7u, 65u, 130u}) {
        const auto data = random_attention(3, 4, t, t);
        const kernels::AttentionView v{data, 3, 4, t};
        for (std::size_t l = 0; l < 3; ++l) {
            EXPECT_TRUE(bit_equal(kernels::serial::received_attention(v, l), kernels::parallel::received_attention(v, l)));
            EXPECT_TRUE(bit_equal(kernels::serial::attention_diagonal(v, l), kernels::parallel::attention_diagonal(v, l)));
        }
        auto broken = data;
        broken[5] += 0.5f;
        broken[broken.size() - 1] += 0.5f;
        const kernels::AttentionView bv{broken, 3, 4, t};
        const auto s = kernels::serial::row_sum_violations(bv, 1e-4);
        const auto p = kernels::parallel::row_sum_violations(bv, 1e-4);
        ASSERT_EQ(s.size(), p.size());
        ASSERT_EQ(s.size(), t == 1 ? 2u : 2u);
        for (std::size_t i = 0; i < s.size(); ++i) {
            EXPECT_EQ(s[i].layer, p[i].layer);
            EXPECT_EQ(s[i].head, p[i].head);
            EXPECT_EQ(s[i].row, p[i].row);
            EXPECT_EQ(s[i].sum, p[i].sum);
        }
    }
    SplitMix64 rng(9);
    const std::size_t tokens = 57, dim = 33;
    std::vector<float> a(tokens * dim), b(tokens * dim);
    for (auto& x : a) x = static_cast<float>(uniform01(rng) - 0.5);
    for (auto& x : b) x = static_cast<float>(uniform01(rng) - 0.5);
    std::fill(a.begin(), a.begin() + dim, 0.0f);
    EXPECT_TRUE(bit_equal(kernels::serial::row_cosines(a, b, tokens, dim), kernels::parallel::row_cosines(a, b, tokens, dim)));
    std::vector<std::size_t> ra{0, 3, 5, 9, 20}, rb{1, 2, 40, 56};
    EXPECT_EQ(kernels::serial::mean_pairwise_cosine_distance(a, dim, ra, rb),
              kernels::parallel::mean_pairwise_cosine_distance(a, dim, ra, rb));
}

TEST(AttentionReceived, UniformGivesOneOverT) {
    const auto d = testing::uniform_attention_dump(3, 2, 4, 4, true);
    for (std::size_t layer = 1; layer <= 3; ++layer) {
        const auto g = attention_received(d, layer);
        EXPECT_EQ(g.rows, 4u);
        EXPECT_EQ(g.cols, 4u);
        ASSERT_EQ(g.values.size(), 16u);
        for (double v : g.values) EXPECT_NEAR(v, 1.0 / 17.0, 1e-6);
        ASSERT_TRUE(g.cls_received);
        EXPECT_NEAR(*g.cls_received, 1.0 / 17.0, 1e-6);
    }
    EXPECT_THROW(attention_received(d, 0), LayerOutOfRange);
    EXPECT_THROW(attention_received(d, 4), LayerOutOfRange);
}

TEST(AttentionReceived, OneHotColumn) {
    auto d = testing::uniform_attention_dump(1, 2, 3, 3, false);
    auto& a = d.arrays["attn"].data;
    const std::size_t t = 9;
    for (std::size_t r = 0; r < 2 * t; ++r) {
        for (std::size_t j = 0; j < t; ++j) a[r * t + j] = j == 5 ? 1.0f : 0.0f;
    }
    const auto g = attention_received(d, 1);
    for (std::size_t p = 0; p < t; ++p) EXPECT_EQ(g.values[p], p == 5 ? 1.0 : 0.0);
}

TEST(AttentionReceived, MassIsConserved) {
    auto d = testing::uniform_attention_dump(2, 3, 5, 5, true);
    d.arrays["attn"].data = random_attention(2, 3, 26, 77);
    for (std::size_t layer = 1; layer <= 2; ++layer) {
        const auto g = attention_received(d, layer);
        double total = *g.cls_received;
        for (double v : g.values) total += v;
        EXPECT_NEAR(total, 1.0, 1e-4);
    }
}

TEST(Diagonal, IdentityAndUniform) {
    auto d = testing::uniform_attention_dump(1, 2, 2, 2, true);
    const auto u = self_attention_diagonal(d, 1);
    ASSERT_EQ(u.patch_diag.size(), 4u);
    ASSERT_EQ(u.cls_diag.size(), 1u);
    for (double v : u.patch_diag) EXPECT_NEAR(v, 0.2, 1e-6);
    EXPECT_EQ(u.token_index.front(), 1u);

    auto& a = d.arrays["attn"].data;
    std::fill(a.begin(), a.end(), 0.0f);
    for (std::size_t m = 0; m < 2; ++m) {
        for (std::size_t i = 0; i < 5; ++i) a[m * 25 + i * 5 + i] = 1.0f;
    }
    for (double v : self_attention_diagonal(d, 1).patch_diag) EXPECT_EQ(v, 1.0);
}

TEST(Bias, PlantedStep) {
    const auto d = testing::planted_diagonal_dump(2, 3, 6, 6, 6, 0.5, 0.1);
    const auto r = bias_report(d, {1, 2});
    EXPECT_EQ(r.n_text_patches, 6u);
    ASSERT_EQ(r.per_layer.size(), 2u);
    for (const auto& L : r.per_layer) {
        EXPECT_NEAR(L.bias_ratio, 5.0, 1e-6);
        EXPECT_NEAR(L.text_diag_mean, 0.5, 1e-6);
        EXPECT_NEAR(L.nontext_diag_mean, 0.1, 1e-6);
    }
    const auto& diag = r.per_patch_diag[0];
    EXPECT_NEAR(diag[29], 0.1, 1e-6);
    EXPECT_NEAR(diag[30], 0.5, 1e-6);
}

TEST(Bias, RatioProperties) {
    const std::vector<double> flat(10, 0.3);
    EXPECT_DOUBLE_EQ(text_bias_ratio(flat, {SpanLabel::TextRegionPatches, 7, 10}).ratio, 1.0);
    SplitMix64 rng(1);
    std::vector<double> v(40);
    for (auto& x : v) x = uniform01(rng) + 0.01;
    const TokenSpan span{SpanLabel::TextRegionPatches, 30, 40};
    const double base = text_bias_ratio(v, span).ratio;
    for (double c : {0.001, 3.0, 1e6}) {
        auto s = v;
        for (auto& x : s) x *= c;
        EXPECT_NEAR(text_bias_ratio(s, span).ratio, base, 1e-12 * base);
    }
    EXPECT_THROW(text_bias_ratio(v, {SpanLabel::TextRegionPatches, 0, 40}), DegenerateSpan);
    EXPECT_THROW(text_bias_ratio(v, {SpanLabel::TextRegionPatches, 5, 5}), DegenerateSpan);
    std::vector<double> zeros(10, 0.0);
    zeros[9] = 1.0;
    EXPECT_THROW(text_bias_ratio(zeros, {SpanLabel::TextRegionPatches, 9, 10}), DegenerateSpan);
}

TEST(Bias, NeedsTextRegion) {
    const auto d = testing::uniform_attention_dump(1, 1, 2, 2, false);
    EXPECT_THROW(bias_report(d, {1}), DegenerateSpan);
}

TEST(Similarity, SelfNegatedSymmetric) {
    const auto a = testing::vision_hidden_dump(12, 10, 8, 1);
    auto neg = a;
    for (auto& x : neg.arrays["hidden"].data) x = -x;
    const auto b = testing::vision_hidden_dump(12, 10, 8, 2);
    const auto layers = final_layers(12, 12);
    ASSERT_EQ(layers.size(), 12u);
    for (const auto& L : layerwise_similarity(a, a, layers).per_layer) EXPECT_NEAR(L.mean_cosine, 1.0, 1e-12);
    for (const auto& L : layerwise_similarity(a, neg, layers).per_layer) EXPECT_NEAR(L.mean_cosine, -1.0, 1e-12);
    const auto ab = layerwise_similarity(a, b, layers), ba = layerwise_similarity(b, a, layers);
    for (std::size_t i = 0; i < 12; ++i) {
        EXPECT_EQ(ab.per_layer[i].mean_cosine, ba.per_layer[i].mean_cosine);
        EXPECT_GE(ab.per_layer[i].mean_cosine, -1.0);
        EXPECT_LE(ab.per_layer[i].mean_cosine, 1.0);
    }
    EXPECT_THROW(layerwise_similarity(a, testing::vision_hidden_dump(12, 9, 8, 3), layers), ShapeMismatch);
    EXPECT_THROW(layerwise_similarity(a, a, {13}), LayerOutOfRange);
}

TEST(Similarity, ZeroVectorsCountAsZero) {
    auto a = testing::vision_hidden_dump(1, 3, 2, 4);
    auto b = a;
    auto& h = b.arrays["hidden"].data;
    h[2] = h[3] = 0.0f;  // token 1 of layer 1
    const auto p = layerwise_similarity(a, b, {1});
    EXPECT_NEAR(p.per_layer[0].mean_cosine, 0.5, 1e-12);
}

TEST(FinalLayers, Window) {
    EXPECT_EQ(final_layers(24, 3), (std::vector<std::size_t>{22, 23, 24}));
    EXPECT_EQ(final_layers(2, 5), (std::vector<std::size_t>{1, 2}));
}

TEST(Gap, KnownValues) {
    EXPECT_NEAR(modality_gap(testing::decoder_dump({{1, 0, 0}}, {{0, 1, 0}})), 1.0, 1e-6);
    EXPECT_NEAR(modality_gap(testing::decoder_dump({{1, 2, 3}, {0, 1, 0}}, {{1, 2, 3}, {0, 1, 0}})),
                (0.0 + 1.0 - 2.0 / std::sqrt(14.0)) / 2.0, 1e-6);
    EXPECT_NEAR(modality_gap(testing::decoder_dump({{1, 0}}, {{-1, 0}})), 2.0, 1e-12);
    EXPECT_NEAR(centroid_cosine_distance(testing::decoder_dump({{1, 0}, {0, 1}}, {{1, 1}})), 0.0, 1e-12);
}

TEST(Gap, BoundsAndScaleInvariance) {
    SplitMix64 rng(13);
    for (int round = 0; round < 20; ++round) {
        std::vector<std::vector<float>> img(5, std::vector<float>(6)), txt(4, std::vector<float>(6));
        for (auto& r : img) {
            for (auto& x : r) x = static_cast<float>(uniform01(rng) - 0.5);
        }
        for (auto& r : txt) {
            for (auto& x : r) x = static_cast<float>(uniform01(rng) - 0.5);
        }
        const double g = modality_gap(testing::decoder_dump(img, txt));
        EXPECT_GE(g, 0.0);
        EXPECT_LE(g, 2.0);
        for (auto& r : img) {
            const float c = static_cast<float>(0.5 + uniform01(rng) * 4);
            for (auto& x : r) x *= c;
        }
        EXPECT_NEAR(modality_gap(testing::decoder_dump(img, txt)), g, 1e-6);
    }
}

TEST(Gap, ReportGroupsSamples) {
    auto a = testing::decoder_dump({{1, 0}}, {{0, 1}});
    a.header.sample_id = "s1";
    auto b = testing::decoder_dump({{1, 0}}, {{1, 0}});
    b.header.sample_id = "s2";
    b.header.condition = "pii";
    const auto r = gap_report({a, b});
    ASSERT_EQ(r.per_sample.size(), 2u);
    EXPECT_EQ(r.per_sample[1].condition, "pii");
    EXPECT_NEAR(r.group_mean, 0.5, 1e-6);
}

double dist(double ax, double ay, double bx, double by) { return std::hypot(ax - bx, ay - by); }

TEST(Pca, PlanarDataIsIsometric) {
    SplitMix64 rng(21);
    const std::size_t dim = 16;
    std::vector<double> u(dim), v(dim);
    for (auto& x : u) x = uniform01(rng) - 0.5;
    double nu = 0;
    for (double x : u) nu += x * x;
    for (auto& x : u) x /= std::sqrt(nu);
    for (auto& x : v) x = uniform01(rng) - 0.5;
    double uv = 0;
    for (std::size_t k = 0; k < dim; ++k) uv += u[k] * v[k];
    double nv = 0;
    for (std::size_t k = 0; k < dim; ++k) nv += (v[k] -= uv * u[k]) * v[k];
    for (auto& x : v) x /= std::sqrt(nv);

    std::vector<std::pair<double, double>> coords;
    std::vector<std::vector<float>> img, txt;
    for (int i = 0; i < 9; ++i) {
        const double a = uniform01(rng) * 4 - 2, b = uniform01(rng) * 4 - 2;
        coords.emplace_back(a, b);
        std::vector<float> row(dim);
        for (std::size_t k = 0; k < dim; ++k) row[k] = static_cast<float>(a * u[k] + b * v[k] + 0.25);
        (i < 5 ? img : txt).push_back(row);
    }
    const auto dump = testing::decoder_dump(img, txt);
    const auto pts = pca_project(dump);
    ASSERT_EQ(pts.size(), 9u);
    // distances of the float-rounded inputs, computed directly
    const auto& h = dump.arrays.at("hidden").data;
    double worst = 0;
    for (std::size_t i = 0; i < 9; ++i) {
        for (std::size_t j = 0; j < 9; ++j) {
            double d2 = 0;
            for (std::size_t k = 0; k < dim; ++k) {
                const double diff = static_cast<double>(h[i * dim + k]) - h[j * dim + k];
                d2 += diff * diff;
            }
            worst = std::max(worst, std::abs(std::sqrt(d2) - dist(pts[i].x, pts[i].y, pts[j].x, pts[j].y)));
        }
    }
    EXPECT_LE(worst, 1e-6);
    EXPECT_EQ(pts[0].role, TokenRole::Image);
    EXPECT_EQ(pts[8].role, TokenRole::Text);
}

TEST(Pca, SeparatesPlantedClusters) {
    SplitMix64 rng(8);
    const std::size_t dim = 12;
    std::vector<std::vector<float>> img, txt;
    for (int i = 0; i < 20; ++i) {
        std::vector<float> a(dim), b(dim);
        for (std::size_t k = 0; k < dim; ++k) {
            a[k] = static_cast<float>(uniform01(rng) * 2 - 1);
            b[k] = static_cast<float>(uniform01(rng) * 2 - 1 + (k == 0 ? 10.0 * std::sqrt(dim) : 0.0));
        }
        img.push_back(a);
        txt.push_back(b);
    }
    const auto pts = pca_project(testing::decoder_dump(img, txt));
    double cix = 0, ciy = 0, ctx = 0, cty = 0;
    for (const auto& p : pts) {
        (p.role == TokenRole::Image ? cix : ctx) += p.x / 20;
        (p.role == TokenRole::Image ? ciy : cty) += p.y / 20;
    }
    double spread = 0;
    for (const auto& p : pts) {
        spread = std::max(spread, p.role == TokenRole::Image ? dist(p.x, p.y, cix, ciy) : dist(p.x, p.y, ctx, cty));
    }
    EXPECT_GT(dist(cix, ciy, ctx, cty), spread);
}

TEST(Pca, DeterministicAndGuarded) {
    const auto d = testing::decoder_dump({{1, 2, 0}, {3, 1, 1}}, {{0, 1, 4}, {2, 2, 2}});
    const auto a = pca_project(d), b = pca_project(d);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].x, b[i].x);
        EXPECT_EQ(a[i].y, b[i].y);
    }
    EXPECT_THROW(pca_project(testing::decoder_dump({{1, 0}}, {{0, 1}})), DegenerateSpan);
}

}  // namespace
}  // namespace pii
