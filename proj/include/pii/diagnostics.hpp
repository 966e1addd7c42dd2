// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pii/tensor_io.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pii {

// Layer numbers in this API are 1-based: layer 1 is the first transformer block and layer L the
// last, so {4, 12, 24} addresses the shallow/middle/deep probes of a 24-layer encoder.

/// Attention received by each non-Cls key token, averaged over heads and queries.
struct AttentionGrid {
    std::size_t layer = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    /// rows * cols values, row-major over the patch grid.
    std::vector<double> values;
    /// Attention received by Cls tokens (summed over the Cls span), if the dump has one.
    std::optional<double> cls_received;
};

AttentionGrid attention_received(const TensorDump& dump, std::size_t layer);

/// Head-averaged self-attention attn[layer, h, i, i].
struct DiagonalProfile {
    std::size_t layer = 0;
    /// Values for the non-Cls tokens, in token order.
    std::vector<double> patch_diag;
    /// Token index of every entry in patch_diag.
    std::vector<std::size_t> token_index;
    /// Values for the Cls tokens.
    std::vector<double> cls_diag;
};

DiagonalProfile self_attention_diagonal(const TensorDump& dump, std::size_t layer);

struct BiasStats {
    double text_mean = 0.0;
    double nontext_mean = 0.0;
    double ratio = 0.0;
};

/// Means over `text_span` and its complement within `diag`. Throws DegenerateSpan when either side
/// is empty or the non-text mean is zero.
BiasStats text_bias_ratio(std::span<const double> diag, const TokenSpan& text_span);

struct BiasReport {
    struct Layer {
        std::size_t layer;
        double text_diag_mean;
        double nontext_diag_mean;
        double bias_ratio;
    };
    std::string sample_id;
    std::vector<Layer> per_layer;
    /// One diagonal (non-Cls tokens) per analysed layer.
    std::vector<std::vector<double>> per_patch_diag;
    /// Text region in patch_diag coordinates.
    TokenSpan text_span;
    std::size_t n_text_patches = 0;
};

/// Diagonal text-bias for each requested layer, using the dump's TextRegionPatches span.
BiasReport bias_report(const TensorDump& dump, const std::vector<std::size_t>& layers);

struct SimilarityProfile {
    struct Layer {
        std::size_t layer;
        double mean_cosine;
    };
    std::vector<Layer> per_layer;
    std::vector<std::size_t> layers_analyzed;
};

/// Per layer, mean cosine between matching non-Cls token features of hidden[L,T,D] in `a` and `b`.
SimilarityProfile layerwise_similarity(const TensorDump& a, const TensorDump& b, const std::vector<std::size_t>& layers);

/// The last `count` layer numbers of an `total`-layer stack (all of them when count >= total).
std::vector<std::size_t> final_layers(std::size_t total, std::size_t count);

/// Mean over image token i and text token j of 1 - cos(hidden[i], hidden[j]) on a DecoderHidden dump.
double modality_gap(const TensorDump& dump);
/// 1 - cos between the image-token centroid and the text-token centroid.
double centroid_cosine_distance(const TensorDump& dump);

struct GapReport {
    struct Sample {
        std::string sample_id;
        std::string condition;
        double mean_pairwise_cosine_distance;
        double centroid_cosine_distance;
    };
    std::vector<Sample> per_sample;
    double group_mean = 0.0;
};

GapReport gap_report(const std::vector<TensorDump>& dumps);

enum class TokenRole { Image, Text };
std::string_view to_string(TokenRole r);

struct PcaPoint {
    TokenRole role;
    double x;
    double y;
};

/// Projects the pooled image+text tokens onto their top-2 principal axes. Each axis is signed so
/// that its largest-magnitude loading is positive.
std::vector<PcaPoint> pca_project(const TensorDump& dump);

}  // namespace pii
