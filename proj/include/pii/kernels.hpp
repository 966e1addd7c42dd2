// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Numeric kernels behind the diagnostics. Every kernel exists twice: `serial` is the reference,
// `parallel` is the OpenMP version used in production. Both accumulate each output in the same
// order, so their results are bit-identical regardless of thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace pii::kernels {

/// Read-only view over attn[L, H, T, T].
struct AttentionView {
    std::span<const float> data;
    std::size_t layers = 0;
    std::size_t heads = 0;
    std::size_t tokens = 0;

    const float* matrix(std::size_t layer, std::size_t head) const {
        return data.data() + (layer * heads + head) * tokens * tokens;
    }
};

struct RowSumViolation {
    std::size_t layer, head, row;
    double sum;
};

namespace serial {

/// received[p] = mean over heads h and queries q of attn[layer, h, q, p]. `layer` is 0-based.
std::vector<double> received_attention(const AttentionView& attn, std::size_t layer);
/// diag[i] = mean over heads of attn[layer, h, i, i].
std::vector<double> attention_diagonal(const AttentionView& attn, std::size_t layer);
/// Rows whose sum deviates from 1 by more than `tol`, ordered by (layer, head, row).
std::vector<RowSumViolation> row_sum_violations(const AttentionView& attn, double tol);
/// cos[t] between rows t of a and b ([tokens, dim] row-major); a zero row gives 0.
std::vector<double> row_cosines(std::span<const float> a, std::span<const float> b, std::size_t tokens,
                                std::size_t dim);
/// Mean over (i in rows_a, j in rows_b) of 1 - cos(hidden[i], hidden[j]).
double mean_pairwise_cosine_distance(std::span<const float> hidden, std::size_t dim,
                                     std::span<const std::size_t> rows_a, std::span<const std::size_t> rows_b);

}  // namespace serial

namespace parallel {

std::vector<double> received_attention(const AttentionView& attn, std::size_t layer);
std::vector<double> attention_diagonal(const AttentionView& attn, std::size_t layer);
std::vector<RowSumViolation> row_sum_violations(const AttentionView& attn, double tol);
std::vector<double> row_cosines(std::span<const float> a, std::span<const float> b, std::size_t tokens,
                                std::size_t dim);
double mean_pairwise_cosine_distance(std::span<const float> hidden, std::size_t dim,
                                     std::span<const std::size_t> rows_a, std::span<const std::size_t> rows_b);

}  // namespace parallel

}  // namespace pii::kernels
