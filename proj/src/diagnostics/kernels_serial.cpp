// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

// Reference kernels. Keep these obviously correct; the OpenMP versions are tested against them.

#include "pii/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace pii::kernels::serial {

std::vector<double> received_attention(const AttentionView& attn, std::size_t layer) {
    const std::size_t t = attn.tokens;
    std::vector<double> acc(t, 0.0);
    for (std::size_t h = 0; h < attn.heads; ++h) {
        const float* m = attn.matrix(layer, h);
        for (std::size_t q = 0; q < t; ++q) {
            for (std::size_t p = 0; p < t; ++p) acc[p] += m[q * t + p];
        }
    }
    const double denom = static_cast<double>(attn.heads) * static_cast<double>(t);
    for (auto& v : acc) v /= denom;
    return acc;
}

std::vector<double> attention_diagonal(const AttentionView& attn, std::size_t layer) {
    const std::size_t t = attn.tokens;
    std::vector<double> diag(t, 0.0);
    for (std::size_t i = 0; i < t; ++i) {
        double s = 0.0;
        for (std::size_t h = 0; h < attn.heads; ++h) s += attn.matrix(layer, h)[i * t + i];
        diag[i] = s / static_cast<double>(attn.heads);
    }
    return diag;
}

std::vector<RowSumViolation> row_sum_violations(const AttentionView& attn, double tol) {
    std::vector<RowSumViolation> out;
    const std::size_t t = attn.tokens;
    for (std::size_t l = 0; l < attn.layers; ++l) {
        for (std::size_t h = 0; h < attn.heads; ++h) {
            const float* m = attn.matrix(l, h);
            for (std::size_t r = 0; r < t; ++r) {
                double s = 0.0;
                for (std::size_t k = 0; k < t; ++k) s += m[r * t + k];
                if (!(std::abs(s - 1.0) <= tol)) out.push_back({l, h, r, s});
            }
        }
    }
    return out;
}

std::vector<double> row_cosines(std::span<const float> a, std::span<const float> b, std::size_t tokens,
                                std::size_t dim) {
    std::vector<double> out(tokens, 0.0);
    for (std::size_t r = 0; r < tokens; ++r) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t k = 0; k < dim; ++k) {
            const double x = a[r * dim + k];
            const double y = b[r * dim + k];
            dot += x * y;
            na += x * x;
            nb += y * y;
        }
        out[r] = (na > 0.0 && nb > 0.0) ? std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0) : 0.0;
    }
    return out;
}

double mean_pairwise_cosine_distance(std::span<const float> hidden, std::size_t dim,
                                     std::span<const std::size_t> rows_a, std::span<const std::size_t> rows_b) {
    auto norm = [&](std::size_t row) {
        double s = 0.0;
        for (std::size_t k = 0; k < dim; ++k) s += static_cast<double>(hidden[row * dim + k]) * hidden[row * dim + k];
        return std::sqrt(s);
    };
    double total = 0.0;
    for (std::size_t i : rows_a) {
        const double ni = norm(i);
        double partial = 0.0;
        for (std::size_t j : rows_b) {
            const double nj = norm(j);
            double dot = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                dot += static_cast<double>(hidden[i * dim + k]) * hidden[j * dim + k];
            }
            const double cos = (ni > 0.0 && nj > 0.0) ? std::clamp(dot / (ni * nj), -1.0, 1.0) : 0.0;
            partial += 1.0 - cos;
        }
        total += partial;
    }
    return total / (static_cast<double>(rows_a.size()) * static_cast<double>(rows_b.size()));
}

}  // namespace pii::kernels::serial
