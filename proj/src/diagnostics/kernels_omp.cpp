// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

// OpenMP kernels. Work is split over output elements only; each output keeps the serial
// accumulation order, which is what makes these bit-identical to kernels_serial.cpp.

#include "pii/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace pii::kernels::parallel {

std::vector<double> received_attention(const AttentionView& attn, std::size_t layer) {
    const std::size_t t = attn.tokens;
    std::vector<double> acc(t, 0.0);
    constexpr std::size_t kBlock = 64;
    const auto blocks = static_cast<std::int64_t>((t + kBlock - 1) / kBlock);
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < blocks; ++b) {
        const std::size_t p0 = static_cast<std::size_t>(b) * kBlock;
        const std::size_t p1 = std::min(t, p0 + kBlock);
        for (std::size_t h = 0; h < attn.heads; ++h) {
            const float* m = attn.matrix(layer, h);
            for (std::size_t q = 0; q < t; ++q) {
                for (std::size_t p = p0; p < p1; ++p) acc[p] += m[q * t + p];
            }
        }
    }
    const double denom = static_cast<double>(attn.heads) * static_cast<double>(t);
    for (auto& v : acc) v /= denom;
    return acc;
}

std::vector<double> attention_diagonal(const AttentionView& attn, std::size_t layer) {
    const std::size_t t = attn.tokens;
    std::vector<double> diag(t, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(t); ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        double s = 0.0;
        for (std::size_t h = 0; h < attn.heads; ++h) s += attn.matrix(layer, h)[i * t + i];
        diag[i] = s / static_cast<double>(attn.heads);
    }
    return diag;
}

std::vector<RowSumViolation> row_sum_violations(const AttentionView& attn, double tol) {
    const std::size_t t = attn.tokens;
    const std::size_t n_mats = attn.layers * attn.heads;
    std::vector<std::vector<RowSumViolation>> per_matrix(n_mats);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t mi = 0; mi < static_cast<std::int64_t>(n_mats); ++mi) {
        const std::size_t l = static_cast<std::size_t>(mi) / attn.heads;
        const std::size_t h = static_cast<std::size_t>(mi) % attn.heads;
        const float* m = attn.matrix(l, h);
        for (std::size_t r = 0; r < t; ++r) {
            double s = 0.0;
            for (std::size_t k = 0; k < t; ++k) s += m[r * t + k];
            if (!(std::abs(s - 1.0) <= tol)) per_matrix[mi].push_back({l, h, r, s});
        }
    }
    std::vector<RowSumViolation> out;
    for (auto& v : per_matrix) out.insert(out.end(), v.begin(), v.end());
    return out;
}

std::vector<double> row_cosines(std::span<const float> a, std::span<const float> b, std::size_t tokens,
                                std::size_t dim) {
    std::vector<double> out(tokens, 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t rr = 0; rr < static_cast<std::int64_t>(tokens); ++rr) {
        const auto r = static_cast<std::size_t>(rr);
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
    std::vector<double> norm_b(rows_b.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t jj = 0; jj < static_cast<std::int64_t>(rows_b.size()); ++jj) {
        norm_b[jj] = norm(rows_b[jj]);
    }
    std::vector<double> partial(rows_a.size(), 0.0);
#pragma omp parallel for schedule(static)
    for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(rows_a.size()); ++ii) {
        const std::size_t i = rows_a[ii];
        const double ni = norm(i);
        double acc = 0.0;
        for (std::size_t jj = 0; jj < rows_b.size(); ++jj) {
            const std::size_t j = rows_b[jj];
            const double nj = norm_b[jj];
            double dot = 0.0;
            for (std::size_t k = 0; k < dim; ++k) {
                dot += static_cast<double>(hidden[i * dim + k]) * hidden[j * dim + k];
            }
            const double cos = (ni > 0.0 && nj > 0.0) ? std::clamp(dot / (ni * nj), -1.0, 1.0) : 0.0;
            acc += 1.0 - cos;
        }
        partial[ii] = acc;
    }
    double total = 0.0;
    for (double p : partial) total += p;
    return total / (static_cast<double>(rows_a.size()) * static_cast<double>(rows_b.size()));
}

}  // namespace pii::kernels::parallel
