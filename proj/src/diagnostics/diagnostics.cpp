// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/diagnostics.hpp"

#include "pii/errors.hpp"
#include "pii/kernels.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace pii {

namespace {

kernels::AttentionView attention_view(const TensorDump& dump) {
    const TensorArray* attn = dump.find("attn");
    if (!attn || attn->dims.size() != 4 || attn->dims[2] != attn->dims[3]) {
        throw SchemaViolation({"dump '" + dump.header.sample_id + "' has no attn[L,H,T,T] array"});
    }
    return {attn->data, attn->dims[0], attn->dims[1], attn->dims[2]};
}

std::size_t layer_index(std::size_t layer, std::size_t layers) {
    if (layer < 1 || layer > layers) {
        throw LayerOutOfRange("layer " + std::to_string(layer) + " outside 1.." + std::to_string(layers));
    }
    return layer - 1;
}

bool in_cls(const DumpHeader& h, std::size_t token) {
    for (const auto& s : h.spans) {
        if (s.label == SpanLabel::Cls && s.contains(token)) return true;
    }
    return false;
}

std::vector<std::size_t> non_cls_tokens(const DumpHeader& h, std::size_t tokens) {
    std::vector<std::size_t> out;
    out.reserve(tokens);
    for (std::size_t t = 0; t < tokens; ++t) {
        if (!in_cls(h, t)) out.push_back(t);
    }
    return out;
}

std::vector<std::size_t> span_rows(const DumpHeader& h, SpanLabel label) {
    std::vector<std::size_t> rows;
    for (const auto& s : h.spans_with(label)) {
        for (std::size_t i = s.start; i < s.end; ++i) rows.push_back(i);
    }
    return rows;
}

const TensorArray& decoder_hidden(const TensorDump& dump) {
    const TensorArray* hidden = dump.find("hidden");
    if (!hidden || hidden->dims.size() != 2) {
        throw SchemaViolation({"dump '" + dump.header.sample_id + "' has no hidden[T,D] array"});
    }
    return *hidden;
}

struct RoleRows {
    std::vector<std::size_t> image;
    std::vector<std::size_t> text;
};

RoleRows role_rows(const TensorDump& dump, std::size_t tokens) {
    RoleRows r{span_rows(dump.header, SpanLabel::ImageTokens), span_rows(dump.header, SpanLabel::TextTokens)};
    if (r.image.empty() || r.text.empty()) {
        throw DegenerateSpan("dump '" + dump.header.sample_id + "' needs non-empty image_tokens and text_tokens spans");
    }
    for (auto rows : {&r.image, &r.text}) {
        for (std::size_t i : *rows) {
            if (i >= tokens) throw DegenerateSpan("span exceeds the hidden-state token count");
        }
    }
    return r;
}

}  // namespace

AttentionGrid attention_received(const TensorDump& dump, std::size_t layer) {
    const auto view = attention_view(dump);
    const std::size_t li = layer_index(layer, view.layers);
    const auto received = kernels::parallel::received_attention(view, li);

    AttentionGrid grid;
    grid.layer = layer;
    double cls = 0.0;
    bool has_cls = false;
    for (std::size_t t = 0; t < view.tokens; ++t) {
        if (in_cls(dump.header, t)) {
            cls += received[t];
            has_cls = true;
        } else {
            grid.values.push_back(received[t]);
        }
    }
    if (has_cls) grid.cls_received = cls;

    const std::size_t n = grid.values.size();
    if (dump.header.patch_grid && (*dump.header.patch_grid)[0] * (*dump.header.patch_grid)[1] == n) {
        grid.rows = (*dump.header.patch_grid)[0];
        grid.cols = (*dump.header.patch_grid)[1];
    } else if (const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
               side * side == n) {
        grid.rows = grid.cols = side;
    } else {
        grid.rows = 1;
        grid.cols = n;
    }
    return grid;
}

DiagonalProfile self_attention_diagonal(const TensorDump& dump, std::size_t layer) {
    const auto view = attention_view(dump);
    const auto diag = kernels::parallel::attention_diagonal(view, layer_index(layer, view.layers));
    DiagonalProfile p;
    p.layer = layer;
    for (std::size_t t = 0; t < view.tokens; ++t) {
        if (in_cls(dump.header, t)) {
            p.cls_diag.push_back(diag[t]);
        } else {
            p.patch_diag.push_back(diag[t]);
            p.token_index.push_back(t);
        }
    }
    return p;
}

BiasStats text_bias_ratio(std::span<const double> diag, const TokenSpan& text_span) {
    if (text_span.start >= text_span.end || text_span.end > diag.size()) {
        throw DegenerateSpan("text span [" + std::to_string(text_span.start) + ", " + std::to_string(text_span.end) +
                             ") is empty or outside a vector of " + std::to_string(diag.size()));
    }
    const std::size_t n_text = text_span.size();
    const std::size_t n_other = diag.size() - n_text;
    if (n_other == 0) throw DegenerateSpan("text span covers every token; no non-text region");
    double text = 0.0, other = 0.0;
    for (std::size_t i = 0; i < diag.size(); ++i) (text_span.contains(i) ? text : other) += diag[i];
    BiasStats s;
    s.text_mean = text / static_cast<double>(n_text);
    s.nontext_mean = other / static_cast<double>(n_other);
    if (s.nontext_mean == 0.0) throw DegenerateSpan("non-text mean is zero; bias ratio undefined");
    s.ratio = s.text_mean / s.nontext_mean;
    return s;
}

BiasReport bias_report(const TensorDump& dump, const std::vector<std::size_t>& layers) {
    BiasReport report;
    report.sample_id = dump.header.sample_id;
    const auto text = dump.header.spans_with(SpanLabel::TextRegionPatches);
    if (text.empty() || text.front().size() == 0) {
        throw DegenerateSpan("dump '" + dump.header.sample_id + "' has no text_region_patches span");
    }
    for (std::size_t layer : layers) {
        auto prof = self_attention_diagonal(dump, layer);
        if (report.per_patch_diag.empty()) {
            // Map the token-space span onto positions within the non-Cls vector.
            std::size_t lo = prof.token_index.size(), hi = 0;
            for (std::size_t k = 0; k < prof.token_index.size(); ++k) {
                if (text.front().contains(prof.token_index[k])) {
                    lo = std::min(lo, k);
                    hi = std::max(hi, k + 1);
                }
            }
            if (lo >= hi) throw DegenerateSpan("text_region_patches span contains no patch tokens");
            report.text_span = {SpanLabel::TextRegionPatches, lo, hi};
            report.n_text_patches = hi - lo;
        }
        const auto stats = text_bias_ratio(prof.patch_diag, report.text_span);
        report.per_layer.push_back({layer, stats.text_mean, stats.nontext_mean, stats.ratio});
        report.per_patch_diag.push_back(std::move(prof.patch_diag));
    }
    return report;
}

std::vector<std::size_t> final_layers(std::size_t total, std::size_t count) {
    std::vector<std::size_t> out;
    const std::size_t first = count >= total ? 1 : total - count + 1;
    for (std::size_t l = first; l <= total; ++l) out.push_back(l);
    return out;
}

SimilarityProfile layerwise_similarity(const TensorDump& a, const TensorDump& b, const std::vector<std::size_t>& layers) {
    const TensorArray* ha = a.find("hidden");
    const TensorArray* hb = b.find("hidden");
    if (!ha || !hb || ha->dims.size() != 3 || hb->dims.size() != 3) {
        throw ShapeMismatch("both dumps need hidden[L,T,D] arrays");
    }
    if (ha->dims != hb->dims) {
        throw ShapeMismatch("hidden shapes differ between '" + a.header.sample_id + "' and '" + b.header.sample_id + "'");
    }
    const std::size_t n_layers = ha->dims[0], tokens = ha->dims[1], dim = ha->dims[2];
    const auto patches = non_cls_tokens(a.header, tokens);
    if (patches.empty()) throw DegenerateSpan("no non-Cls tokens to compare");

    SimilarityProfile prof;
    for (std::size_t layer : layers) {
        const std::size_t li = layer_index(layer, n_layers);
        const std::span<const float> la(ha->data.data() + li * tokens * dim, tokens * dim);
        const std::span<const float> lb(hb->data.data() + li * tokens * dim, tokens * dim);
        const auto cos = kernels::parallel::row_cosines(la, lb, tokens, dim);
        double sum = 0.0;
        for (std::size_t p : patches) sum += cos[p];
        prof.per_layer.push_back({layer, sum / static_cast<double>(patches.size())});
        prof.layers_analyzed.push_back(layer);
    }
    return prof;
}

double modality_gap(const TensorDump& dump) {
    const auto& hidden = decoder_hidden(dump);
    const auto rows = role_rows(dump, hidden.dims[0]);
    return kernels::parallel::mean_pairwise_cosine_distance(hidden.data, hidden.dims[1], rows.image, rows.text);
}

double centroid_cosine_distance(const TensorDump& dump) {
    const auto& hidden = decoder_hidden(dump);
    const std::size_t dim = hidden.dims[1];
    const auto rows = role_rows(dump, hidden.dims[0]);
    auto centroid = [&](const std::vector<std::size_t>& idx) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        for (std::size_t i : idx) {
            for (std::size_t k = 0; k < dim; ++k) c[static_cast<Eigen::Index>(k)] += hidden.data[i * dim + k];
        }
        return Eigen::VectorXd(c / static_cast<double>(idx.size()));
    };
    const Eigen::VectorXd ci = centroid(rows.image);
    const Eigen::VectorXd ct = centroid(rows.text);
    const double denom = ci.norm() * ct.norm();
    const double cos = denom > 0.0 ? std::clamp(ci.dot(ct) / denom, -1.0, 1.0) : 0.0;
    return 1.0 - cos;
}

GapReport gap_report(const std::vector<TensorDump>& dumps) {
    GapReport r;
    double sum = 0.0;
    for (const auto& d : dumps) {
        GapReport::Sample s{d.header.sample_id, d.header.condition.value_or(""), modality_gap(d),
                            centroid_cosine_distance(d)};
        sum += s.mean_pairwise_cosine_distance;
        r.per_sample.push_back(std::move(s));
    }
    r.group_mean = dumps.empty() ? 0.0 : sum / static_cast<double>(dumps.size());
    return r;
}

std::string_view to_string(TokenRole r) { return r == TokenRole::Image ? "image" : "text"; }

std::vector<PcaPoint> pca_project(const TensorDump& dump) {
    const auto& hidden = decoder_hidden(dump);
    const std::size_t dim = hidden.dims[1];
    const auto rows = role_rows(dump, hidden.dims[0]);
    const std::size_t n = rows.image.size() + rows.text.size();
    if (n < 3) throw DegenerateSpan("PCA needs at least 3 tokens");

    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
    std::size_t r = 0;
    for (auto idx : {&rows.image, &rows.text}) {
        for (std::size_t i : *idx) {
            for (std::size_t k = 0; k < dim; ++k) x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = hidden.data[i * dim + k];
            ++r;
        }
    }
    x.rowwise() -= x.colwise().mean();

    // Principal axes in feature space (dim x 2), from whichever of the two symmetric problems is smaller.
    Eigen::MatrixXd axes(static_cast<Eigen::Index>(dim), 2);
    const Eigen::Index comps = std::min<Eigen::Index>(2, std::min<Eigen::Index>(x.rows(), x.cols()));
    axes.setZero();
    if (n < dim) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x * x.transpose());
        for (Eigen::Index c = 0; c < comps; ++c) {
            const Eigen::Index col = es.eigenvalues().size() - 1 - c;
            Eigen::VectorXd v = x.transpose() * es.eigenvectors().col(col);
            const double norm = v.norm();
            if (norm > 0.0) axes.col(c) = v / norm;
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x.transpose() * x);
        for (Eigen::Index c = 0; c < comps; ++c) axes.col(c) = es.eigenvectors().col(es.eigenvalues().size() - 1 - c);
    }
    for (Eigen::Index c = 0; c < 2; ++c) {
        Eigen::Index arg = 0;
        axes.col(c).cwiseAbs().maxCoeff(&arg);
        if (axes(arg, c) < 0.0) axes.col(c) = -axes.col(c);
    }
    const Eigen::MatrixXd proj = x * axes;

    std::vector<PcaPoint> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({i < rows.image.size() ? TokenRole::Image : TokenRole::Text, proj(static_cast<Eigen::Index>(i), 0),
                       proj(static_cast<Eigen::Index>(i), 1)});
    }
    return out;
}

}  // namespace pii
