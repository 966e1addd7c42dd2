// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/conditioner.hpp"

#include "pii/errors.hpp"

#include <cmath>
#include <sstream>

namespace pii {

std::string_view to_string(Condition c) {
    switch (c) {
        case Condition::Baseline: return "baseline";
        case Condition::Control: return "control";
        case Condition::PromptInImage: return "pii";
        case Condition::Hybrid: return "hybrid";
    }
    return "unknown";
}

Condition parse_condition(std::string_view s) {
    if (s == "baseline") return Condition::Baseline;
    if (s == "control") return Condition::Control;
    if (s == "pii" || s == "prompt_in_image" || s == "prompt-in-image") return Condition::PromptInImage;
    if (s == "hybrid") return Condition::Hybrid;
    throw UsageError("unknown condition '" + std::string(s) + "'");
}

bool carries_text(Condition c) { return c == Condition::PromptInImage || c == Condition::Hybrid; }

void RenderSpec::validate() const {
    if (!(target_strip_fraction > 0.0 && target_strip_fraction < 0.5)) {
        throw RenderError("target_strip_fraction must lie in (0, 0.5)");
    }
    if (font_px <= 0) throw RenderError("font_px must be positive");
    if (padding_px < 0 || line_gap_px < 0) throw RenderError("padding_px and line_gap_px must be non-negative");
}

namespace {

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::istringstream in{std::string(text)};
    for (std::string w; in >> w;) words.push_back(std::move(w));
    return words;
}

}  // namespace

std::vector<std::string> wrap_text(std::string_view text, int max_width_px, const RenderSpec& spec) {
    spec.validate();
    const auto words = split_words(text);
    if (words.empty()) return {};
    if (max_width_px <= 0) throw UnbreakableToken(words.front(), -1, max_width_px);

    const auto font = Font::resolve(spec.font_identifier);
    std::vector<std::string> lines;
    std::string current;
    for (const auto& word : words) {
        if (!current.empty()) {
            std::string candidate = current + " " + word;
            if (font->measure(candidate, spec.font_px) <= max_width_px) {
                current = std::move(candidate);
                continue;
            }
            lines.push_back(std::move(current));
            current.clear();
        }
        if (const int w = font->measure(word, spec.font_px); w > max_width_px) {
            throw UnbreakableToken(word, w, max_width_px);
        }
        current = word;
    }
    lines.push_back(std::move(current));
    return lines;
}

StripGeometry compute_strip_geometry(int w, int h, std::string_view text, const RenderSpec& spec) {
    spec.validate();
    if (w <= 0 || h <= 0) throw RenderError("image dimensions must be positive");
    const auto font = Font::resolve(spec.font_identifier);

    StripGeometry g;
    g.original_w = w;
    g.original_h = h;
    g.font_name = font->name();
    g.font_digest = font->digest();
    g.lines = wrap_text(text, w - 2 * spec.padding_px, spec);

    const double f = spec.target_strip_fraction;
    const int by_fraction = static_cast<int>(std::lround(f * h / (1.0 - f)));
    const int by_text = g.lines.empty()
                            ? 0
                            : static_cast<int>(g.lines.size()) * (spec.font_px + spec.line_gap_px) +
                                  2 * spec.padding_px;
    g.strip_h = std::max(by_fraction, by_text);
    g.exceeds_target = by_text > by_fraction;
    g.achieved_fraction = static_cast<double>(g.strip_h) / static_cast<double>(h + g.strip_h);
    return g;
}

ConditionedImage render_condition(const RgbImage& source, std::string_view question, Condition condition,
                                  const RenderSpec& spec) {
    if (source.empty()) throw RenderError("source image is empty");
    spec.validate();

    ConditionedImage out;
    out.condition = condition;
    if (condition == Condition::Baseline) {
        const auto font = Font::resolve(spec.font_identifier);
        out.geometry.original_w = source.width();
        out.geometry.original_h = source.height();
        out.geometry.font_name = font->name();
        out.geometry.font_digest = font->digest();
        out.pixels = source;
        out.content_hash = content_hash(out.pixels);
        return out;
    }
    if (carries_text(condition) && split_words(question).empty()) {
        throw RenderError("question text is required for " + std::string(to_string(condition)));
    }

    // Control shares the text geometry so that its dimensions match the text conditions.
    out.geometry = compute_strip_geometry(source.width(), source.height(), question, spec);
    const int w = source.width();
    const int strip_h = out.geometry.strip_h;
    RgbImage img(w, source.height() + strip_h, spec.strip_color);
    std::copy(source.pixels().begin(), source.pixels().end(), img.pixels().begin());

    if (carries_text(condition) && strip_h > 0) {
        const auto font = Font::resolve(spec.font_identifier);
        std::vector<std::uint8_t> coverage(static_cast<std::size_t>(w) * strip_h, 0);
        const int line_h = spec.font_px + spec.line_gap_px;
        for (std::size_t k = 0; k < out.geometry.lines.size(); ++k) {
            font->rasterize_line(out.geometry.lines[k], spec.font_px, spec.padding_px,
                                 spec.padding_px + static_cast<int>(k) * line_h, coverage, w, strip_h);
        }
        const Rgb bg = spec.strip_color;
        const Rgb fg = spec.text_color;
        auto blend = [](int b, int f, int a) { return static_cast<std::uint8_t>((b * (255 - a) + f * a + 127) / 255); };
        for (int y = 0; y < strip_h; ++y) {
            auto row = img.row(source.height() + y);
            for (int x = 0; x < w; ++x) {
                const int a = coverage[static_cast<std::size_t>(y) * w + x];
                if (a == 0) continue;
                row[3 * x] = blend(bg.r, fg.r, a);
                row[3 * x + 1] = blend(bg.g, fg.g, a);
                row[3 * x + 2] = blend(bg.b, fg.b, a);
            }
        }
    }
    out.pixels = std::move(img);
    out.content_hash = content_hash(out.pixels);
    return out;
}

}  // namespace pii
