// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pii/image.hpp"

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pii {

/// The four input settings compared in an evaluation campaign.
enum class Condition { Baseline, Control, PromptInImage, Hybrid };

std::string_view to_string(Condition c);
/// Accepts "baseline", "control", "pii" / "prompt_in_image", "hybrid".
Condition parse_condition(std::string_view s);
/// True when the rendered image carries the question text.
bool carries_text(Condition c);

/// Identifier of the font compiled into the library (Arimo Regular, metric-compatible with Arial).
inline constexpr std::string_view kBuiltinFont = "arimo-regular";

struct RenderSpec {
    /// kBuiltinFont or a path to a TrueType file.
    std::string font_identifier{kBuiltinFont};
    /// Em size in pixels; a "26pt" font is read as a 26 px em.
    int font_px = 26;
    Rgb text_color{0, 0, 0};
    Rgb strip_color{255, 255, 255};
    /// Target ratio of strip height to total output height.
    double target_strip_fraction = 0.05;
    int padding_px = 4;
    int line_gap_px = 6;

    /// Throws RenderError when an invariant does not hold.
    void validate() const;
};

/// A loaded TrueType font. Immutable and safe to share between threads.
class Font {
public:
    /// Resolves kBuiltinFont or a file path. File fonts are cached per path.
    static std::shared_ptr<const Font> resolve(const std::string& identifier);

    const std::string& name() const noexcept { return name_; }
    /// SHA-256 of the font file bytes.
    const std::string& digest() const noexcept { return digest_; }

    /// Horizontal pixel extent of `text` when rasterized at `font_px` (ink and advance).
    int measure(std::string_view text, int font_px) const;
    /// Pixels from the top of a line box to the baseline.
    int ascent_px(int font_px) const;

    /// Accumulates anti-aliased coverage (0..255) of one line into `coverage`
    /// (a `cov_w` x `cov_h` plane), starting at `x` with the line box top at `top`.
    void rasterize_line(std::string_view text, int font_px, int x, int top, std::vector<std::uint8_t>& coverage,
                        int cov_w, int cov_h) const;

    ~Font();
    Font(const Font&) = delete;
    Font& operator=(const Font&) = delete;

private:
    struct Impl;
    Font(std::string name, std::vector<std::uint8_t> owned, const unsigned char* data, std::size_t size);
    std::string name_;
    std::string digest_;
    std::vector<std::uint8_t> owned_;
    std::unique_ptr<Impl> impl_;
};

struct StripGeometry {
    int original_w = 0;
    int original_h = 0;
    int strip_h = 0;
    std::vector<std::string> lines;
    /// strip_h / (original_h + strip_h), from the final strip height.
    double achieved_fraction = 0.0;
    /// True when the text needed more room than the target fraction allowed.
    bool exceeds_target = false;
    std::string font_name;
    std::string font_digest;
};

struct ConditionedImage {
    Condition condition = Condition::Baseline;
    RgbImage pixels;
    StripGeometry geometry;
    std::string content_hash;
};

/// Greedy word wrap. Throws UnbreakableToken when a single word is wider than `max_width_px`.
std::vector<std::string> wrap_text(std::string_view text, int max_width_px, const RenderSpec& spec);

StripGeometry compute_strip_geometry(int w, int h, std::string_view text, const RenderSpec& spec);

ConditionedImage render_condition(const RgbImage& source, std::string_view question, Condition condition,
                                  const RenderSpec& spec);

}  // namespace pii
