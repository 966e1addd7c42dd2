// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/conditioner.hpp"

#include "pii/digest.hpp"
#include "pii/errors.hpp"

#include "stb_truetype.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>

extern const unsigned char pii_font_arimo_regular[];
extern const std::size_t pii_font_arimo_regular_size;

namespace pii {

namespace {

/// Decodes UTF-8; malformed bytes become U+FFFD.
std::vector<int> decode_utf8(std::string_view s) {
    std::vector<int> out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size();) {
        const auto c = static_cast<unsigned char>(s[i]);
        int len = 0;
        int cp = 0;
        if (c < 0x80) {
            len = 1;
            cp = c;
        } else if ((c >> 5) == 0x6) {
            len = 2;
            cp = c & 0x1F;
        } else if ((c >> 4) == 0xE) {
            len = 3;
            cp = c & 0x0F;
        } else if ((c >> 3) == 0x1E) {
            len = 4;
            cp = c & 0x07;
        }
        if (len == 0 || i + len > s.size()) {
            out.push_back(0xFFFD);
            ++i;
            continue;
        }
        bool ok = true;
        for (int k = 1; k < len; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc >> 6) != 0x2) {
                ok = false;
                break;
            }
            cp = (cp << 6) | (cc & 0x3F);
        }
        out.push_back(ok ? cp : 0xFFFD);
        i += ok ? len : 1;
    }
    return out;
}

struct GlyphPlacement {
    int glyph;
    float pen;  // pen position before the glyph, in pixels
    int x0, y0, x1, y1;  // bitmap box relative to (floor(pen), baseline)
};

}  // namespace

struct Font::Impl {
    stbtt_fontinfo info{};

    struct Layout {
        std::vector<GlyphPlacement> glyphs;
        int min_x = 0;  // leftmost ink, <= 0
        int extent = 0;  // measured width
    };

    Layout layout(std::string_view text, int font_px) const {
        Layout out;
        const float scale = stbtt_ScaleForMappingEmToPixels(&info, static_cast<float>(font_px));
        float pen = 0.0f;
        int prev = -1;
        int max_x = 0;
        for (int cp : decode_utf8(text)) {
            const int g = stbtt_FindGlyphIndex(&info, cp);
            if (prev >= 0) pen += scale * static_cast<float>(stbtt_GetGlyphKernAdvance(&info, prev, g));
            int advance = 0, lsb = 0;
            stbtt_GetGlyphHMetrics(&info, g, &advance, &lsb);
            GlyphPlacement gp{g, pen, 0, 0, 0, 0};
            const float base = std::floor(pen);
            stbtt_GetGlyphBitmapBoxSubpixel(&info, g, scale, scale, pen - base, 0.0f, &gp.x0, &gp.y0, &gp.x1,
                                            &gp.y1);
            if (gp.x1 > gp.x0) {
                out.min_x = std::min(out.min_x, static_cast<int>(base) + gp.x0);
                max_x = std::max(max_x, static_cast<int>(base) + gp.x1);
            }
            out.glyphs.push_back(gp);
            pen += scale * static_cast<float>(advance);
            prev = g;
        }
        max_x = std::max(max_x, static_cast<int>(std::ceil(pen)));
        out.extent = out.glyphs.empty() ? 0 : max_x - out.min_x;
        return out;
    }
};

Font::Font(std::string name, std::vector<std::uint8_t> owned, const unsigned char* data, std::size_t size)
    : name_(std::move(name)), owned_(std::move(owned)), impl_(std::make_unique<Impl>()) {
    if (!owned_.empty()) data = owned_.data();
    digest_ = sha256_hex(std::span<const std::uint8_t>(data, size));
    const int offset = stbtt_GetFontOffsetForIndex(data, 0);
    if (offset < 0 || !stbtt_InitFont(&impl_->info, data, offset)) {
        throw RenderError("cannot parse font '" + name_ + "'");
    }
}

Font::~Font() = default;

std::shared_ptr<const Font> Font::resolve(const std::string& identifier) {
    static std::mutex mu;
    static std::map<std::string, std::shared_ptr<const Font>> cache;
    std::lock_guard lock(mu);
    if (auto it = cache.find(identifier); it != cache.end()) return it->second;

    std::shared_ptr<const Font> font;
    if (identifier == kBuiltinFont) {
        font.reset(new Font(std::string(kBuiltinFont), {}, pii_font_arimo_regular, pii_font_arimo_regular_size));
    } else {
        std::ifstream in(identifier, std::ios::binary);
        if (!in) throw RenderError("cannot load font '" + identifier + "'");
        std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
        if (bytes.empty()) throw RenderError("font file '" + identifier + "' is empty");
        const std::size_t size = bytes.size();
        font.reset(new Font(identifier, std::move(bytes), nullptr, size));
    }
    cache.emplace(identifier, font);
    return font;
}

int Font::measure(std::string_view text, int font_px) const { return impl_->layout(text, font_px).extent; }

int Font::ascent_px(int font_px) const {
    int ascent = 0, descent = 0, gap = 0;
    stbtt_GetFontVMetrics(&impl_->info, &ascent, &descent, &gap);
    const float scale = stbtt_ScaleForMappingEmToPixels(&impl_->info, static_cast<float>(font_px));
    return static_cast<int>(std::lround(scale * static_cast<float>(ascent)));
}

void Font::rasterize_line(std::string_view text, int font_px, int x, int top, std::vector<std::uint8_t>& coverage,
                          int cov_w, int cov_h) const {
    const auto lay = impl_->layout(text, font_px);
    const float scale = stbtt_ScaleForMappingEmToPixels(&impl_->info, static_cast<float>(font_px));
    const int baseline = top + ascent_px(font_px);
    const int origin = x - lay.min_x;
    std::vector<unsigned char> glyph_buf;
    for (const auto& gp : lay.glyphs) {
        const int gw = gp.x1 - gp.x0;
        const int gh = gp.y1 - gp.y0;
        if (gw <= 0 || gh <= 0) continue;
        glyph_buf.assign(static_cast<std::size_t>(gw) * gh, 0);
        const float base = std::floor(gp.pen);
        stbtt_MakeGlyphBitmapSubpixel(&impl_->info, glyph_buf.data(), gw, gh, gw, scale, scale, gp.pen - base, 0.0f,
                                      gp.glyph);
        const int gx = origin + static_cast<int>(base) + gp.x0;
        const int gy = baseline + gp.y0;
        for (int j = 0; j < gh; ++j) {
            const int y = gy + j;
            if (y < 0 || y >= cov_h) continue;
            for (int i = 0; i < gw; ++i) {
                const int px = gx + i;
                if (px < 0 || px >= cov_w) continue;
                auto& c = coverage[static_cast<std::size_t>(y) * cov_w + px];
                c = static_cast<std::uint8_t>(std::min(255, c + glyph_buf[static_cast<std::size_t>(j) * gw + i]));
            }
        }
    }
}

}  // namespace pii
