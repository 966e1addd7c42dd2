// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace pii {

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// 8-bit interleaved RGB raster, row-major, no padding.
class RgbImage {
public:
    RgbImage() = default;
    RgbImage(int width, int height, Rgb fill = {});
    RgbImage(int width, int height, std::vector<std::uint8_t> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    bool empty() const noexcept { return width_ == 0 || height_ == 0; }

    std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
    std::span<std::uint8_t> pixels() noexcept { return pixels_; }
    std::span<const std::uint8_t> row(int y) const;
    std::span<std::uint8_t> row(int y);

    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb c);

    friend bool operator==(const RgbImage&, const RgbImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> pixels_;
};

/// SHA-256 over (width, height, RGB bytes); independent of any file encoding.
std::string content_hash(const RgbImage& img);

/// Decodes PNG or JPEG (detected from the magic bytes). Alpha and palette are flattened to RGB.
RgbImage load_image(const std::filesystem::path& path);
RgbImage decode_image(std::span<const std::uint8_t> bytes);

/// 8-bit RGB PNG, no alpha, fixed zlib level and filter so output is reproducible.
std::vector<std::uint8_t> encode_png(const RgbImage& img);
void write_png(const RgbImage& img, const std::filesystem::path& path);

}  // namespace pii
