// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/image.hpp"

#include "pii/digest.hpp"
#include "pii/errors.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first
#include <cstdio>
#include <jpeglib.h>

#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

namespace pii {

RgbImage::RgbImage(int width, int height, Rgb fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) throw std::invalid_argument("RgbImage: negative dimension");
    pixels_.resize(static_cast<std::size_t>(width) * height * 3);
    for (std::size_t i = 0; i < pixels_.size(); i += 3) {
        pixels_[i] = fill.r;
        pixels_[i + 1] = fill.g;
        pixels_[i + 2] = fill.b;
    }
}

RgbImage::RgbImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 0 || height < 0 || pixels_.size() != static_cast<std::size_t>(width) * height * 3) {
        throw std::invalid_argument("RgbImage: pixel buffer does not match dimensions");
    }
}

std::span<const std::uint8_t> RgbImage::row(int y) const {
    return std::span<const std::uint8_t>(pixels_).subspan(static_cast<std::size_t>(y) * width_ * 3,
                                                          static_cast<std::size_t>(width_) * 3);
}

std::span<std::uint8_t> RgbImage::row(int y) {
    return std::span<std::uint8_t>(pixels_).subspan(static_cast<std::size_t>(y) * width_ * 3,
                                                    static_cast<std::size_t>(width_) * 3);
}

Rgb RgbImage::at(int x, int y) const {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    return {pixels_[i], pixels_[i + 1], pixels_[i + 2]};
}

void RgbImage::set(int x, int y, Rgb c) {
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
}

std::string content_hash(const RgbImage& img) {
    Sha256 h;
    h.update(std::string_view("rgb8"));
    h.update_u64(static_cast<std::uint64_t>(img.width()));
    h.update_u64(static_cast<std::uint64_t>(img.height()));
    h.update(img.pixels());
    return h.hex_digest();
}

namespace {

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open image " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct PngReadState {
    std::span<const std::uint8_t> data;
    std::size_t pos = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t len) {
    auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
    if (st->pos + len > st->data.size()) png_error(png, "read past end of buffer");
    std::memcpy(out, st->data.data() + st->pos, len);
    st->pos += len;
}

void png_error_fn(png_structp png, png_const_charp msg) {
    auto* err = static_cast<std::string*>(png_get_error_ptr(png));
    if (err) *err = msg;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("png: allocation failed");
    }
    PngReadState state{bytes, 0};
    std::vector<std::uint8_t> pixels;
    std::vector<png_bytep> rows;
    png_uint_32 w = 0, h = 0;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("png decode failed: " + err);
    }
    png_set_read_fn(png, &state, png_read_from_span);
    png_read_info(png, info);
    w = png_get_image_width(png, info);
    h = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);
    if (png_get_rowbytes(png, info) != static_cast<png_size_t>(w) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw DataError("png: unsupported pixel layout");
    }
    pixels.resize(static_cast<std::size_t>(w) * h * 3);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y) rows[y] = pixels.data() + static_cast<std::size_t>(y) * w * 3;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return RgbImage(static_cast<int>(w), static_cast<int>(h), std::move(pixels));
}

struct JpegErrorMgr {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, mgr->message);
    std::longjmp(mgr->jump, 1);
}

RgbImage decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo{};
    JpegErrorMgr err{};
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    std::vector<std::uint8_t> pixels;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw DataError(std::string("jpeg decode failed: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    // Fixed IDCT so the decoded raster does not depend on the library's default choice.
    cinfo.dct_method = JDCT_ISLOW;
    jpeg_start_decompress(&cinfo);
    const auto w = cinfo.output_width;
    const auto h = cinfo.output_height;
    pixels.resize(static_cast<std::size_t>(w) * h * 3);
    while (cinfo.output_scanline < h) {
        JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return RgbImage(static_cast<int>(w), static_cast<int>(h), std::move(pixels));
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void png_flush_noop(png_structp) {}

}  // namespace

RgbImage decode_image(std::span<const std::uint8_t> bytes) {
    static constexpr std::uint8_t kPngSig[] = {0x89, 'P', 'N', 'G'};
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), kPngSig, 4) == 0) return decode_png(bytes);
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return decode_jpeg(bytes);
    throw DataError("unsupported image format (expected PNG or JPEG)");
}

RgbImage load_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return decode_image(bytes);
    } catch (const DataError& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_png(const RgbImage& img) {
    if (img.empty()) throw DataError("png: cannot encode an empty image");
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw DataError("png: allocation failed");
    }
    std::vector<std::uint8_t> out;
    std::vector<png_bytep> rows(img.height());
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw DataError("png encode failed: " + err);
    }
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_set_filter(png, PNG_FILTER_TYPE_BASE, PNG_FILTER_SUB);
    png_write_info(png, info);
    for (int y = 0; y < img.height(); ++y) {
        rows[y] = const_cast<png_bytep>(img.row(y).data());
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

void write_png(const RgbImage& img, const std::filesystem::path& path) {
    const auto bytes = encode_png(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace pii
