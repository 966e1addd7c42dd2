// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/digest.hpp"
#include "pii/errors.hpp"
#include "pii/image.hpp"
#include "pii/text.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace pii {
namespace {

TEST(Digest, KnownVectors) {
    EXPECT_EQ(sha256_hex(std::string_view("abc")),
              "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    EXPECT_EQ(sha256_hex(std::string_view("")),
              "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Digest, IncrementalMatchesOneShot) {
    Sha256 h;
    h.update(std::string_view("ab"));
    h.update(std::string_view("c"));
    EXPECT_EQ(h.hex_digest(), sha256_hex(std::string_view("abc")));
}

TEST(Digest, Base64) {
    std::vector<std::uint8_t> bytes;
    for (int v = 0; v < 256; v += 17) bytes.push_back(static_cast<std::uint8_t>(v));
    EXPECT_EQ(base64_encode(bytes), "ABEiM0RVZneImaq7zN3u/w==");
    const std::string f = "f", fo = "fo", foo = "foo";
    EXPECT_EQ(base64_encode({reinterpret_cast<const std::uint8_t*>(f.data()), 1}), "Zg==");
    EXPECT_EQ(base64_encode({reinterpret_cast<const std::uint8_t*>(fo.data()), 2}), "Zm8=");
    EXPECT_EQ(base64_encode({reinterpret_cast<const std::uint8_t*>(foo.data()), 3}), "Zm9v");
}

RgbImage gradient(int w, int h) {
    RgbImage img(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            img.set(x, y, {static_cast<std::uint8_t>((x * 7 + y * 13) % 256),
                           static_cast<std::uint8_t>((x * 7 + y * 13 + 29) % 256),
                           static_cast<std::uint8_t>((x * 7 + y * 13 + 58) % 256)});
        }
    }
    return img;
}

TEST(Image, ContentHashGolden) {
    // sha256(b"rgb8" + u64le(2) + u64le(3) + pixels), computed outside the library
    EXPECT_EQ(content_hash(gradient(2, 3)), "054da2cb8ebc73d430ccddc268a8ee1b99c7146e8389b89486c6bc77b78aee9a");
}

TEST(Image, PngRoundTripIsLossless) {
    const auto img = gradient(37, 21);
    const auto png = encode_png(img);
    EXPECT_EQ(decode_image(png), img);
    EXPECT_EQ(encode_png(img), png);
}

TEST(Image, WriteAndLoad) {
    const auto path = std::filesystem::temp_directory_path() / "pii_test_image.png";
    const auto img = gradient(16, 9);
    write_png(img, path);
    EXPECT_EQ(load_image(path), img);
    std::filesystem::remove(path);
}

TEST(Image, RejectsUnknownFormat) {
    const std::vector<std::uint8_t> junk{'G', 'I', 'F', '8', '9', 'a', 0, 0};
    EXPECT_THROW(decode_image(junk), DataError);
    EXPECT_THROW(load_image("/nonexistent/file.png"), DataError);
}

TEST(Text, Normalize) {
    EXPECT_EQ(normalize_text("  A Hot-Dog, and  TWO dogs!! "), "a hot dog and two dogs");
    EXPECT_EQ(normalize_text(""), "");
    EXPECT_EQ(normalize_text("caf\xc3\xa9 Au"), "caf\xc3\xa9 au");
    const std::vector<std::string> want{"is", "there", "a", "dog"};
    EXPECT_EQ(tokenize("Is there a dog?"), want);
    EXPECT_TRUE(tokenize("?!").empty());
}

}  // namespace
}  // namespace pii
