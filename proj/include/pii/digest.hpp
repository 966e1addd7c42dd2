// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace pii {

/// Lowercase hex SHA-256 of a byte range.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(std::string_view text);

/// Incremental SHA-256.
class Sha256 {
public:
    Sha256();
    ~Sha256();
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(std::span<const std::uint8_t> bytes);
    void update(std::string_view text);
    void update_u64(std::uint64_t v);  // little-endian
    std::string hex_digest();

private:
    void* ctx_;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);

}  // namespace pii
