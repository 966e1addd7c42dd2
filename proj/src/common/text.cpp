// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/text.hpp"

namespace pii {

std::string normalize_text(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        const bool word = c >= 0x80 || (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
        if (!word) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c));
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    const std::string norm = normalize_text(text);
    std::size_t start = 0;
    while (start < norm.size()) {
        std::size_t end = norm.find(' ', start);
        if (end == std::string::npos) end = norm.size();
        tokens.emplace_back(norm.substr(start, end - start));
        start = end + 1;
    }
    return tokens;
}

}  // namespace pii
