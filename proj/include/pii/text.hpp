// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pii {

/// Lowercases ASCII, turns ASCII punctuation into spaces and collapses whitespace runs.
/// Bytes >= 0x80 are kept as word characters.
std::string normalize_text(std::string_view text);

/// normalize_text() followed by a split on single spaces.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace pii
