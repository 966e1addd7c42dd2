// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference scorers. They share no code with src/metrics.

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace pii::testing {

struct BrutePope {
    double accuracy, precision, recall, f1, yes_ratio;
};

/// gold: "yes"/"no"; pred: "yes"/"no"/"" (abstain).
BrutePope brute_pope(const std::vector<std::string>& gold, const std::vector<std::string>& pred);

/// Categories named in `caption`: leftmost match first, longest phrase at a position wins,
/// phrase words may carry a plural "s" or "es". Works on raw characters.
std::set<std::string> brute_mentions(const std::string& caption, const std::map<std::string, std::string>& phrases);

struct BruteChair {
    double chair_s, chair_i;
    std::size_t excluded;
};

BruteChair brute_chair(const std::vector<std::string>& captions, const std::vector<std::set<std::string>>& gold,
                       const std::map<std::string, std::string>& phrases);

}  // namespace pii::testing
