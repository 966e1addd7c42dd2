// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "pii/corpus.hpp"
#include "pii/transcript.hpp"

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace pii {

enum class PolarAnswer { Yes, No, Abstain };

std::string_view to_string(PolarAnswer a);

/// Class of the first "yes"/"no" token after lowercasing and stripping punctuation; Abstain if none.
PolarAnswer parse_polar_answer(std::string_view text);

struct PopeItemResult {
    std::string item_id;
    PolarAnswer predicted = PolarAnswer::Abstain;
    Polar gold = Polar::No;
    bool correct = false;
    bool failed = false;
};

/// Positive class is Yes. Abstentions (including failed calls) count as incorrect non-yes answers.
struct PopeMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double yes_ratio = 0.0;
    std::size_t n_total = 0;
    std::size_t n_abstain = 0;
    std::size_t n_failed = 0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::vector<PopeItemResult> per_item;
};

PopeMetrics score_pope(const std::vector<Transcript>& transcripts, const std::vector<EvalItem>& items);
/// Pools counts of two shards and recomputes the ratios.
PopeMetrics merge(const PopeMetrics& a, const PopeMetrics& b);

/// Longest-phrase-first greedy scan over the normalized caption. A caption token matches a phrase
/// token when equal, or equal after dropping a trailing "s" or "es".
std::set<CategoryId> extract_objects(std::string_view caption, const Lexicon& lex);

struct CaptionResult {
    std::string item_id;
    std::set<CategoryId> mentioned;
    std::set<CategoryId> hallucinated;
    bool failed = false;
};

/// CHAIR with unique-per-caption counting. Captions mentioning no object are left out of both
/// denominators and counted in n_excluded.
struct ChairMetrics {
    double chair_s = 0.0;
    double chair_i = 0.0;
    std::size_t n_captions = 0;
    std::size_t n_excluded = 0;
    std::size_t n_failed = 0;
    std::size_t mentioned_total = 0;
    std::size_t hallucinated_total = 0;
    std::size_t captions_with_mentions = 0;
    std::size_t captions_with_hallucination = 0;
    std::vector<CaptionResult> per_caption;
};

ChairMetrics score_chair(const std::vector<Transcript>& transcripts, const std::vector<EvalItem>& items,
                         const Lexicon& lex);
ChairMetrics merge(const ChairMetrics& a, const ChairMetrics& b);

}  // namespace pii
