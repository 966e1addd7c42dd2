// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "oracles.hpp"
#include "pii/errors.hpp"
#include "pii/metrics.hpp"

#include <gtest/gtest.h>

namespace pii {
namespace {

Transcript answer(const std::string& id, const std::string& text, bool failed = false) {
    Transcript t;
    t.item_id = id;
    t.raw_response = text;
    t.attempt_count = 1;
    t.status = failed ? TranscriptStatus::Failed : TranscriptStatus::Ok;
    return t;
}

EvalItem polar(const std::string& id, Polar gold) {
    return {id, "x.jpg", TaskKind::PolarQuestion, "Is there a dog?", gold, std::nullopt};
}

EvalItem caption(const std::string& id, std::set<CategoryId> gold) {
    return {id, "x.jpg", TaskKind::Caption, std::string(kCaptionPrompt), std::nullopt, std::move(gold)};
}

TEST(PolarParse, FirstYesOrNoWins) {
    EXPECT_EQ(parse_polar_answer("Yes, there is a dog."), PolarAnswer::Yes);
    EXPECT_EQ(parse_polar_answer("no."), PolarAnswer::No);
    EXPECT_EQ(parse_polar_answer("NO! yes"), PolarAnswer::No);
    EXPECT_EQ(parse_polar_answer("I think yes"), PolarAnswer::Yes);
    EXPECT_EQ(parse_polar_answer("There is nothing"), PolarAnswer::Abstain);
    EXPECT_EQ(parse_polar_answer("yesterday nobody came"), PolarAnswer::Abstain);
    EXPECT_EQ(parse_polar_answer(""), PolarAnswer::Abstain);
}

TEST(Pope, AllYesPredictor) {
    std::vector<EvalItem> items;
    std::vector<Transcript> ts;
    for (int i = 0; i < 10; ++i) {
        items.push_back(polar("q" + std::to_string(i), i < 5 ? Polar::Yes : Polar::No));
        ts.push_back(answer("q" + std::to_string(i), "Yes."));
    }
    const auto m = score_pope(ts, items);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
    EXPECT_DOUBLE_EQ(m.precision, 0.5);
    EXPECT_DOUBLE_EQ(m.recall, 1.0);
    EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-9);
    EXPECT_DOUBLE_EQ(m.yes_ratio, 1.0);
    EXPECT_EQ(m.tp, 5u);
    EXPECT_EQ(m.fp, 5u);
}

TEST(Pope, PerfectPredictor) {
    std::vector<EvalItem> items;
    std::vector<Transcript> ts;
    for (int i = 0; i < 10; ++i) {
        items.push_back(polar("q" + std::to_string(i), i % 3 ? Polar::Yes : Polar::No));
        ts.push_back(answer("q" + std::to_string(i), i % 3 ? "yes" : "no"));
    }
    const auto m = score_pope(ts, items);
    EXPECT_DOUBLE_EQ(m.accuracy, 1.0);
    EXPECT_DOUBLE_EQ(m.precision, 1.0);
    EXPECT_DOUBLE_EQ(m.recall, 1.0);
    EXPECT_DOUBLE_EQ(m.f1, 1.0);
}

TEST(Pope, AbstentionsAndFailures) {
    const std::vector<EvalItem> items{polar("a", Polar::Yes), polar("b", Polar::No), polar("c", Polar::Yes),
                                      polar("d", Polar::No)};
    const std::vector<Transcript> ts{answer("a", "hmm"), answer("b", "unclear"), answer("c", "", true),
                                     answer("d", "No")};
    const auto m = score_pope(ts, items);
    EXPECT_EQ(m.n_abstain, 3u);
    EXPECT_EQ(m.n_failed, 1u);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.25);
    EXPECT_DOUBLE_EQ(m.yes_ratio, 0.0);
    EXPECT_DOUBLE_EQ(m.precision, 0.0);
    EXPECT_DOUBLE_EQ(m.recall, 0.0);
    EXPECT_EQ(m.per_item.size(), 4u);
    EXPECT_TRUE(m.per_item[2].failed);
}

TEST(Pope, OrderIndependent) {
    const std::vector<EvalItem> items{polar("a", Polar::Yes), polar("b", Polar::No)};
    const auto m1 = score_pope({answer("a", "yes"), answer("b", "yes")}, items);
    const auto m2 = score_pope({answer("b", "yes"), answer("a", "yes")}, items);
    EXPECT_EQ(m1.accuracy, m2.accuracy);
    EXPECT_EQ(m1.precision, m2.precision);
}

TEST(Pope, MissingAndDuplicateTranscripts) {
    const std::vector<EvalItem> items{polar("a", Polar::Yes), polar("b", Polar::No)};
    EXPECT_THROW(score_pope({answer("a", "yes")}, items), MissingTranscript);
    EXPECT_THROW(score_pope({answer("a", "yes"), answer("b", "no"), answer("a", "no")}, items), DataError);
}

TEST(Pope, RandomizedAgainstOracle) {
    SplitMix64 rng(11);
    const char* answers[] = {"Yes, I see it.", "No.", "I cannot tell."};
    for (int round = 0; round < 100; ++round) {
        const std::size_t n = 1 + rng.bounded(60);
        std::vector<EvalItem> items;
        std::vector<Transcript> ts;
        std::vector<std::string> gold, pred;
        for (std::size_t i = 0; i < n; ++i) {
            const bool g = rng.bounded(2);
            const auto a = rng.bounded(3);
            items.push_back(polar("i" + std::to_string(i), g ? Polar::Yes : Polar::No));
            ts.push_back(answer("i" + std::to_string(i), answers[a]));
            gold.push_back(g ? "yes" : "no");
            pred.push_back(a == 0 ? "yes" : a == 1 ? "no" : "");
        }
        const auto m = score_pope(ts, items);
        const auto o = testing::brute_pope(gold, pred);
        EXPECT_EQ(m.accuracy, o.accuracy);
        EXPECT_EQ(m.precision, o.precision);
        EXPECT_EQ(m.recall, o.recall);
        EXPECT_NEAR(m.f1, o.f1, 1e-15);
        EXPECT_EQ(m.yes_ratio, o.yes_ratio);
    }
}

TEST(Pope, MergeMatchesPooledScore) {
    std::vector<EvalItem> items;
    std::vector<Transcript> ts;
    for (int i = 0; i < 30; ++i) {
        items.push_back(polar("q" + std::to_string(i), i % 2 ? Polar::Yes : Polar::No));
        ts.push_back(answer("q" + std::to_string(i), i % 3 ? "yes" : "no"));
    }
    const std::vector<EvalItem> ia(items.begin(), items.begin() + 11), ib(items.begin() + 11, items.end());
    const std::vector<Transcript> ta(ts.begin(), ts.begin() + 11), tb(ts.begin() + 11, ts.end());
    const auto whole = score_pope(ts, items);
    const auto merged = merge(score_pope(ta, ia), score_pope(tb, ib));
    EXPECT_EQ(merged.accuracy, whole.accuracy);
    EXPECT_EQ(merged.precision, whole.precision);
    EXPECT_EQ(merged.recall, whole.recall);
    EXPECT_EQ(merged.f1, whole.f1);
    EXPECT_EQ(merged.per_item.size(), 30u);
}

Lexicon small_lexicon() {
    return Lexicon::from_entries({{"dog", "dog"},
                                  {"puppy", "dog"},
                                  {"hot dog", "hot dog"},
                                  {"cat", "cat"},
                                  {"frisbee", "frisbee"},
                                  {"person", "person"},
                                  {"man", "person"},
                                  {"dining table", "dining table"},
                                  {"table", "dining table"},
                                  {"bus", "bus"}});
}

TEST(Extract, LongestPhraseFirst) {
    const auto lex = small_lexicon();
    EXPECT_EQ(extract_objects("A man eats a hot dog.", lex), (std::set<CategoryId>{"hot dog", "person"}));
    EXPECT_EQ(extract_objects("Two dogs and a puppy", lex), (std::set<CategoryId>{"dog"}));
    EXPECT_EQ(extract_objects("buses near the dining tables", lex), (std::set<CategoryId>{"bus", "dining table"}));
    EXPECT_EQ(extract_objects("A dogma about catalogs", lex), std::set<CategoryId>{});
    EXPECT_EQ(extract_objects("", lex), std::set<CategoryId>{});
}

TEST(Chair, SingleCaptionExample) {
    const auto lex = small_lexicon();
    const std::vector<EvalItem> items{caption("c1", {"dog", "person"})};
    const auto m = score_chair({answer("c1", "A man throws a frisbee to his dog.")}, items, lex);
    EXPECT_DOUBLE_EQ(m.chair_i, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.chair_s, 1.0);
    EXPECT_EQ(m.per_caption[0].hallucinated, (std::set<CategoryId>{"frisbee"}));
}

TEST(Chair, ZeroMentionCaptionsAreExcluded) {
    const auto lex = small_lexicon();
    const std::vector<EvalItem> items{caption("a", {"dog"}), caption("b", {}), caption("c", {})};
    const auto m = score_chair({answer("a", "A dog."), answer("b", "A sunny day."), answer("c", "A cat.")}, items, lex);
    EXPECT_EQ(m.n_excluded, 1u);
    EXPECT_EQ(m.captions_with_mentions, 2u);
    EXPECT_DOUBLE_EQ(m.chair_s, 0.5);
    EXPECT_DOUBLE_EQ(m.chair_i, 0.5);
}

TEST(Chair, AgreesWithBruteForce) {
    const auto lex = small_lexicon();
    std::map<std::string, std::string> phrases(lex.synonyms().begin(), lex.synonyms().end());
    const std::vector<std::string> words{"a", "the", "dog", "dogs", "hot", "cat", "cats", "man", "men", "person",
                                         "table", "dining", "tables", "bus", "buses", "frisbee", "puppy", "red",
                                         "and", "with", "hotdog", "catalog"};
    SplitMix64 rng(5);
    for (int round = 0; round < 50; ++round) {
        std::vector<EvalItem> items;
        std::vector<Transcript> ts;
        std::vector<std::string> caps;
        std::vector<std::set<std::string>> golds;
        for (int c = 0; c < 8; ++c) {
            std::string text;
            const auto len = rng.bounded(12);
            for (std::uint64_t k = 0; k < len; ++k) text += words[rng.bounded(words.size())] + (rng.bounded(4) ? " " : ", ");
            std::set<CategoryId> gold;
            for (const auto& cat : lex.categories()) {
                if (rng.bounded(3) == 0) gold.insert(cat);
            }
            const std::string id = "c" + std::to_string(c);
            items.push_back(caption(id, gold));
            ts.push_back(answer(id, text));
            caps.push_back(text);
            golds.push_back(gold);
        }
        const auto m = score_chair(ts, items, lex);
        const auto o = testing::brute_chair(caps, golds, phrases);
        ASSERT_EQ(m.chair_i, o.chair_i) << round;
        ASSERT_EQ(m.chair_s, o.chair_s) << round;
        ASSERT_EQ(m.n_excluded, o.excluded) << round;
    }
}

TEST(Chair, FailedCaptionsMentionNothing) {
    const auto lex = small_lexicon();
    const std::vector<EvalItem> items{caption("a", {"dog"})};
    const auto m = score_chair({answer("a", "transport error", true)}, items, lex);
    EXPECT_EQ(m.n_failed, 1u);
    EXPECT_EQ(m.n_excluded, 1u);
}

TEST(Chair, MergeIsAssociative) {
    const auto lex = small_lexicon();
    const std::vector<EvalItem> items{caption("a", {"dog"}), caption("b", {"cat"}), caption("c", {})};
    const std::vector<Transcript> ts{answer("a", "a dog and a cat"), answer("b", "a cat"), answer("c", "a bus")};
    const auto s = [&](std::size_t i) { return score_chair({ts[i]}, {items[i]}, lex); };
    const auto left = merge(merge(s(0), s(1)), s(2));
    const auto right = merge(s(0), merge(s(1), s(2)));
    const auto whole = score_chair(ts, items, lex);
    EXPECT_EQ(left.chair_i, whole.chair_i);
    EXPECT_EQ(right.chair_i, whole.chair_i);
    EXPECT_EQ(left.chair_s, whole.chair_s);
    EXPECT_EQ(right.chair_s, whole.chair_s);
}

}  // namespace
}  // namespace pii
