// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/corpus.hpp"
#include "pii/errors.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace pii {
namespace {

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() / ("pii_corpus_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                             "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    fs::path write(const std::string& name, const std::string& content) const {
        std::ofstream(path_ / name) << content;
        return path_ / name;
    }

private:
    fs::path path_;
};

TEST(SplitMix64, ReferenceOutput) {
    SplitMix64 rng(0);
    EXPECT_EQ(rng.next(), 0xE220A8397B1DCDAFULL);
}

TEST(SplitMix64, BoundedStaysInRange) {
    SplitMix64 rng(3);
    for (std::uint64_t bound : {1ULL, 2ULL, 3ULL, 7ULL, 1000ULL, (1ULL << 63) + 5}) {
        for (int i = 0; i < 200; ++i) EXPECT_LT(rng.bounded(bound), bound);
    }
}

TEST(Sampling, MatchesReferenceSequence) {
    // Values from an independent SplitMix64 + partial Fisher-Yates implementation.
    const std::vector<std::size_t> want{158, 201, 212, 285, 487, 580, 720, 727, 813, 842};
    EXPECT_EQ(sample_indices(1000, 10, 7), want);
    const std::vector<std::size_t> want2{144, 291, 1051, 1057, 2370};
    EXPECT_EQ(sample_indices(3000, 5, 2026), want2);
}

TEST(Sampling, Properties) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto idx = sample_indices(500, 37, seed);
        ASSERT_EQ(idx.size(), 37u);
        EXPECT_TRUE(std::is_sorted(idx.begin(), idx.end()));
        EXPECT_EQ(std::adjacent_find(idx.begin(), idx.end()), idx.end());
        EXPECT_LT(idx.back(), 500u);
        EXPECT_EQ(sample_indices(500, 37, seed), idx);
    }
    const auto all = sample_indices(12, 12, 99);
    for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(all[i], i);
    EXPECT_TRUE(sample_indices(0, 0, 1).empty());
    EXPECT_THROW(sample_indices(3, 4, 1), SampleTooLarge);
}

TEST(Sampling, SampleItemsKeepsOriginalOrder) {
    std::vector<EvalItem> items(1000);
    for (std::size_t i = 0; i < items.size(); ++i) items[i].item_id = "q" + std::to_string(i);
    const auto a = sample_items(items, 10, 7);
    const auto b = sample_items(items, 10, 7);
    ASSERT_EQ(a.size(), 10u);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.front().item_id, "q158");
    EXPECT_EQ(sample_items(items, items.size(), 5), items);
}

TEST(Pope, LoadsRecordsInOrder) {
    TempDir dir;
    dir.write("a.jpg", "x");
    dir.write("b.jpg", "x");
    const auto ann = dir.write("pope.jsonl",
                               R"({"question_id": 1, "image": "a.jpg", "text": "Is there a dog in the image?", "label": "no"})"
                               "\n"
                               R"({"question_id": 2, "image": "b.jpg", "text": "Is there a cat in the image?", "label": "YES"})"
                               "\n\n"
                               R"({"image_path": "a.jpg", "question": "Is there a car?", "answer": "No"})"
                               "\n");
    const auto items = load_pope(ann, dir.path());
    ASSERT_EQ(items.size(), 3u);
    EXPECT_EQ(items[0].item_id, "1");
    EXPECT_EQ(items[0].gold_polar, Polar::No);
    EXPECT_EQ(items[0].question, "Is there a dog in the image?");
    EXPECT_EQ(items[0].image_path, dir.path() / "a.jpg");
    EXPECT_EQ(items[0].task, TaskKind::PolarQuestion);
    EXPECT_EQ(items[1].gold_polar, Polar::Yes);
    EXPECT_EQ(items[2].item_id, "line-4");
    EXPECT_EQ(items[2].question, "Is there a car?");
}

TEST(Pope, ReportsEveryBadLine) {
    TempDir dir;
    dir.write("a.jpg", "x");
    const auto ann = dir.write("pope.jsonl",
                               R"({"question_id": 1, "image": "a.jpg", "text": "q", "label": "maybe"})"
                               "\n"
                               "not json\n"
                               R"({"question_id": 3, "image": "a.jpg", "label": "yes"})"
                               "\n"
                               R"({"question_id": 4, "image": "a.jpg", "text": "q", "label": "yes"})"
                               "\n");
    try {
        load_pope(ann, dir.path());
        FAIL() << "expected MalformedRecord";
    } catch (const MalformedRecord& e) {
        ASSERT_EQ(e.problems().size(), 3u);
        EXPECT_NE(e.problems()[0].find("line 1"), std::string::npos);
        EXPECT_NE(e.problems()[1].find("line 2"), std::string::npos);
        EXPECT_NE(e.problems()[2].find("line 3"), std::string::npos);
    }
}

TEST(Pope, MissingImagesAreListed) {
    TempDir dir;
    const auto ann = dir.write("pope.jsonl",
                               R"({"question_id": 1, "image": "gone.jpg", "text": "q", "label": "yes"})"
                               "\n"
                               R"({"question_id": 2, "image": "gone2.jpg", "text": "q", "label": "no"})"
                               "\n");
    try {
        load_pope(ann, dir.path());
        FAIL() << "expected MissingImage";
    } catch (const MissingImage& e) {
        EXPECT_EQ(e.problems().size(), 2u);
    }
}

TEST(Pope, DuplicateIdsAreMalformed) {
    TempDir dir;
    dir.write("a.jpg", "x");
    const auto ann = dir.write("pope.jsonl",
                               R"({"question_id": 1, "image": "a.jpg", "text": "q", "label": "yes"})"
                               "\n"
                               R"({"question_id": 1, "image": "a.jpg", "text": "q", "label": "no"})"
                               "\n");
    EXPECT_THROW(load_pope(ann, dir.path()), MalformedRecord);
}

TEST(Coco, CaptionItemsFromInstances) {
    TempDir dir;
    for (int i = 1; i <= 4; ++i) dir.write("img" + std::to_string(i) + ".jpg", "x");
    const auto inst = dir.write("instances.json", R"({
      "images": [{"id": 1, "file_name": "img1.jpg"}, {"id": 2, "file_name": "img2.jpg"},
                 {"id": 3, "file_name": "img3.jpg"}, {"id": 4, "file_name": "img4.jpg"}],
      "categories": [{"id": 1, "name": "person"}, {"id": 18, "name": "dog"}, {"id": 34, "name": "frisbee"},
                     {"id": 58, "name": "hot dog"}],
      "annotations": [{"image_id": 1, "category_id": 1}, {"image_id": 1, "category_id": 18},
                      {"image_id": 1, "category_id": 34}, {"image_id": 1, "category_id": 18},
                      {"image_id": 2, "category_id": 58}]
    })");
    const auto items = load_coco_caption_task(dir.path(), inst, 4, 1);
    ASSERT_EQ(items.size(), 4u);
    EXPECT_EQ(items[0].item_id, "coco-1");
    EXPECT_EQ(items[0].task, TaskKind::Caption);
    EXPECT_EQ(items[0].question, std::string(kCaptionPrompt));
    EXPECT_EQ(items[0].gold_categories, (std::set<CategoryId>{"dog", "frisbee", "person"}));
    EXPECT_EQ(items[1].gold_categories, (std::set<CategoryId>{"hot dog"}));
    EXPECT_TRUE(items[2].gold_categories->empty());
    EXPECT_EQ(load_coco_caption_task(dir.path(), inst, 2, 9).size(), 2u);
    EXPECT_THROW(load_coco_caption_task(dir.path(), inst, 5, 9), SampleTooLarge);
}

TEST(Lexicon, SynonymsCollapse) {
    const auto lex = Lexicon::from_entries({{"dog", "dog"}, {"puppy", "dog"}, {"hot dog", "hot dog"}});
    EXPECT_EQ(lex.lookup("puppy"), "dog");
    EXPECT_EQ(lex.lookup("dog"), "dog");
    EXPECT_EQ(lex.lookup("hot dog"), "hot dog");
    EXPECT_EQ(lex.lookup("cat"), std::nullopt);
    EXPECT_EQ(lex.max_phrase_tokens(), 2u);
    EXPECT_EQ(lex.categories().size(), 2u);
}

TEST(Lexicon, PhrasesAreNormalized) {
    const auto lex = Lexicon::from_entries({{"Hot-Dog", "hot dog"}, {"hot dog", "hot dog"}});
    EXPECT_EQ(lex.lookup("hot dog"), "hot dog");
}

TEST(Lexicon, Errors) {
    EXPECT_THROW(Lexicon::from_entries({{"dog", "dog"}, {"puppy", "cat"}}), UnknownCategory);
    EXPECT_THROW(Lexicon::from_entries({{"dog", "dog"}, {"cat", "cat"}, {"pet", "dog"}, {"pet", "cat"}}),
                 DuplicatePhrase);
}

TEST(Lexicon, FileFormat) {
    TempDir dir;
    const auto f = dir.write("lex.tsv", "# comment\ndog\tdog\n\npuppy\tdog\ncat\tcat\n");
    const auto lex = load_synonym_lexicon(f);
    EXPECT_EQ(lex.lookup("puppy"), "dog");
    const auto bad = dir.write("bad.tsv", "dog dog\n");
    EXPECT_THROW(load_synonym_lexicon(bad), DataError);
}

TEST(Lexicon, BuiltinCoversCoco) {
    const auto lex = builtin_coco_lexicon();
    EXPECT_EQ(coco_category_names().size(), 80u);
    EXPECT_EQ(lex.categories().size(), 80u);
    for (const auto& c : coco_category_names()) EXPECT_EQ(lex.lookup(c), c) << c;
    EXPECT_EQ(lex.lookup("puppy"), "dog");
    EXPECT_EQ(lex.lookup("hot dog"), "hot dog");
}

TEST(Manifest, RoundTrip) {
    TempDir dir;
    std::vector<EvalItem> items(2);
    items[0] = {"q1", "/img/a.jpg", TaskKind::PolarQuestion, "Is there a dog?", Polar::Yes, std::nullopt};
    items[1] = {"coco-9", "/img/b.jpg", TaskKind::Caption, std::string(kCaptionPrompt), std::nullopt,
                std::set<CategoryId>{"dog", "hot dog"}};
    write_manifest(items, dir.path() / "m.jsonl");
    EXPECT_EQ(read_manifest(dir.path() / "m.jsonl"), items);
}

TEST(EvalItem, Validate) {
    EvalItem polar{"x", "a.jpg", TaskKind::PolarQuestion, std::nullopt, Polar::No, std::nullopt};
    EXPECT_THROW(polar.validate(), MalformedRecord);
    EvalItem caption{"y", "a.jpg", TaskKind::Caption, std::nullopt, std::nullopt, std::nullopt};
    EXPECT_THROW(caption.validate(), MalformedRecord);
    caption.gold_categories = std::set<CategoryId>{};
    EXPECT_NO_THROW(caption.validate());
}

}  // namespace
}  // namespace pii
