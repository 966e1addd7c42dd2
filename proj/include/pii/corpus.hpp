// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace pii {

inline constexpr std::string_view kCaptionPrompt = "Describe this image in detail.";

enum class TaskKind { PolarQuestion, Caption };
enum class Polar { Yes, No };

std::string_view to_string(TaskKind t);
std::string_view to_string(Polar p);

/// Category identifiers are canonical (normalized) COCO category names, e.g. "dog", "hot dog".
using CategoryId = std::string;

struct EvalItem {
    std::string item_id;
    std::filesystem::path image_path;
    TaskKind task = TaskKind::PolarQuestion;
    std::optional<std::string> question;
    std::optional<Polar> gold_polar;
    std::optional<std::set<CategoryId>> gold_categories;

    /// Throws MalformedRecord when the task-specific fields are missing.
    void validate() const;
    friend bool operator==(const EvalItem&, const EvalItem&) = default;
};

/// SplitMix64: 64-bit state, output = mix(state += 0x9E3779B97F4A7C15).
/// Used for every seeded choice in the toolkit so samples are identical on every platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next();
    /// Unbiased integer in [0, bound) by rejection sampling. bound must be > 0.
    std::uint64_t bounded(std::uint64_t bound);

private:
    std::uint64_t state_;
};

/// Line-delimited POPE records: {"question_id", "image", "text", "label"}.
/// Aliases: question for text, answer for label, image_path / image_file for image.
std::vector<EvalItem> load_pope(const std::filesystem::path& annotation_file, const std::filesystem::path& image_dir);

/// Uniform sample without replacement (partial Fisher-Yates driven by SplitMix64), returned in original order.
std::vector<EvalItem> sample_items(const std::vector<EvalItem>& items, std::size_t n, std::uint64_t seed);
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed);

/// Samples `n` images of a COCO instances file and turns each into a Caption item.
/// Images without instance annotations are kept with an empty gold set.
std::vector<EvalItem> load_coco_caption_task(const std::filesystem::path& image_dir,
                                             const std::filesystem::path& instances_file, std::size_t n,
                                             std::uint64_t seed);

/// Phrase -> category map used by CHAIR. Phrases are normalized; every category maps to itself.
class Lexicon {
public:
    /// Builds and validates a lexicon from (phrase, category) pairs. A category is declared by its
    /// identity entry; a phrase pointing at an undeclared category throws UnknownCategory, a phrase
    /// bound to two categories throws DuplicatePhrase.
    static Lexicon from_entries(const std::vector<std::pair<std::string, std::string>>& entries);
    /// Identity lexicon over `categories`.
    static Lexicon identity(const std::vector<std::string>& categories);

    const std::vector<CategoryId>& categories() const noexcept { return categories_; }
    const std::map<std::string, CategoryId>& synonyms() const noexcept { return synonyms_; }
    std::optional<CategoryId> lookup(std::string_view phrase) const;
    std::size_t max_phrase_tokens() const noexcept { return max_tokens_; }

private:
    std::vector<CategoryId> categories_;
    std::map<std::string, CategoryId> synonyms_;
    std::size_t max_tokens_ = 0;
};

/// Plain-text `phrase<TAB>category` file; blank lines and `#` comments are skipped.
Lexicon load_synonym_lexicon(const std::filesystem::path& file);
/// The lexicon shipped with the library (80 COCO categories plus common synonyms).
Lexicon builtin_coco_lexicon();
/// The 80 COCO category names in id order.
const std::vector<std::string>& coco_category_names();

/// Items manifest: one JSON object per line.
void write_manifest(const std::vector<EvalItem>& items, const std::filesystem::path& path);
std::vector<EvalItem> read_manifest(const std::filesystem::path& path);

}  // namespace pii
