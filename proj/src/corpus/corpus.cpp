// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/corpus.hpp"

#include "pii/errors.hpp"
#include "pii/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

extern const unsigned char pii_coco80_lexicon[];
extern const std::size_t pii_coco80_lexicon_size;

namespace pii {

using nlohmann::json;

std::string_view to_string(TaskKind t) { return t == TaskKind::PolarQuestion ? "polar" : "caption"; }
std::string_view to_string(Polar p) { return p == Polar::Yes ? "yes" : "no"; }

void EvalItem::validate() const {
    std::vector<std::string> problems;
    if (item_id.empty()) problems.push_back("empty item_id");
    if (task == TaskKind::PolarQuestion && (!question || !gold_polar)) {
        problems.push_back(item_id + ": polar question needs question and gold_polar");
    }
    if (task == TaskKind::Caption && !gold_categories) {
        problems.push_back(item_id + ": caption item needs gold_categories");
    }
    if (!problems.empty()) throw MalformedRecord(std::move(problems));
}

std::uint64_t SplitMix64::next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::uint64_t SplitMix64::bounded(std::uint64_t bound) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    for (;;) {
        const std::uint64_t r = next();
        if (r < limit) return r % bound;
    }
}

namespace {

std::optional<Polar> parse_label(std::string label) {
    std::transform(label.begin(), label.end(), label.begin(), [](unsigned char c) { return std::tolower(c); });
    if (label == "yes") return Polar::Yes;
    if (label == "no") return Polar::No;
    return std::nullopt;
}

const json* first_field(const json& rec, std::initializer_list<const char*> names) {
    for (const char* n : names) {
        if (auto it = rec.find(n); it != rec.end() && !it->is_null()) return &*it;
    }
    return nullptr;
}

std::string scalar_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    return v.dump();
}

}  // namespace

std::vector<EvalItem> load_pope(const std::filesystem::path& annotation_file, const std::filesystem::path& image_dir) {
    std::ifstream in(annotation_file);
    if (!in) throw DataError("cannot open POPE annotations " + annotation_file.string());

    std::vector<EvalItem> items;
    std::vector<std::string> malformed;
    std::vector<std::string> missing;
    std::unordered_set<std::string> ids;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "line " + std::to_string(lineno) + ": ";
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error& e) {
            malformed.push_back(where + "invalid JSON");
            continue;
        }
        if (!rec.is_object()) {
            malformed.push_back(where + "record is not an object");
            continue;
        }
        const json* image = first_field(rec, {"image", "image_path", "image_file"});
        const json* text = first_field(rec, {"text", "question"});
        const json* label = first_field(rec, {"label", "answer"});
        if (!image || !image->is_string()) {
            malformed.push_back(where + "missing image");
            continue;
        }
        if (!text || !text->is_string()) {
            malformed.push_back(where + "missing question text");
            continue;
        }
        if (!label || !label->is_string()) {
            malformed.push_back(where + "missing label");
            continue;
        }
        const auto polar = parse_label(label->get<std::string>());
        if (!polar) {
            malformed.push_back(where + "invalid label '" + label->get<std::string>() + "'");
            continue;
        }
        EvalItem item;
        const json* qid = first_field(rec, {"question_id", "id"});
        item.item_id = qid ? scalar_to_string(*qid) : "line-" + std::to_string(lineno);
        if (!ids.insert(item.item_id).second) {
            malformed.push_back(where + "duplicate item id '" + item.item_id + "'");
            continue;
        }
        item.image_path = image_dir / image->get<std::string>();
        item.task = TaskKind::PolarQuestion;
        item.question = text->get<std::string>();
        item.gold_polar = polar;
        if (!std::filesystem::exists(item.image_path)) missing.push_back(item.image_path.string());
        items.push_back(std::move(item));
    }
    if (!malformed.empty()) throw MalformedRecord(std::move(malformed));
    if (!missing.empty()) throw MissingImage(std::move(missing));
    return items;
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, std::uint64_t seed) {
    if (n > population) {
        throw SampleTooLarge("cannot sample " + std::to_string(n) + " of " + std::to_string(population) + " items");
    }
    std::vector<std::size_t> idx(population);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.bounded(population - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

std::vector<EvalItem> sample_items(const std::vector<EvalItem>& items, std::size_t n, std::uint64_t seed) {
    std::vector<EvalItem> out;
    out.reserve(n);
    for (std::size_t i : sample_indices(items.size(), n, seed)) out.push_back(items[i]);
    return out;
}

std::vector<EvalItem> load_coco_caption_task(const std::filesystem::path& image_dir,
                                             const std::filesystem::path& instances_file, std::size_t n,
                                             std::uint64_t seed) {
    std::ifstream in(instances_file);
    if (!in) throw DataError("cannot open COCO instances " + instances_file.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw MalformedRecord({instances_file.string() + ": " + e.what()});
    }
    if (!doc.is_object() || !doc.contains("images") || !doc.contains("categories") || !doc["images"].is_array()) {
        throw MalformedRecord({instances_file.string() + ": expected 'images' and 'categories' arrays"});
    }

    std::vector<std::string> malformed;
    std::unordered_map<long long, CategoryId> category_names;
    for (const auto& c : doc["categories"]) {
        if (!c.contains("id") || !c.contains("name")) {
            malformed.push_back("category without id/name");
            continue;
        }
        category_names[c["id"].get<long long>()] = normalize_text(c["name"].get<std::string>());
    }

    struct ImageRec {
        long long id;
        std::string file_name;
    };
    std::vector<ImageRec> images;
    for (std::size_t i = 0; i < doc["images"].size(); ++i) {
        const auto& im = doc["images"][i];
        if (!im.contains("id") || !im.contains("file_name")) {
            malformed.push_back("images[" + std::to_string(i) + "]: missing id or file_name");
            continue;
        }
        images.push_back({im["id"].get<long long>(), im["file_name"].get<std::string>()});
    }

    std::unordered_map<long long, std::set<CategoryId>> gold;
    if (doc.contains("annotations")) {
        for (std::size_t i = 0; i < doc["annotations"].size(); ++i) {
            const auto& a = doc["annotations"][i];
            if (!a.contains("image_id") || !a.contains("category_id")) {
                malformed.push_back("annotations[" + std::to_string(i) + "]: missing image_id or category_id");
                continue;
            }
            const auto cat = category_names.find(a["category_id"].get<long long>());
            if (cat == category_names.end()) {
                malformed.push_back("annotations[" + std::to_string(i) + "]: unknown category id");
                continue;
            }
            gold[a["image_id"].get<long long>()].insert(cat->second);
        }
    }
    if (!malformed.empty()) throw MalformedRecord(std::move(malformed));

    std::vector<EvalItem> items;
    std::vector<std::string> missing;
    for (std::size_t i : sample_indices(images.size(), n, seed)) {
        const auto& im = images[i];
        EvalItem item;
        item.item_id = "coco-" + std::to_string(im.id);
        item.image_path = image_dir / im.file_name;
        item.task = TaskKind::Caption;
        item.question = std::string(kCaptionPrompt);
        auto it = gold.find(im.id);
        item.gold_categories = it == gold.end() ? std::set<CategoryId>{} : it->second;
        if (!std::filesystem::exists(item.image_path)) missing.push_back(item.image_path.string());
        items.push_back(std::move(item));
    }
    if (!missing.empty()) throw MissingImage(std::move(missing));
    return items;
}

Lexicon Lexicon::from_entries(const std::vector<std::pair<std::string, std::string>>& entries) {
    Lexicon lex;
    std::set<CategoryId> declared;
    std::vector<std::pair<std::string, CategoryId>> norm;
    norm.reserve(entries.size());
    for (const auto& [phrase, category] : entries) {
        auto p = normalize_text(phrase);
        auto c = normalize_text(category);
        if (p.empty() || c.empty()) throw DataError("lexicon entry with empty phrase or category");
        if (p == c && declared.insert(c).second) lex.categories_.push_back(c);
        norm.emplace_back(std::move(p), std::move(c));
    }
    for (auto& [phrase, category] : norm) {
        if (!declared.contains(category)) {
            throw UnknownCategory("phrase '" + phrase + "' maps to undeclared category '" + category + "'");
        }
        auto [it, inserted] = lex.synonyms_.emplace(phrase, category);
        if (!inserted && it->second != category) {
            throw DuplicatePhrase("phrase '" + phrase + "' maps to both '" + it->second + "' and '" + category + "'");
        }
        lex.max_tokens_ = std::max(lex.max_tokens_, tokenize(phrase).size());
    }
    return lex;
}

Lexicon Lexicon::identity(const std::vector<std::string>& categories) {
    std::vector<std::pair<std::string, std::string>> entries;
    for (const auto& c : categories) entries.emplace_back(c, c);
    return from_entries(entries);
}

std::optional<CategoryId> Lexicon::lookup(std::string_view phrase) const {
    if (auto it = synonyms_.find(std::string(phrase)); it != synonyms_.end()) return it->second;
    return std::nullopt;
}

namespace {

Lexicon parse_lexicon(std::istream& in, const std::string& source) {
    std::vector<std::pair<std::string, std::string>> entries;
    std::vector<std::string> malformed;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line.front() == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) {
            malformed.push_back(source + " line " + std::to_string(lineno) + ": expected phrase<TAB>category");
            continue;
        }
        entries.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    if (!malformed.empty()) throw MalformedRecord(std::move(malformed));
    return Lexicon::from_entries(entries);
}

}  // namespace

Lexicon load_synonym_lexicon(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open lexicon " + file.string());
    return parse_lexicon(in, file.string());
}

Lexicon builtin_coco_lexicon() {
    std::istringstream in(std::string(reinterpret_cast<const char*>(pii_coco80_lexicon), pii_coco80_lexicon_size));
    return parse_lexicon(in, "builtin coco80 lexicon");
}

const std::vector<std::string>& coco_category_names() {
    static const std::vector<std::string> names = {
        "person",        "bicycle",      "car",           "motorcycle",    "airplane",     "bus",
        "train",         "truck",        "boat",          "traffic light", "fire hydrant", "stop sign",
        "parking meter", "bench",        "bird",          "cat",           "dog",          "horse",
        "sheep",         "cow",          "elephant",      "bear",          "zebra",        "giraffe",
        "backpack",      "umbrella",     "handbag",       "tie",           "suitcase",     "frisbee",
        "skis",          "snowboard",    "sports ball",   "kite",          "baseball bat", "baseball glove",
        "skateboard",    "surfboard",    "tennis racket", "bottle",        "wine glass",   "cup",
        "fork",          "knife",        "spoon",         "bowl",          "banana",       "apple",
        "sandwich",      "orange",       "broccoli",      "carrot",        "hot dog",      "pizza",
        "donut",         "cake",         "chair",         "couch",         "potted plant", "bed",
        "dining table",  "toilet",       "tv",            "laptop",        "mouse",        "remote",
        "keyboard",      "cell phone",   "microwave",     "oven",          "toaster",      "sink",
        "refrigerator",  "book",         "clock",         "vase",          "scissors",     "teddy bear",
        "hair drier",    "toothbrush"};
    return names;
}

namespace {

json item_to_json(const EvalItem& item) {
    json j;
    j["item_id"] = item.item_id;
    j["image_path"] = item.image_path.string();
    j["task"] = to_string(item.task);
    j["question"] = item.question ? json(*item.question) : json(nullptr);
    j["gold_polar"] = item.gold_polar ? json(to_string(*item.gold_polar)) : json(nullptr);
    if (item.gold_categories) {
        j["gold_categories"] = json::array();
        for (const auto& c : *item.gold_categories) j["gold_categories"].push_back(c);
    } else {
        j["gold_categories"] = nullptr;
    }
    return j;
}

EvalItem item_from_json(const json& j) {
    EvalItem item;
    item.item_id = j.at("item_id").get<std::string>();
    item.image_path = j.at("image_path").get<std::string>();
    const auto task = j.at("task").get<std::string>();
    if (task == "polar") {
        item.task = TaskKind::PolarQuestion;
    } else if (task == "caption") {
        item.task = TaskKind::Caption;
    } else {
        throw DataError("unknown task '" + task + "'");
    }
    if (j.contains("question") && !j["question"].is_null()) item.question = j["question"].get<std::string>();
    if (j.contains("gold_polar") && !j["gold_polar"].is_null()) {
        item.gold_polar = parse_label(j["gold_polar"].get<std::string>());
        if (!item.gold_polar) throw DataError("invalid gold_polar");
    }
    if (j.contains("gold_categories") && !j["gold_categories"].is_null()) {
        item.gold_categories = j["gold_categories"].get<std::set<CategoryId>>();
    }
    return item;
}

}  // namespace

void write_manifest(const std::vector<EvalItem>& items, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + path.string());
    for (const auto& item : items) out << item_to_json(item).dump() << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

std::vector<EvalItem> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    std::vector<EvalItem> items;
    std::vector<std::string> malformed;
    std::unordered_set<std::string> ids;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            auto item = item_from_json(json::parse(line));
            item.validate();
            if (!ids.insert(item.item_id).second) throw DataError("duplicate item id '" + item.item_id + "'");
            items.push_back(std::move(item));
        } catch (const std::exception& e) {
            malformed.push_back("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!malformed.empty()) throw MalformedRecord(std::move(malformed));
    return items;
}

}  // namespace pii
