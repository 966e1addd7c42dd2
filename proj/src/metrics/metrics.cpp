// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/metrics.hpp"

#include "pii/errors.hpp"
#include "pii/text.hpp"

#include <algorithm>
#include <map>

namespace pii {

std::string_view to_string(PolarAnswer a) {
    switch (a) {
        case PolarAnswer::Yes: return "yes";
        case PolarAnswer::No: return "no";
        case PolarAnswer::Abstain: return "abstain";
    }
    return "abstain";
}

PolarAnswer parse_polar_answer(std::string_view text) {
    for (const auto& tok : tokenize(text)) {
        if (tok == "yes") return PolarAnswer::Yes;
        if (tok == "no") return PolarAnswer::No;
    }
    return PolarAnswer::Abstain;
}

namespace {

std::map<std::string, const Transcript*> index_transcripts(const std::vector<Transcript>& transcripts) {
    std::map<std::string, const Transcript*> by_id;
    std::vector<std::string> dupes;
    for (const auto& t : transcripts) {
        if (!by_id.emplace(t.item_id, &t).second) dupes.push_back(t.item_id);
    }
    if (!dupes.empty()) throw MultiDataError("more than one transcript per item", std::move(dupes));
    return by_id;
}

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

void finish(PopeMetrics& m) {
    m.accuracy = ratio(m.tp + m.tn, m.n_total);
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn);
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.yes_ratio = ratio(m.tp + m.fp, m.n_total);
}

void finish(ChairMetrics& m) {
    m.chair_i = ratio(m.hallucinated_total, m.mentioned_total);
    m.chair_s = ratio(m.captions_with_hallucination, m.captions_with_mentions);
}

}  // namespace

PopeMetrics score_pope(const std::vector<Transcript>& transcripts, const std::vector<EvalItem>& items) {
    const auto by_id = index_transcripts(transcripts);
    std::vector<std::string> missing;
    for (const auto& item : items) {
        if (!by_id.contains(item.item_id)) missing.push_back(item.item_id);
    }
    if (!missing.empty()) throw MissingTranscript(std::move(missing));

    PopeMetrics m;
    m.per_item.reserve(items.size());
    for (const auto& item : items) {
        if (!item.gold_polar) throw DataError("item " + item.item_id + " has no gold polar label");
        const Transcript& t = *by_id.at(item.item_id);
        PopeItemResult r;
        r.item_id = item.item_id;
        r.gold = *item.gold_polar;
        r.failed = t.status == TranscriptStatus::Failed;
        r.predicted = r.failed ? PolarAnswer::Abstain : parse_polar_answer(t.raw_response);
        const bool gold_yes = r.gold == Polar::Yes;
        // A gold-No abstention is wrong but not a yes-prediction, so it lands in no cell.
        switch (r.predicted) {
            case PolarAnswer::Yes: gold_yes ? ++m.tp : ++m.fp; break;
            case PolarAnswer::No: gold_yes ? ++m.fn : ++m.tn; break;
            case PolarAnswer::Abstain:
                ++m.n_abstain;
                if (gold_yes) ++m.fn;
                break;
        }
        r.correct = (r.predicted == PolarAnswer::Yes && gold_yes) || (r.predicted == PolarAnswer::No && !gold_yes);
        m.n_failed += r.failed ? 1 : 0;
        m.per_item.push_back(std::move(r));
    }
    m.n_total = items.size();
    finish(m);
    return m;
}

PopeMetrics merge(const PopeMetrics& a, const PopeMetrics& b) {
    PopeMetrics m;
    m.n_total = a.n_total + b.n_total;
    m.n_abstain = a.n_abstain + b.n_abstain;
    m.n_failed = a.n_failed + b.n_failed;
    m.tp = a.tp + b.tp;
    m.fp = a.fp + b.fp;
    m.tn = a.tn + b.tn;
    m.fn = a.fn + b.fn;
    m.per_item = a.per_item;
    m.per_item.insert(m.per_item.end(), b.per_item.begin(), b.per_item.end());
    finish(m);
    return m;
}

std::set<CategoryId> extract_objects(std::string_view caption, const Lexicon& lex) {
    const auto tokens = tokenize(caption);
    std::set<CategoryId> found;
    const std::size_t max_len = lex.max_phrase_tokens();

    auto variants = [](const std::string& tok) {
        std::vector<std::string> v{tok};
        if (tok.size() > 1 && tok.back() == 's') v.push_back(tok.substr(0, tok.size() - 1));
        if (tok.size() > 2 && tok.ends_with("es")) v.push_back(tok.substr(0, tok.size() - 2));
        return v;
    };

    // Tries every singularization of tokens[pos, pos+len) against the lexicon.
    auto match = [&](std::size_t pos, std::size_t len) -> std::optional<CategoryId> {
        std::vector<std::vector<std::string>> options;
        options.reserve(len);
        for (std::size_t k = 0; k < len; ++k) options.push_back(variants(tokens[pos + k]));
        std::vector<std::size_t> choice(len, 0);
        for (;;) {
            std::string phrase;
            for (std::size_t k = 0; k < len; ++k) {
                if (k) phrase.push_back(' ');
                phrase += options[k][choice[k]];
            }
            if (auto cat = lex.lookup(phrase)) return cat;
            std::size_t k = len;
            while (k > 0) {
                --k;
                if (++choice[k] < options[k].size()) break;
                choice[k] = 0;
                if (k == 0) return std::nullopt;
            }
        }
    };

    for (std::size_t i = 0; i < tokens.size();) {
        std::size_t consumed = 1;
        for (std::size_t len = std::min(max_len, tokens.size() - i); len >= 1; --len) {
            if (auto cat = match(i, len)) {
                found.insert(*cat);
                consumed = len;
                break;
            }
        }
        i += consumed;
    }
    return found;
}

ChairMetrics score_chair(const std::vector<Transcript>& transcripts, const std::vector<EvalItem>& items,
                         const Lexicon& lex) {
    const auto by_id = index_transcripts(transcripts);
    std::vector<std::string> missing;
    for (const auto& item : items) {
        if (!by_id.contains(item.item_id)) missing.push_back(item.item_id);
    }
    if (!missing.empty()) throw MissingTranscript(std::move(missing));

    ChairMetrics m;
    m.per_caption.reserve(items.size());
    for (const auto& item : items) {
        if (!item.gold_categories) throw DataError("item " + item.item_id + " has no gold categories");
        const Transcript& t = *by_id.at(item.item_id);
        CaptionResult r;
        r.item_id = item.item_id;
        r.failed = t.status == TranscriptStatus::Failed;
        if (!r.failed) r.mentioned = extract_objects(t.raw_response, lex);
        std::set_difference(r.mentioned.begin(), r.mentioned.end(), item.gold_categories->begin(),
                            item.gold_categories->end(), std::inserter(r.hallucinated, r.hallucinated.end()));
        ++m.n_captions;
        m.n_failed += r.failed ? 1 : 0;
        if (r.mentioned.empty()) {
            ++m.n_excluded;
        } else {
            ++m.captions_with_mentions;
            m.mentioned_total += r.mentioned.size();
            m.hallucinated_total += r.hallucinated.size();
            if (!r.hallucinated.empty()) ++m.captions_with_hallucination;
        }
        m.per_caption.push_back(std::move(r));
    }
    finish(m);
    return m;
}

ChairMetrics merge(const ChairMetrics& a, const ChairMetrics& b) {
    ChairMetrics m;
    m.n_captions = a.n_captions + b.n_captions;
    m.n_excluded = a.n_excluded + b.n_excluded;
    m.n_failed = a.n_failed + b.n_failed;
    m.mentioned_total = a.mentioned_total + b.mentioned_total;
    m.hallucinated_total = a.hallucinated_total + b.hallucinated_total;
    m.captions_with_mentions = a.captions_with_mentions + b.captions_with_mentions;
    m.captions_with_hallucination = a.captions_with_hallucination + b.captions_with_hallucination;
    m.per_caption = a.per_caption;
    m.per_caption.insert(m.per_caption.end(), b.per_caption.begin(), b.per_caption.end());
    finish(m);
    return m;
}

}  // namespace pii
