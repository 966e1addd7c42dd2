// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/report.hpp"

#include "pii/errors.hpp"
#include "pii/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace pii {

using nlohmann::json;

double MetricReport::metric(const std::string& name) const {
    for (const auto& [k, v] : metrics) {
        if (k == name) return v;
    }
    throw DataError("report has no metric '" + name + "'");
}

MetricReport make_report(const PopeMetrics& m, std::string setting, std::string config_digest) {
    MetricReport r;
    r.kind = "pope";
    r.setting = std::move(setting);
    r.config_digest = std::move(config_digest);
    r.metrics = {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall},
                 {"f1", m.f1},             {"yes_ratio", m.yes_ratio}};
    json per_item = json::array();
    for (const auto& it : m.per_item) {
        per_item.push_back({{"item_id", it.item_id},
                            {"predicted", to_string(it.predicted)},
                            {"gold", to_string(it.gold)},
                            {"correct", it.correct},
                            {"failed", it.failed}});
    }
    r.detail = {{"n_total", m.n_total}, {"n_abstain", m.n_abstain}, {"n_failed", m.n_failed},
                {"tp", m.tp},           {"fp", m.fp},               {"tn", m.tn},
                {"fn", m.fn},           {"per_item", std::move(per_item)}};
    return r;
}

MetricReport make_report(const ChairMetrics& m, std::string setting, std::string config_digest) {
    MetricReport r;
    r.kind = "chair";
    r.setting = std::move(setting);
    r.config_digest = std::move(config_digest);
    r.metrics = {{"chair_s", m.chair_s}, {"chair_i", m.chair_i}};
    json per_caption = json::array();
    for (const auto& c : m.per_caption) {
        per_caption.push_back({{"item_id", c.item_id},
                               {"mentioned", c.mentioned},
                               {"hallucinated", c.hallucinated},
                               {"failed", c.failed}});
    }
    r.detail = {{"n_captions", m.n_captions},
                {"n_excluded", m.n_excluded},
                {"n_failed", m.n_failed},
                {"mentioned_total", m.mentioned_total},
                {"hallucinated_total", m.hallucinated_total},
                {"captions_with_mentions", m.captions_with_mentions},
                {"captions_with_hallucination", m.captions_with_hallucination},
                {"per_caption", std::move(per_caption)}};
    return r;
}

json to_json(const MetricReport& r) {
    json metrics = json::array();
    for (const auto& [k, v] : r.metrics) metrics.push_back({{"name", k}, {"value", v}});
    return {{"kind", r.kind},
            {"setting", r.setting},
            {"config_digest", r.config_digest},
            {"metrics", metrics},
            {"detail", r.detail}};
}

MetricReport metric_report_from_json(const json& j) {
    MetricReport r;
    r.kind = j.at("kind").get<std::string>();
    r.setting = j.at("setting").get<std::string>();
    r.config_digest = j.value("config_digest", "");
    for (const auto& m : j.at("metrics")) r.metrics.emplace_back(m.at("name").get<std::string>(), m.at("value").get<double>());
    r.detail = j.value("detail", json::object());
    return r;
}

void write_metric_report(const MetricReport& r, const std::filesystem::path& path) {
    write_text_file(path, to_json(r).dump(2) + "\n");
}

MetricReport read_metric_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report " + path.string());
    try {
        return metric_report_from_json(json::parse(in));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

ComparisonTable aggregate(const std::vector<MetricReport>& reports, const std::string& baseline) {
    const MetricReport* base = nullptr;
    for (const auto& r : reports) {
        if (r.setting == baseline) {
            base = &r;
            break;
        }
    }
    if (!base) throw MissingBaseline("no report for baseline setting '" + baseline + "'");

    ComparisonTable t;
    t.baseline_setting = baseline;
    for (const auto& [name, _] : base->metrics) t.metric_names.push_back(name);
    std::set<std::string> seen;
    for (const auto& r : reports) {
        if (r.kind != base->kind) throw DataError("cannot compare '" + r.kind + "' with '" + base->kind + "' reports");
        if (!seen.insert(r.setting).second) throw DataError("setting '" + r.setting + "' appears twice");
        ComparisonTable::Row row{r.setting, {}};
        for (const auto& name : t.metric_names) {
            const double v = r.metric(name);
            row.metrics[name] = v;
            t.deltas[r.setting][name] = v - base->metric(name);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

bool is_percent_metric(std::string_view metric) {
    return metric == "accuracy" || metric == "chair_s" || metric == "chair_i";
}

namespace {

std::string printf_str(const char* fmt, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, v);
    return buf;
}

std::string number_cell(double v) { return printf_str("%.17g", v); }

std::string quote(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string metric_heading(std::string_view m) {
    if (m == "accuracy") return "Acc. (%)";
    if (m == "precision") return "Precision";
    if (m == "recall") return "Recall";
    if (m == "f1") return "F1";
    if (m == "yes_ratio") return "Yes Ratio";
    if (m == "chair_s") return "CHAIRs (%)";
    if (m == "chair_i") return "CHAIRi (%)";
    return std::string(m);
}

}  // namespace

std::string format_value(std::string_view metric, double value) {
    return is_percent_metric(metric) ? printf_str("%.1f", value * 100.0) : printf_str("%.2f", value);
}

std::string format_delta(std::string_view metric, double delta) {
    const bool pct = is_percent_metric(metric);
    const double shown = pct ? delta * 100.0 : delta;
    const std::string body = printf_str(pct ? "%.1f" : "%.2f", std::abs(shown));
    if (body == printf_str(pct ? "%.1f" : "%.2f", 0.0)) return "±" + body;
    return (shown > 0 ? "+" : "-") + body;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvWriter::add_row(std::vector<CsvCell> row) {
    if (row.size() != header_.size()) throw DataError("CSV row width does not match header");
    rows_.push_back(std::move(row));
}

std::string CsvWriter::str() const {
    std::string out;
    for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + quote(header_[i]);
    out += "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            std::visit(
                [&](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, std::string>) {
                        out += quote(v);
                    } else if constexpr (std::is_same_v<T, double>) {
                        out += number_cell(v);
                    } else {
                        out += std::to_string(v);
                    }
                },
                row[i]);
        }
        out += "\n";
    }
    return out;
}

void CsvWriter::write(const std::filesystem::path& path) const { write_text_file(path, str()); }

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(cell));
            cell.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            cell.push_back(c);
            any = true;
        }
    }
    if (in_quotes) throw DataError("unterminated quoted CSV field");
    if (any) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string table_to_csv(const ComparisonTable& t) {
    std::vector<std::string> header{"setting"};
    for (const auto& m : t.metric_names) header.push_back(m);
    for (const auto& m : t.metric_names) header.push_back("delta_" + m);
    header.push_back("is_baseline");
    CsvWriter w(header);
    for (const auto& row : t.rows) {
        std::vector<CsvCell> cells{row.setting};
        for (const auto& m : t.metric_names) cells.emplace_back(row.metrics.at(m));
        for (const auto& m : t.metric_names) cells.emplace_back(t.deltas.at(row.setting).at(m));
        cells.emplace_back(static_cast<long long>(row.setting == t.baseline_setting));
        w.add_row(std::move(cells));
    }
    return w.str();
}

ComparisonTable table_from_csv(std::string_view csv) {
    const auto rows = parse_csv(csv);
    if (rows.empty() || rows[0].empty() || rows[0][0] != "setting") throw DataError("not a comparison table CSV");
    const auto& header = rows[0];
    ComparisonTable t;
    if (header.size() < 2 || header.back() != "is_baseline" || (header.size() - 2) % 2 != 0) {
        throw DataError("unexpected comparison table header");
    }
    const std::size_t n = (header.size() - 2) / 2;
    for (std::size_t i = 0; i < n; ++i) t.metric_names.push_back(header[1 + i]);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& cells = rows[r];
        if (cells.size() != header.size()) throw DataError("CSV row " + std::to_string(r) + " has wrong width");
        ComparisonTable::Row row{cells[0], {}};
        for (std::size_t i = 0; i < n; ++i) {
            row.metrics[t.metric_names[i]] = std::stod(cells[1 + i]);
            t.deltas[row.setting][t.metric_names[i]] = std::stod(cells[1 + n + i]);
        }
        if (cells.back() == "1") t.baseline_setting = row.setting;
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string table_to_markdown(const ComparisonTable& t) {
    std::ostringstream out;
    out << "| Setting |";
    for (const auto& m : t.metric_names) out << ' ' << metric_heading(m) << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < t.metric_names.size(); ++i) out << "---|";
    out << "\n";
    for (const auto& row : t.rows) {
        const bool is_base = row.setting == t.baseline_setting;
        out << "| " << row.setting << (is_base ? " (baseline)" : "") << " |";
        for (const auto& m : t.metric_names) {
            out << ' ' << format_value(m, row.metrics.at(m));
            if (!is_base && is_percent_metric(m)) out << " (" << format_delta(m, t.deltas.at(row.setting).at(m)) << ")";
            out << " |";
        }
        out << "\n";
    }
    return out.str();
}

void emit(const ComparisonTable& t, EmitFormat format, const std::filesystem::path& path) {
    write_text_file(path, format == EmitFormat::Csv ? table_to_csv(t) : table_to_markdown(t));
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace pii
