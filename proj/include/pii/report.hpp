// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "json.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pii {

struct PopeMetrics;
struct ChairMetrics;

/// Scored outcome of one run, as written by `pii score`.
struct MetricReport {
    std::string kind;  // "pope" or "chair"
    std::string setting;  // condition name of the run
    std::string config_digest;
    /// Metric name -> value. Rates are ratios in [0, 1].
    std::vector<std::pair<std::string, double>> metrics;
    nlohmann::json detail;  // per-item / per-caption records and counts

    double metric(const std::string& name) const;
};

MetricReport make_report(const PopeMetrics& m, std::string setting, std::string config_digest);
MetricReport make_report(const ChairMetrics& m, std::string setting, std::string config_digest);
nlohmann::json to_json(const MetricReport& r);
MetricReport metric_report_from_json(const nlohmann::json& j);
void write_metric_report(const MetricReport& r, const std::filesystem::path& path);
MetricReport read_metric_report(const std::filesystem::path& path);

struct ComparisonTable {
    struct Row {
        std::string setting;
        std::map<std::string, double> metrics;
        friend bool operator==(const Row&, const Row&) = default;
    };
    std::vector<std::string> metric_names;
    std::vector<Row> rows;
    std::string baseline_setting;
    /// setting -> metric -> value minus the baseline's value.
    std::map<std::string, std::map<std::string, double>> deltas;

    friend bool operator==(const ComparisonTable&, const ComparisonTable&) = default;
};

/// Rows follow the input order; throws MissingBaseline when no report has `baseline` as setting.
ComparisonTable aggregate(const std::vector<MetricReport>& reports, const std::string& baseline);

/// True for metrics shown in percent (accuracy, CHAIR rates).
bool is_percent_metric(std::string_view metric);
/// "80.2" for percent metrics, "0.76" otherwise.
std::string format_value(std::string_view metric, double value);
/// "+4.1" / "-7.6" / "±0.0" in percentage points for percent metrics, "+0.05" style otherwise.
std::string format_delta(std::string_view metric, double delta);

// RFC-4180-style CSV: comma separated, string cells always quoted, LF line endings.
using CsvCell = std::variant<std::string, double, long long>;

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void add_row(std::vector<CsvCell> row);
    std::string str() const;
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::string> header_;
    std::vector<std::vector<CsvCell>> rows_;
};

std::vector<std::vector<std::string>> parse_csv(std::string_view text);

std::string table_to_csv(const ComparisonTable& t);
ComparisonTable table_from_csv(std::string_view csv);
std::string table_to_markdown(const ComparisonTable& t);

enum class EmitFormat { Csv, Markdown };
void emit(const ComparisonTable& t, EmitFormat format, const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace pii
