// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/errors.hpp"
#include "pii/metrics.hpp"
#include "pii/report.hpp"
#include "pii/svg.hpp"

#include <gtest/gtest.h>

#include <filesystem>

namespace fs = std::filesystem;

namespace pii {
namespace {

MetricReport pope(const std::string& setting, double acc, double f1, double yes) {
    MetricReport r;
    r.kind = "pope";
    r.setting = setting;
    r.config_digest = "digest-" + setting;
    r.metrics = {{"accuracy", acc}, {"f1", f1}, {"yes_ratio", yes}};
    return r;
}

MetricReport chair(const std::string& setting, double s, double i) {
    MetricReport r;
    r.kind = "chair";
    r.setting = setting;
    r.metrics = {{"chair_s", s}, {"chair_i", i}};
    return r;
}

std::vector<MetricReport> four_settings() {
    return {pope("baseline", 0.802, 0.76, 0.32), pope("control", 0.805, 0.77, 0.33), pope("hybrid", 0.830, 0.81, 0.38),
            pope("pii", 0.843, 0.82, 0.38)};
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

TEST(Aggregate, AccuracyDelta) {
    const auto t = aggregate(four_settings(), "baseline");
    EXPECT_EQ(format_delta("accuracy", t.deltas.at("pii").at("accuracy")), "+4.1");
    EXPECT_EQ(format_delta("accuracy", t.deltas.at("hybrid").at("accuracy")), "+2.8");
    EXPECT_EQ(format_delta("accuracy", t.deltas.at("control").at("accuracy")), "+0.3");
    EXPECT_EQ(format_value("accuracy", t.rows[3].metrics.at("accuracy")), "84.3");
    for (const auto& [m, d] : t.deltas.at("baseline")) EXPECT_EQ(d, 0.0) << m;
}

TEST(Aggregate, ChairDelta) {
    const auto t = aggregate({chair("baseline", 0.323, 0.089), chair("pii", 0.247, 0.071)}, "baseline");
    EXPECT_EQ(format_delta("chair_s", t.deltas.at("pii").at("chair_s")), "-7.6");
    EXPECT_EQ(format_value("chair_s", 0.247), "24.7");
}

TEST(Aggregate, SingleReportIsBaseline) {
    const auto t = aggregate({pope("baseline", 0.5, 0.6, 0.7)}, "baseline");
    ASSERT_EQ(t.rows.size(), 1u);
    for (const auto& [m, d] : t.deltas.at("baseline")) EXPECT_EQ(d, 0.0);
}

TEST(Aggregate, Errors) {
    EXPECT_THROW(aggregate(four_settings(), "nope"), MissingBaseline);
    EXPECT_THROW(aggregate({}, "baseline"), MissingBaseline);
    EXPECT_THROW(aggregate({pope("baseline", 1, 1, 1), chair("pii", 0, 0)}, "baseline"), DataError);
    EXPECT_THROW(aggregate({pope("baseline", 1, 1, 1), pope("baseline", 1, 1, 1)}, "baseline"), DataError);
}

TEST(Format, ValuesAndDeltas) {
    EXPECT_EQ(format_value("f1", 0.756), "0.76");
    EXPECT_EQ(format_delta("accuracy", 0.0), "±0.0");
    EXPECT_EQ(format_delta("accuracy", -0.112), "-11.2");
    EXPECT_EQ(format_delta("f1", 0.05), "+0.05");
    EXPECT_TRUE(is_percent_metric("chair_i"));
    EXPECT_FALSE(is_percent_metric("yes_ratio"));
}

TEST(Markdown, FourRowGolden) {
    const std::string expected =
        "| Setting | Acc. (%) | F1 | Yes Ratio |\n"
        "|---|---|---|---|\n"
        "| baseline (baseline) | 80.2 | 0.76 | 0.32 |\n"
        "| control | 80.5 (+0.3) | 0.77 | 0.33 |\n"
        "| hybrid | 83.0 (+2.8) | 0.81 | 0.38 |\n"
        "| pii | 84.3 (+4.1) | 0.82 | 0.38 |\n";
    EXPECT_EQ(table_to_markdown(aggregate(four_settings(), "baseline")), expected);
}

TEST(Csv, RoundTrip) {
    const auto t = aggregate(four_settings(), "control");
    const auto csv = table_to_csv(t);
    EXPECT_EQ(table_from_csv(csv), t);
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    EXPECT_EQ(csv.rfind("\"setting\",\"accuracy\"", 0), 0u);
}

TEST(Csv, EmptyTableIsHeaderOnly) {
    ComparisonTable t;
    t.metric_names = {"accuracy", "f1"};
    const auto csv = table_to_csv(t);
    EXPECT_EQ(csv, "\"setting\",\"accuracy\",\"f1\",\"delta_accuracy\",\"delta_f1\",\"is_baseline\"\n");
    EXPECT_EQ(parse_csv(csv).size(), 1u);
}

TEST(Csv, QuotingAndParsing) {
    CsvWriter w({"name", "x", "n"});
    w.add_row({std::string("a,\"b\"\nc"), 0.1, 7LL});
    const auto text = w.str();
    EXPECT_EQ(text, "\"name\",\"x\",\"n\"\n\"a,\"\"b\"\"\nc\",0.10000000000000001,7\n");
    const auto rows = parse_csv(text);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[1][0], "a,\"b\"\nc");
    EXPECT_EQ(std::stod(rows[1][1]), 0.1);
    EXPECT_THROW(parse_csv("\"open"), DataError);
}

TEST(MetricReportJson, RoundTrip) {
    PopeMetrics m;
    m.accuracy = 0.75;
    m.precision = 2.0 / 3.0;
    m.recall = 1.0;
    m.f1 = 0.8;
    m.yes_ratio = 0.75;
    m.n_total = 4;
    m.tp = 2;
    m.fp = 1;
    m.tn = 1;
    const auto r = make_report(m, "pii", "abc");
    EXPECT_EQ(r.metric("precision"), 2.0 / 3.0);
    EXPECT_THROW(r.metric("chair_s"), DataError);
    const auto path = fs::temp_directory_path() / "pii_test_report.json";
    write_metric_report(r, path);
    const auto back = read_metric_report(path);
    fs::remove(path);
    EXPECT_EQ(back.metrics, r.metrics);
    EXPECT_EQ(back.setting, "pii");
    EXPECT_EQ(back.config_digest, "abc");
    EXPECT_EQ(back.detail, r.detail);
}

TEST(Emit, IoErrorOnBadPath) {
    EXPECT_THROW(emit(aggregate(four_settings(), "baseline"), EmitFormat::Csv, "/nonexistent-dir/x.csv"), IoError);
}

svg::LinePlot similarity_plot(std::size_t traces) {
    svg::LinePlot plot;
    plot.title = "similarity";
    std::vector<double> mean(12, 0.0);
    for (std::size_t s = 0; s < traces; ++s) {
        svg::Series trace{"sample " + std::to_string(s), {}, {}, svg::SeriesStyle::Trace};
        for (int l = 0; l < 12; ++l) {
            trace.xs.push_back(13 + l);
            trace.ys.push_back(0.5 + 0.01 * static_cast<double>((s * 7 + l * 3) % 11));
            mean[l] += trace.ys.back() / traces;
        }
        plot.series.push_back(trace);
    }
    svg::Series m{"mean", {}, mean, svg::SeriesStyle::Mean};
    for (int l = 0; l < 12; ++l) m.xs.push_back(13 + l);
    plot.series.push_back(m);
    return plot;
}

TEST(Svg, TraceAndMeanCounts) {
    const auto text = svg::line_plot(similarity_plot(35));
    EXPECT_EQ(count(text, "<polyline class=\"trace\""), 35u);
    EXPECT_EQ(count(text, "<polyline class=\"mean\""), 1u);
    EXPECT_EQ(text.rfind("<svg", 0), 0u);
    EXPECT_NE(text.find("</svg>"), std::string::npos);
    EXPECT_EQ(text, svg::line_plot(similarity_plot(35)));
}

TEST(Svg, HeatmapAndScatter) {
    const auto h = svg::heatmap_grid("attn", {{"L4", 2, 2, {0, 1, 2, 3}}, {"L12", 1, 3, {5, 5, 5}}});
    EXPECT_EQ(count(h, "<rect"), 1u + 7u + 2u);
    EXPECT_NE(h.find("L12"), std::string::npos);
    const auto s = svg::scatter_plot("pca", {{"image", "#1f77b4", {{0, 0}, {1, 1}}}, {"text", "#d62728", {{2, 2}}}});
    EXPECT_EQ(count(s, "<circle"), 3u + 2u);
}

}  // namespace
}  // namespace pii
