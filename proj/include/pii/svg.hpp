// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pii::svg {

// Standalone SVG figures with axes and legend. Output depends only on the inputs.

enum class SeriesStyle { Trace, Mean, Line };

struct Series {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
    SeriesStyle style = SeriesStyle::Line;
};

struct LinePlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    /// x-interval drawn as a shaded band (e.g. the text-region patches).
    std::optional<std::pair<double, double>> highlight;
};

/// Trace series render as <polyline class="trace">, Mean as class="mean", Line as class="line".
std::string line_plot(const LinePlot& plot);

struct HeatmapPanel {
    std::string title;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;  // row-major
};

/// Panels side by side, each normalized to its own min/max.
std::string heatmap_grid(const std::string& title, const std::vector<HeatmapPanel>& panels);

struct ScatterGroup {
    std::string label;
    std::string color;
    std::vector<std::pair<double, double>> points;
};

std::string scatter_plot(const std::string& title, const std::vector<ScatterGroup>& groups);

}  // namespace pii::svg
