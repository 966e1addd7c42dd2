// Copyright 2026 The pii-toolkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "pii/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace pii::svg {
namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 160.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void finish() {
        if (!std::isfinite(lo)) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi - lo < 1e-12) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

struct Frame {
    Range x, y;
    double px(double v) const { return kLeft + (v - x.lo) / (x.hi - x.lo) * (kWidth - kLeft - kRight); }
    double py(double v) const { return kHeight - kBottom - (v - y.lo) / (y.hi - y.lo) * (kHeight - kTop - kBottom); }
};

void open_svg(std::ostringstream& out, double w, double h, const std::string& title) {
    out << R"(<svg xmlns="http://www.w3.org/2000/svg" width=")" << num(w) << R"(" height=")" << num(h)
        << R"(" viewBox="0 0 )" << num(w) << ' ' << num(h) << R"(" font-family="sans-serif" font-size="12">)" << '\n';
    out << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
    out << R"(<text x=")" << num(w / 2) << R"(" y="22" text-anchor="middle" font-size="15">)" << escape(title)
        << "</text>\n";
}

void axes(std::ostringstream& out, const Frame& f, const std::string& xl, const std::string& yl) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    out << R"(<g class="axes" stroke="black" stroke-width="1">)" << '\n';
    out << R"(<line x1=")" << num(x0) << R"(" y1=")" << num(y0) << R"(" x2=")" << num(x1) << R"(" y2=")" << num(y0)
        << R"("/>)" << '\n';
    out << R"(<line x1=")" << num(x0) << R"(" y1=")" << num(y0) << R"(" x2=")" << num(x0) << R"(" y2=")" << num(y1)
        << R"("/>)" << '\n';
    out << "</g>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = f.x.lo + (f.x.hi - f.x.lo) * i / 4.0;
        const double yv = f.y.lo + (f.y.hi - f.y.lo) * i / 4.0;
        out << R"(<text x=")" << num(f.px(xv)) << R"(" y=")" << num(y0 + 16) << R"(" text-anchor="middle">)"
            << tick(xv) << "</text>\n";
        out << R"(<text x=")" << num(x0 - 6) << R"(" y=")" << num(f.py(yv) + 4) << R"(" text-anchor="end">)"
            << tick(yv) << "</text>\n";
    }
    out << R"(<text x=")" << num((x0 + x1) / 2) << R"(" y=")" << num(kHeight - 12) << R"(" text-anchor="middle">)"
        << escape(xl) << "</text>\n";
    out << R"(<text transform="translate(16,)" << num((y0 + y1) / 2) << R"x() rotate(-90)" text-anchor="middle">)x"
        << escape(yl) << "</text>\n";
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace

std::string line_plot(const LinePlot& plot) {
    Frame f;
    for (const auto& s : plot.series) {
        for (double v : s.xs) f.x.add(v);
        for (double v : s.ys) f.y.add(v);
    }
    if (plot.highlight) {
        f.x.add(plot.highlight->first);
        f.x.add(plot.highlight->second);
    }
    f.x.finish();
    f.y.finish();

    std::ostringstream out;
    open_svg(out, kWidth, kHeight, plot.title);
    if (plot.highlight) {
        const double a = f.px(plot.highlight->first), b = f.px(plot.highlight->second);
        out << R"(<rect class="highlight" x=")" << num(std::min(a, b)) << R"(" y=")" << num(kTop) << R"(" width=")"
            << num(std::abs(b - a)) << R"(" height=")" << num(kHeight - kTop - kBottom)
            << R"(" fill="#ffd54f" fill-opacity="0.3"/>)" << '\n';
    }
    axes(out, f, plot.x_label, plot.y_label);

    std::size_t color = 0;
    bool trace_in_legend = false;
    std::vector<std::pair<std::string, std::string>> legend;
    for (const auto& s : plot.series) {
        const char* cls = "line";
        std::string stroke;
        std::string extra;
        switch (s.style) {
            case SeriesStyle::Trace:
                cls = "trace";
                stroke = "#b0b0b0";
                extra = R"( stroke-width="0.8" stroke-opacity="0.6")";
                break;
            case SeriesStyle::Mean:
                cls = "mean";
                stroke = "#d62728";
                extra = R"( stroke-width="2.5")";
                break;
            case SeriesStyle::Line:
                stroke = kPalette[color++ % std::size(kPalette)];
                extra = R"( stroke-width="1.8")";
                break;
        }
        out << R"(<polyline class=")" << cls << R"(" fill="none" stroke=")" << stroke << '"' << extra << R"( points=")";
        const std::size_t n = std::min(s.xs.size(), s.ys.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (i) out << ' ';
            out << num(f.px(s.xs[i])) << ',' << num(f.py(s.ys[i]));
        }
        out << R"("/>)" << '\n';
        if (s.style == SeriesStyle::Trace) {
            if (!trace_in_legend) legend.emplace_back(s.label, stroke);
            trace_in_legend = true;
        } else {
            legend.emplace_back(s.label, stroke);
        }
    }

    out << R"(<g class="legend">)" << '\n';
    for (std::size_t i = 0; i < legend.size(); ++i) {
        const double y = kTop + 10 + 18.0 * static_cast<double>(i);
        const double x = kWidth - kRight + 12;
        out << R"(<rect x=")" << num(x) << R"(" y=")" << num(y - 8) << R"(" width="14" height="4" fill=")"
            << legend[i].second << R"("/>)" << '\n';
        out << R"(<text x=")" << num(x + 20) << R"(" y=")" << num(y) << R"(">)" << escape(legend[i].first)
            << "</text>\n";
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

std::string heatmap_grid(const std::string& title, const std::vector<HeatmapPanel>& panels) {
    constexpr double kPanel = 220.0;
    constexpr double kGap = 20.0;
    const double w = kGap + static_cast<double>(panels.size()) * (kPanel + kGap);
    const double h = 40.0 + kPanel + 40.0;
    std::ostringstream out;
    open_svg(out, std::max(w, 240.0), h, title);
    for (std::size_t p = 0; p < panels.size(); ++p) {
        const auto& panel = panels[p];
        const double ox = kGap + static_cast<double>(p) * (kPanel + kGap);
        const double oy = 40.0;
        Range r;
        for (double v : panel.values) r.add(v);
        r.finish();
        out << R"(<g class="panel">)" << '\n';
        out << R"(<text x=")" << num(ox + kPanel / 2) << R"(" y=")" << num(oy + kPanel + 18)
            << R"(" text-anchor="middle">)" << escape(panel.title) << "</text>\n";
        if (panel.rows && panel.cols) {
            const double cw = kPanel / static_cast<double>(panel.cols);
            const double ch = kPanel / static_cast<double>(panel.rows);
            for (std::size_t i = 0; i < panel.rows; ++i) {
                for (std::size_t j = 0; j < panel.cols; ++j) {
                    const std::size_t k = i * panel.cols + j;
                    const double v = k < panel.values.size() ? panel.values[k] : r.lo;
                    const double t = std::clamp((v - r.lo) / (r.hi - r.lo), 0.0, 1.0);
                    // dark blue -> yellow
                    const int red = static_cast<int>(std::lround(40 + 215 * t));
                    const int green = static_cast<int>(std::lround(20 + 210 * t));
                    const int blue = static_cast<int>(std::lround(110 - 80 * t));
                    char fill[8];
                    std::snprintf(fill, sizeof fill, "#%02x%02x%02x", red, green, blue);
                    out << R"(<rect x=")" << num(ox + j * cw) << R"(" y=")" << num(oy + i * ch) << R"(" width=")"
                        << num(cw) << R"(" height=")" << num(ch) << R"(" fill=")" << fill << R"("/>)" << '\n';
                }
            }
        }
        out << R"(<rect x=")" << num(ox) << R"(" y=")" << num(oy) << R"(" width=")" << num(kPanel)
            << R"(" height=")" << num(kPanel) << R"(" fill="none" stroke="black"/>)" << '\n';
        out << R"(<text x=")" << num(ox) << R"(" y=")" << num(oy + kPanel + 34) << R"(" font-size="10">min )"
            << tick(r.lo) << " max " << tick(r.hi) << "</text>\n";
        out << "</g>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string scatter_plot(const std::string& title, const std::vector<ScatterGroup>& groups) {
    Frame f;
    for (const auto& g : groups) {
        for (const auto& [x, y] : g.points) {
            f.x.add(x);
            f.y.add(y);
        }
    }
    f.x.finish();
    f.y.finish();
    std::ostringstream out;
    open_svg(out, kWidth, kHeight, title);
    axes(out, f, "PC1", "PC2");
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const auto& g = groups[gi];
        const std::string color = g.color.empty() ? kPalette[gi % std::size(kPalette)] : g.color;
        out << R"(<g class="group" fill=")" << escape(color) << R"(">)" << '\n';
        for (const auto& [x, y] : g.points) {
            out << R"(<circle cx=")" << num(f.px(x)) << R"(" cy=")" << num(f.py(y)) << R"(" r="3.5"/>)" << '\n';
        }
        out << "</g>\n";
    }
    out << R"(<g class="legend">)" << '\n';
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
        const std::string color = groups[gi].color.empty() ? kPalette[gi % std::size(kPalette)] : groups[gi].color;
        const double y = kTop + 10 + 18.0 * static_cast<double>(gi);
        const double x = kWidth - kRight + 12;
        out << R"(<circle cx=")" << num(x + 5) << R"(" cy=")" << num(y - 4) << R"(" r="4" fill=")" << escape(color)
            << R"("/>)" << '\n';
        out << R"(<text x=")" << num(x + 16) << R"(" y=")" << num(y) << R"(">)" << escape(groups[gi].label)
            << "</text>\n";
    }
    out << "</g>\n</svg>\n";
    return out.str();
}

}  // namespace pii::svg
