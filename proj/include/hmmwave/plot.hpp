// SPDX-License-Identifier: Apache-2.0
#pragma once

/**
 * @file plot.hpp
 * @brief Self-contained SVG log-log plots for convergence study results.
 *
 * Renders each (study, scheme) group of rows as one series: a polyline with
 * circle markers on log-log axes, decade grid lines, reference slope
 * triangles of order one and two, and top-edge cross markers for runs that
 * diverged. The output is a single static SVG document with no external
 * references, suitable for embedding or direct viewing.
 */

#include "hmmwave/study.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hmmwave {

/// One plotted line: finite data points plus abscissae of diverged runs.
struct PlotSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
    std::vector<double> diverged_x;
};

namespace detail {

/// Fixed two-decimal formatting for SVG coordinates.
inline std::string fmt2(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
    return std::string(buf, res.ptr);
}

/// The refinement parameter a row is plotted against, if it has one.
inline std::optional<double> plot_abscissa(const StudyRow& row) {
    if (row.study.rfind("time", 0) == 0) {
        if (row.tau && *row.tau > 0.0) return row.tau;
        return std::nullopt;
    }
    if (row.study == "micro") {
        if (row.micro_n && row.delta && *row.micro_n > 0 && *row.delta > 0.0)
            return *row.delta / static_cast<double>(*row.micro_n);
        return std::nullopt;
    }
    if (row.H && *row.H > 0.0) return row.H;
    return std::nullopt;
}

inline std::vector<PlotSeries> collect_series(const StudyResult& result) {
    std::vector<PlotSeries> series;
    std::map<std::string, std::size_t> index;
    for (const StudyRow& row : result.rows) {
        const auto x = plot_abscissa(row);
        if (!x) continue;
        std::string label = row.study;
        if (!row.scheme.empty()) label += " " + row.scheme;
        auto [it, inserted] = index.try_emplace(label, series.size());
        if (inserted) series.push_back({label, {}, {}});
        PlotSeries& s = series[it->second];
        if (row.diverged) {
            s.diverged_x.push_back(*x);
        } else if (row.e_total && std::isfinite(*row.e_total) && *row.e_total > 0.0) {
            s.points.emplace_back(*x, *row.e_total);
        }
    }
    return series;
}

inline void append_slope_triangle(std::string& svg, double x0, double y0, double w, int order,
                                  double decade_ratio) {
    const double v = w * order * decade_ratio;
    svg += "<path fill=\"none\" stroke=\"#888888\" stroke-width=\"1\" d=\"M " + fmt2(x0) + " " +
           fmt2(y0) + " L " + fmt2(x0 + w) + " " + fmt2(y0) + " L " + fmt2(x0 + w) + " " +
           fmt2(y0 - v) + " Z\"/>\n";
    svg += "<text x=\"" + fmt2(x0 + w + 4.0) + "\" y=\"" + fmt2(y0 - 0.5 * v + 4.0) +
           "\" font-size=\"11\" fill=\"#888888\">" + std::to_string(order) + "</text>\n";
}

} // namespace detail

/**
 * @brief Render a study result as a log-log SVG document.
 *
 * Throws std::runtime_error if the result holds no finite positive data
 * point (there is nothing to set the axes from).
 */
inline std::string render_plot_svg(const StudyResult& result, const std::string& title = "") {
    using detail::fmt2;
    const std::vector<PlotSeries> series = detail::collect_series(result);

    double xmin = 0.0, xmax = 0.0, ymin = 0.0, ymax = 0.0;
    bool any = false;
    for (const PlotSeries& s : series) {
        for (const auto& [x, y] : s.points) {
            if (!any) {
                xmin = xmax = x;
                ymin = ymax = y;
                any = true;
            } else {
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
                ymin = std::min(ymin, y);
                ymax = std::max(ymax, y);
            }
        }
        for (double x : s.diverged_x) {
            if (any) {
                xmin = std::min(xmin, x);
                xmax = std::max(xmax, x);
            }
        }
    }
    if (!any) throw std::runtime_error("render_plot_svg: no plottable rows in result");

    int lx0 = static_cast<int>(std::floor(std::log10(xmin)));
    int lx1 = static_cast<int>(std::ceil(std::log10(xmax)));
    int ly0 = static_cast<int>(std::floor(std::log10(ymin)));
    int ly1 = static_cast<int>(std::ceil(std::log10(ymax)));
    if (lx0 == lx1) ++lx1;
    if (ly0 == ly1) ++ly1;

    const double width = 760.0, height = 520.0;
    const double left = 70.0, right = 180.0, top = 44.0, bottom = 58.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    const auto px = [&](double x) {
        return left + (std::log10(x) - lx0) / static_cast<double>(lx1 - lx0) * plot_w;
    };
    const auto py = [&](double y) {
        return top + (ly1 - std::log10(y)) / static_cast<double>(ly1 - ly0) * plot_h;
    };

    static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                              "#9467bd", "#ff7f0e", "#8c564b"};
    constexpr int palette_size = 6;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt2(width) + "\" height=\"" +
           fmt2(height) + "\" viewBox=\"0 0 " + fmt2(width) + " " + fmt2(height) + "\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"" + fmt2(width) + "\" height=\"" + fmt2(height) +
           "\" fill=\"#ffffff\"/>\n";
    if (!title.empty())
        svg += "<text x=\"" + fmt2(left + 0.5 * plot_w) + "\" y=\"24\" text-anchor=\"middle\" "
               "font-size=\"14\" fill=\"#202020\">" + title + "</text>\n";

    // Decade grid and tick labels.
    for (int d = lx0; d <= lx1; ++d) {
        const double x = px(std::pow(10.0, d));
        svg += "<line x1=\"" + fmt2(x) + "\" y1=\"" + fmt2(top) + "\" x2=\"" + fmt2(x) +
               "\" y2=\"" + fmt2(top + plot_h) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + fmt2(x) + "\" y=\"" + fmt2(top + plot_h + 18.0) +
               "\" text-anchor=\"middle\" font-size=\"11\" fill=\"#404040\">1e" +
               std::to_string(d) + "</text>\n";
    }
    for (int d = ly0; d <= ly1; ++d) {
        const double y = py(std::pow(10.0, d));
        svg += "<line x1=\"" + fmt2(left) + "\" y1=\"" + fmt2(y) + "\" x2=\"" +
               fmt2(left + plot_w) + "\" y2=\"" + fmt2(y) +
               "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg += "<text x=\"" + fmt2(left - 6.0) + "\" y=\"" + fmt2(y + 4.0) +
               "\" text-anchor=\"end\" font-size=\"11\" fill=\"#404040\">1e" +
               std::to_string(d) + "</text>\n";
    }
    svg += "<rect x=\"" + fmt2(left) + "\" y=\"" + fmt2(top) + "\" width=\"" + fmt2(plot_w) +
           "\" height=\"" + fmt2(plot_h) + "\" fill=\"none\" stroke=\"#404040\"/>\n";

    // Reference slopes, scaled by the pixels-per-decade ratio of the axes.
    const double ppd_x = plot_w / (lx1 - lx0);
    const double ppd_y = plot_h / (ly1 - ly0);
    const double decade_ratio = ppd_y / ppd_x;
    double tri_w = 0.16 * plot_w;
    if (tri_w * 2.0 * decade_ratio > 0.4 * plot_h) tri_w = 0.4 * plot_h / (2.0 * decade_ratio);
    detail::append_slope_triangle(svg, left + 0.56 * plot_w, top + 0.92 * plot_h, tri_w, 1,
                                  decade_ratio);
    detail::append_slope_triangle(svg, left + 0.24 * plot_w, top + 0.92 * plot_h, tri_w, 2,
                                  decade_ratio);

    // Series: polyline, circle markers, and top-edge crosses for diverged runs.
    int color_index = 0;
    double legend_y = top + 8.0;
    for (const PlotSeries& s : series) {
        const std::string color = palette[color_index % palette_size];
        ++color_index;
        svg += "<g data-series=\"" + s.label + "\">\n";
        if (s.points.size() >= 2) {
            svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < s.points.size(); ++i) {
                if (i) svg += " ";
                svg += fmt2(px(s.points[i].first)) + "," + fmt2(py(s.points[i].second));
            }
            svg += "\"/>\n";
        }
        for (const auto& [x, y] : s.points)
            svg += "<circle cx=\"" + fmt2(px(x)) + "\" cy=\"" + fmt2(py(y)) +
                   "\" r=\"3.5\" fill=\"" + color + "\"/>\n";
        for (double x : s.diverged_x) {
            const double cx = px(x);
            const double cy = top + 8.0;
            svg += "<path class=\"diverged\" stroke=\"" + color + "\" stroke-width=\"1.5\" d=\"M " +
                   fmt2(cx - 4.0) + " " + fmt2(cy - 4.0) + " L " + fmt2(cx + 4.0) + " " +
                   fmt2(cy + 4.0) + " M " + fmt2(cx - 4.0) + " " + fmt2(cy + 4.0) + " L " +
                   fmt2(cx + 4.0) + " " + fmt2(cy - 4.0) + "\"/>\n";
        }
        svg += "</g>\n";

        const double lx = left + plot_w + 16.0;
        svg += "<line x1=\"" + fmt2(lx) + "\" y1=\"" + fmt2(legend_y) + "\" x2=\"" +
               fmt2(lx + 22.0) + "\" y2=\"" + fmt2(legend_y) + "\" stroke=\"" + color +
               "\" stroke-width=\"1.5\"/>\n";
        svg += "<circle cx=\"" + fmt2(lx + 11.0) + "\" cy=\"" + fmt2(legend_y) +
               "\" r=\"3\" fill=\"" + color + "\"/>\n";
        svg += "<text x=\"" + fmt2(lx + 28.0) + "\" y=\"" + fmt2(legend_y + 4.0) +
               "\" font-size=\"11\" fill=\"#202020\">" + s.label + "</text>\n";
        legend_y += 18.0;
    }

    // Axis titles derived from the leading study kind.
    std::string x_title = "refinement parameter";
    std::string y_title = "relative error";
    if (!result.rows.empty()) {
        const std::string& kind = result.rows.front().study;
        if (kind.rfind("time", 0) == 0) x_title = "time step";
        else if (kind == "micro") x_title = "micro mesh width", y_title = "tensor error";
        else x_title = "mesh width";
    }
    svg += "<text x=\"" + fmt2(left + 0.5 * plot_w) + "\" y=\"" + fmt2(height - 14.0) +
           "\" text-anchor=\"middle\" font-size=\"12\" fill=\"#202020\">" + x_title + "</text>\n";
    svg += "<text x=\"18\" y=\"" + fmt2(top + 0.5 * plot_h) +
           "\" text-anchor=\"middle\" font-size=\"12\" fill=\"#202020\" transform=\"rotate(-90 18 " +
           fmt2(top + 0.5 * plot_h) + ")\">" + y_title + "</text>\n";
    svg += "</svg>\n";
    return svg;
}

/// Render and write atomically; see render_plot_svg for failure modes.
inline void write_plot(const StudyResult& result, const std::filesystem::path& path,
                       const std::string& title = "") {
    write_text_atomic(path, render_plot_svg(result, title));
}

} // namespace hmmwave
