#include "dynqr/cli/svg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace dynqr::cli {

namespace {

constexpr double kWidth = 900.0;
constexpr double kHeight = 420.0;
constexpr double kMargin = 50.0;
constexpr const char* kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string fan_chart_svg(const FanSeries& observed, const std::vector<FanSeries>& quantile_paths,
                          const std::string& title) {
    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo, y_lo = x_lo, y_hi = -x_lo;
    auto extend = [&](const FanSeries& s) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            y_lo = std::min(y_lo, s.y[i]);
            y_hi = std::max(y_hi, s.y[i]);
        }
    };
    extend(observed);
    for (const auto& s : quantile_paths) {
        extend(s);
    }
    if (!(x_hi > x_lo)) {
        x_hi = x_lo + 1.0;
    }
    if (!(y_hi > y_lo)) {
        y_hi = y_lo + 1.0;
    }
    const double pw = kWidth - 2 * kMargin;
    const double ph = kHeight - 2 * kMargin;
    auto sx = [&](double x) { return kMargin + (x - x_lo) / (x_hi - x_lo) * pw; };
    auto sy = [&](double y) { return kHeight - kMargin - (y - y_lo) / (y_hi - y_lo) * ph; };
    auto polyline = [&](const FanSeries& s, const char* colour, double width) {
        std::string pts;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            pts += fmt::format("{}{:.2f},{:.2f}", i ? " " : "", sx(s.x[i]), sy(s.y[i]));
        }
        return fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"{}\" points=\"{}\"/>\n", colour,
                           width, pts);
    };

    std::string svg = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<text x=\"{2}\" y=\"25\" font-family=\"sans-serif\" font-size=\"14\">{3}</text>\n",
        kWidth, kHeight, kMargin, escape(title));
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", kMargin,
                       kHeight - kMargin, kWidth - kMargin);
    svg += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", kMargin, kMargin,
                       kHeight - kMargin);
    for (double v : {y_lo, 0.5 * (y_lo + y_hi), y_hi}) {
        svg += fmt::format("<text x=\"4\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\">{:.3g}</text>\n",
                           sy(v) + 3, v);
    }
    for (double v : {x_lo, x_hi}) {
        svg += fmt::format(
            "<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"10\">{:.0f}</text>\n", sx(v) - 6,
            kHeight - kMargin + 15, v);
    }
    if (std::isfinite(y_lo) && y_lo < 0.0 && y_hi > 0.0) {
        svg += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#cccccc\"/>\n", kMargin,
                           sy(0.0), kWidth - kMargin);
    }
    svg += polyline(observed, "#888888", 1.0);
    double legend_y = kMargin;
    svg += fmt::format("<text x=\"{:.0f}\" y=\"{:.0f}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#888888\">{}</text>\n",
                       kWidth - kMargin - 110, legend_y, escape(observed.label));
    for (std::size_t i = 0; i < quantile_paths.size(); ++i) {
        const char* colour = kColours[i % std::size(kColours)];
        svg += polyline(quantile_paths[i], colour, 1.5);
        legend_y += 14;
        svg += fmt::format(
            "<text x=\"{:.0f}\" y=\"{:.0f}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{}\">{}</text>\n",
            kWidth - kMargin - 110, legend_y, colour, escape(quantile_paths[i].label));
    }
    svg += "</svg>\n";
    return svg;
}

std::vector<std::size_t> nearest_levels(const QuantileGrid& grid, const std::vector<double>& wanted) {
    std::vector<std::size_t> out;
    for (double w : wanted) {
        std::size_t best = 0;
        for (std::size_t q = 1; q < grid.size(); ++q) {
            if (std::abs(grid[q] - w) < std::abs(grid[best] - w)) {
                best = q;
            }
        }
        out.push_back(best);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace dynqr::cli
