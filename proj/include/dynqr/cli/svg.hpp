#pragma once

#include "dynqr/quantile_core.hpp"

#include <string>
#include <vector>

namespace dynqr::cli {

struct FanSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal line chart: observed series in grey, quantile paths in colour, axes and a legend.
[[nodiscard]] std::string fan_chart_svg(const FanSeries& observed, const std::vector<FanSeries>& quantile_paths,
                                        const std::string& title);

/// Indices of the grid levels nearest to each requested level (deduplicated, ascending).
[[nodiscard]] std::vector<std::size_t> nearest_levels(const QuantileGrid& grid, const std::vector<double>& wanted);

}  // namespace dynqr::cli
