#pragma once

#include "dynqr/fitter.hpp"
#include "dynqr/scoring.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace dynqr::backtest {

/// Expanding-window plan. fit_template.data is ignored; each window supplies its own.
struct BacktestPlan {
    std::size_t initial_window = 100;
    std::size_t horizon = 1;
    std::size_t refit_every = 1;
    fitter::FitRequest fit_template;
    bool warm_start = true;                     // start each fit from the previous window's solution
    std::optional<std::size_t> rolling_width;   // fixed-width windows instead of expanding

    void validate(std::size_t series_length) const;
};

struct ForecastRecord {
    std::size_t origin_index = 0;       // last in-sample index
    std::vector<double> forecast;       // length Q, unsorted
    double realized = 0.0;              // y at origin_index + 1
    CoefficientSet coefficients;
};

struct BacktestResult {
    std::vector<ForecastRecord> records;
    scoring::ScoreReport unsorted;
    scoring::ScoreReport sorted;

    /// records x Q matrix of raw forecasts.
    [[nodiscard]] Matrix forecast_matrix() const;
    [[nodiscard]] std::vector<double> realized() const;
};

/**
 * @brief Quantile forecast for series index target.
 *
 * Uses the covariate row at target (lagged y and exogenous values at target) and
 * the last row of the in-sample fitted paths as the lagged quantile.
 */
[[nodiscard]] std::vector<double> one_step_forecast(const CoefficientSet& coeffs, const SeriesData& data,
                                                    const ModelSpec& spec, const FittedQuantilePaths& last_paths,
                                                    std::size_t target);

/// One record per origin initial_window-1 .. T-3; the final observation is never a target.
[[nodiscard]] std::size_t planned_records(std::size_t series_length, const BacktestPlan& plan);

[[nodiscard]] BacktestResult run_backtest(const SeriesData& data, const BacktestPlan& plan);

}  // namespace dynqr::backtest
