#include "dynqr/backtest.hpp"

#include "dynqr/seeding.hpp"

#include <stdexcept>
#include <string>

namespace dynqr::backtest {

void BacktestPlan::validate(std::size_t series_length) const {
    if (horizon != 1) {
        throw std::invalid_argument("only one-step-ahead forecasts (horizon = 1) are supported");
    }
    if (refit_every == 0) {
        throw std::invalid_argument("refit_every must be at least 1");
    }
    fit_template.spec.validate();
    const auto min_window = static_cast<std::size_t>(fit_template.spec.lag_y) + 2;
    if (initial_window < min_window) {
        throw std::invalid_argument("initial_window must be at least " + std::to_string(min_window));
    }
    if (rolling_width && *rolling_width < min_window) {
        throw std::invalid_argument("rolling_width must be at least " + std::to_string(min_window));
    }
    if (series_length < initial_window + 2) {
        throw std::invalid_argument("series has " + std::to_string(series_length) +
                                    " observations; backtest needs at least initial_window + 2 = " +
                                    std::to_string(initial_window + 2));
    }
}

std::vector<double> one_step_forecast(const CoefficientSet& coeffs, const SeriesData& data, const ModelSpec& spec,
                                      const FittedQuantilePaths& last_paths, std::size_t target) {
    if (target >= data.size() || (data.exog.cols() > 0 && static_cast<std::size_t>(data.exog.rows()) <= target)) {
        throw std::invalid_argument("no covariate row available at index " + std::to_string(target));
    }
    const Vector x = design_row(data, spec, target);
    const std::size_t Q = coeffs.num_quantiles();
    const bool lagged = coeffs.quantile_lags() > 0;
    if (lagged && (last_paths.values.rows() == 0 || static_cast<std::size_t>(last_paths.values.cols()) != Q)) {
        throw std::invalid_argument("fitted paths do not match the coefficient set");
    }
    std::vector<double> out(Q);
    for (std::size_t q = 0; q < Q; ++q) {
        const auto r = static_cast<Eigen::Index>(q);
        double v = coeffs.beta.row(r).dot(x);
        if (lagged) {
            v += coeffs.theta(r, 0) * last_paths.values(last_paths.values.rows() - 1, r);
        }
        out[q] = v;
    }
    return out;
}

std::size_t planned_records(std::size_t series_length, const BacktestPlan& plan) {
    if (series_length < plan.initial_window + plan.horizon + 1) {
        return 0;
    }
    return series_length - plan.initial_window - plan.horizon;
}

Matrix BacktestResult::forecast_matrix() const {
    const std::size_t Q = records.empty() ? 0 : records.front().forecast.size();
    Matrix m(static_cast<Eigen::Index>(records.size()), static_cast<Eigen::Index>(Q));
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t q = 0; q < Q; ++q) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) = records[i].forecast[q];
        }
    }
    return m;
}

std::vector<double> BacktestResult::realized() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        out.push_back(r.realized);
    }
    return out;
}

BacktestResult run_backtest(const SeriesData& data, const BacktestPlan& plan) {
    data.validate();
    plan.validate(data.size());
    const std::size_t n_records = planned_records(data.size(), plan);
    const auto seeds = derive_seeds(plan.fit_template.seed, n_records);

    BacktestResult result;
    result.records.reserve(n_records);
    std::optional<CoefficientSet> previous;

    for (std::size_t i = 0; i < n_records; ++i) {
        const std::size_t end = plan.initial_window + i;  // window is [begin, end), target index end
        const std::size_t begin = plan.rolling_width && end > *plan.rolling_width ? end - *plan.rolling_width : 0;
        const std::size_t origin = end - 1;
        const SeriesData window = data.slice(begin, end);

        fitter::FitRequest req = plan.fit_template;
        req.data = window;
        req.seed = seeds[i];
        CoefficientSet coeffs;
        FittedQuantilePaths paths;
        try {
            if (!previous || i % plan.refit_every == 0) {
                if (plan.warm_start && previous) {
                    req.init_strategy = fitter::InitStrategy::explicit_coefficients;
                    req.explicit_init = previous;
                }
                fitter::FitResult fit = fitter::fit(req);
                coeffs = std::move(fit.coefficients);
                paths = std::move(fit.paths);
            } else {
                coeffs = *previous;
                const DynqrObjective obj(window, req.spec, req.grid, req.lambda,
                                         initial_quantiles(window.y, req.grid, req.initial_quantiles));
                paths = obj.paths(coeffs);
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("backtest window ending at origin " + std::to_string(origin) + " failed: " +
                                     e.what());
        }

        // Forecast from a copy that stops at the target, so nothing past it is visible.
        const SeriesData visible = data.slice(0, end + 1);
        ForecastRecord rec;
        rec.origin_index = origin;
        rec.forecast = one_step_forecast(coeffs, visible, req.spec, paths, end);
        rec.realized = data.y[end];
        rec.coefficients = coeffs;
        previous = std::move(coeffs);
        result.records.push_back(std::move(rec));
    }

    const Matrix forecasts = result.forecast_matrix();
    const std::vector<double> realized = result.realized();
    result.unsorted = scoring::score_forecasts(forecasts, realized, plan.fit_template.grid, false);
    result.sorted = scoring::score_forecasts(forecasts, realized, plan.fit_template.grid, true);
    return result;
}

}  // namespace dynqr::backtest
