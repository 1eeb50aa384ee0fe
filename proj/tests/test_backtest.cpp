#include "dynqr/backtest.hpp"
#include "dynqr/dgp.hpp"

#include <doctest.h>

#include <cmath>

using namespace dynqr;
using namespace dynqr::backtest;

namespace {

SeriesData simulated(std::size_t T, std::uint64_t seed) {
    dgp::DgpConfig cfg;
    cfg.design = dgp::Design::y1;
    cfg.process = dgp::Process::dqar11;
    cfg.T = T;
    cfg.seed = seed;
    return dgp::run_replications(cfg, 1, QuantileGrid::deciles()).front().data;
}

BacktestPlan cheap_plan(std::size_t window) {
    BacktestPlan plan;
    plan.initial_window = window;
    plan.fit_template.grid = QuantileGrid({0.1, 0.5, 0.9});
    plan.fit_template.lambda = 1.0;
    plan.fit_template.seed = 21;
    plan.fit_template.optim_options.max_iters = 40;
    return plan;
}

}  // namespace

TEST_SUITE("backtest") {

TEST_CASE("one-step forecast cases") {
    SeriesData data;
    data.y = {0.5, 2.0, 9.9};
    ModelSpec spec;
    FittedQuantilePaths last;
    last.values = Matrix(1, 2);
    last.values << 1.0, 4.0;

    CoefficientSet c(2, 2, 1);
    c.beta << 0.1, 0.2, 1.0, -1.0;
    c.theta << 0.5, 0.25;
    const auto f = one_step_forecast(c, data, spec, last, 2);  // x = (1, y_1 = 2)
    CHECK(f[0] == doctest::Approx(0.1 + 0.2 * 2.0 + 0.5 * 1.0));
    CHECK(f[1] == doctest::Approx(1.0 - 2.0 + 0.25 * 4.0));

    CoefficientSet stat = c;
    stat.theta.setZero();
    const auto g = one_step_forecast(stat, data, spec, last, 2);
    CHECK(g[0] == doctest::Approx(0.5));
    CHECK(g[1] == doctest::Approx(-1.0));

    CoefficientSet persist(2, 2, 1);
    persist.theta.setOnes();
    const auto h = one_step_forecast(persist, data, spec, last, 2);
    CHECK(h[0] == 1.0);
    CHECK(h[1] == 4.0);

    ModelSpec with_exog;
    with_exog.exog_columns = {0};
    CHECK_THROWS_AS((void)one_step_forecast(c, data, with_exog, last, 2), std::invalid_argument);
    CHECK_THROWS_AS((void)one_step_forecast(c, data, spec, last, 3), std::invalid_argument);
}

TEST_CASE("record count and score ordering") {
    const SeriesData data = simulated(60, 3);
    const BacktestPlan plan = cheap_plan(40);
    CHECK(planned_records(254, BacktestPlan{}) == 153);
    const auto r = run_backtest(data, plan);
    REQUIRE(r.records.size() == 60 - 40 - 1);
    CHECK(r.records.front().origin_index == 39);
    CHECK(r.records.back().origin_index == 57);
    for (const auto& rec : r.records) {
        CHECK(rec.realized == data.y[rec.origin_index + 1]);
        CHECK(rec.forecast.size() == 3);
    }
    CHECK(r.sorted.score(scoring::WeightScheme::uniform) <= r.unsorted.score(scoring::WeightScheme::uniform));

    const auto again = run_backtest(data, plan);
    for (std::size_t i = 0; i < r.records.size(); ++i) {
        CHECK(r.records[i].forecast == again.records[i].forecast);
        CHECK(r.records[i].coefficients == again.records[i].coefficients);
    }
}

TEST_CASE("future observations do not leak into forecasts") {
    const SeriesData data = simulated(50, 4);
    BacktestPlan plan = cheap_plan(35);
    const auto base = run_backtest(data, plan);
    const std::size_t j = 42;
    SeriesData mutated = data;
    mutated.y[j] += 25.0;
    mutated.exog(static_cast<Eigen::Index>(j), 0) = 0.123;
    mutated.y.back() = -100.0;
    const auto alt = run_backtest(mutated, plan);
    for (std::size_t i = 0; i < base.records.size(); ++i) {
        if (base.records[i].origin_index < j) {
            CHECK(base.records[i].forecast == alt.records[i].forecast);
            CHECK(base.records[i].coefficients == alt.records[i].coefficients);
        }
    }
}

TEST_CASE("refit schedule, rolling windows and cold starts") {
    const SeriesData data = simulated(45, 5);
    BacktestPlan plan = cheap_plan(30);
    plan.refit_every = 3;
    const auto r = run_backtest(data, plan);
    REQUIRE(r.records.size() == 14);
    CHECK(r.records[1].coefficients == r.records[0].coefficients);
    CHECK(r.records[2].coefficients == r.records[0].coefficients);

    plan.refit_every = 1;
    plan.rolling_width = 25;
    plan.warm_start = false;
    const auto rolling = run_backtest(data, plan);
    CHECK(rolling.records.size() == 14);
}

TEST_CASE("constant series collapses the forecasts") {
    SeriesData data;
    data.y.assign(40, 1.5);
    BacktestPlan plan = cheap_plan(30);
    plan.fit_template.spec.lag_y = 0;
    plan.fit_template.spec.quantile_lags = 0;
    plan.fit_template.optim_options.max_iters = 0;
    const auto r = run_backtest(data, plan);
    for (const auto& rec : r.records) {
        for (double v : rec.forecast) {
            CHECK(v == doctest::Approx(1.5).epsilon(1e-6));
        }
    }
    CHECK(r.unsorted.score(scoring::WeightScheme::uniform) < 1e-6);
}

TEST_CASE("plan validation") {
    const SeriesData data = simulated(30, 6);
    BacktestPlan plan = cheap_plan(29);
    CHECK_THROWS_AS((void)run_backtest(data, plan), std::invalid_argument);
    plan = cheap_plan(20);
    plan.horizon = 2;
    CHECK_THROWS_AS((void)run_backtest(data, plan), std::invalid_argument);
    plan = cheap_plan(2);
    CHECK_THROWS_AS((void)run_backtest(data, plan), std::invalid_argument);
}

}  // TEST_SUITE
