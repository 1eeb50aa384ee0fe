#include "dynqr/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <string_view>

namespace dynqr::cli {

using nlohmann::json;

namespace {

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) {
        throw ConfigError(path + ": expected an object");
    }
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
    require_object(j, path);
    for (const auto& [key, value] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw ConfigError(path + ": unknown key '" + key + "'");
        }
    }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& path, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

std::size_t get_count(const json& j, const std::string& key, const std::string& path, std::size_t fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ConfigError(path + "." + key + ": expected a non-negative integer");
    }
    return v.get<std::size_t>();
}

template <typename Fn>
auto convert(const std::string& where, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

std::array<double, 4> get_four(const json& j, const std::string& key, const std::string& path,
                               std::array<double, 4> fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    const auto v = get<std::vector<double>>(j, key, path, {});
    if (v.size() != 4) {
        throw ConfigError(path + "." + key + ": expected four numbers");
    }
    return {v[0], v[1], v[2], v[3]};
}

void parse_data(const json& j, DataSource& d) {
    reject_unknown(j, "data", {"path", "exog_columns"});
    if (j.contains("path")) {
        d.path = get<std::string>(j, "path", "data", "");
    }
    d.exog_columns = get<std::vector<std::string>>(j, "exog_columns", "data", d.exog_columns);
}

void parse_dgp(const json& j, dgp::DgpConfig& c, std::size_t& replications) {
    const std::string p = "dgp";
    reject_unknown(j, p, {"design", "process", "T", "burn_in", "theta_base", "xi", "fine_grid_size", "max_attempts",
                          "replications"});
    if (j.contains("design")) {
        c.design = convert(p + ".design", [&] { return dgp::parse_design(get<std::string>(j, "design", p, "")); });
    }
    if (j.contains("process")) {
        c.process = convert(p + ".process", [&] { return dgp::parse_process(get<std::string>(j, "process", p, "")); });
    }
    c.T = get_count(j, "T", p, c.T);
    c.burn_in = get_count(j, "burn_in", p, c.burn_in);
    c.theta_base = get_four(j, "theta_base", p, c.theta_base);
    c.xi = get_four(j, "xi", p, c.xi);
    c.fine_grid_size = get_count(j, "fine_grid_size", p, c.fine_grid_size);
    c.max_attempts = get_count(j, "max_attempts", p, c.max_attempts);
    replications = get_count(j, "replications", p, replications);
}

void parse_model(const json& j, ModelBlock& m) {
    const std::string p = "model";
    reject_unknown(j, p, {"lag_y", "asymmetric_slope", "quantile_lags", "exog_columns"});
    m.lag_y = get<int>(j, "lag_y", p, m.lag_y);
    m.asymmetric_slope = get<bool>(j, "asymmetric_slope", p, m.asymmetric_slope);
    m.quantile_lags = get<int>(j, "quantile_lags", p, m.quantile_lags);
    m.exog_columns = get<std::vector<std::string>>(j, "exog_columns", p, m.exog_columns);
}

void parse_optim(const json& j, optim::OptimOptions& o) {
    const std::string p = "fit.optim";
    reject_unknown(j, p, {"max_iters", "tol_fun", "tol_fun_window", "tol_x", "pop_size", "max_evaluations"});
    o.max_iters = get_count(j, "max_iters", p, o.max_iters);
    o.tol_fun = get<double>(j, "tol_fun", p, o.tol_fun);
    o.tol_fun_window = get_count(j, "tol_fun_window", p, o.tol_fun_window);
    o.tol_x = get<double>(j, "tol_x", p, o.tol_x);
    if (j.contains("pop_size") && !j.at("pop_size").is_null()) {
        o.pop_size = get_count(j, "pop_size", p, 0);
    }
    o.max_evaluations = get_count(j, "max_evaluations", p, o.max_evaluations);
}

void parse_fit(const json& j, FitBlock& f) {
    const std::string p = "fit";
    reject_unknown(j, p, {"quantiles", "lambda", "init", "optimizer", "initial_quantiles", "restarts", "beta_bound",
                          "theta_bound", "theta_grid_draws", "optim"});
    f.quantiles = get<std::vector<double>>(j, "quantiles", p, f.quantiles);
    f.lambda = get<double>(j, "lambda", p, f.lambda);
    if (j.contains("init")) {
        f.init = convert(p + ".init", [&] { return fitter::parse_init_strategy(get<std::string>(j, "init", p, "")); });
        if (f.init == fitter::InitStrategy::explicit_coefficients) {
            throw ConfigError("fit.init: explicit coefficients are only available through the library API");
        }
    }
    if (j.contains("optimizer")) {
        f.optimizer =
            convert(p + ".optimizer", [&] { return fitter::parse_optimizer(get<std::string>(j, "optimizer", p, "")); });
    }
    if (j.contains("initial_quantiles")) {
        const auto s = get<std::string>(j, "initial_quantiles", p, "");
        if (s == "empirical") {
            f.initial_quantiles = InitialQuantiles::empirical;
        } else if (s == "zeros") {
            f.initial_quantiles = InitialQuantiles::zeros;
        } else {
            throw ConfigError("fit.initial_quantiles: expected 'empirical' or 'zeros'");
        }
    }
    f.restarts = get_count(j, "restarts", p, f.restarts);
    f.beta_bound = get<double>(j, "beta_bound", p, f.beta_bound);
    f.theta_bound = get<double>(j, "theta_bound", p, f.theta_bound);
    f.theta_grid_draws = get_count(j, "theta_grid_draws", p, f.theta_grid_draws);
    if (j.contains("optim")) {
        parse_optim(j.at("optim"), f.optim);
    }
}

void parse_montecarlo(const json& j, MonteCarloBlock& m) {
    const std::string p = "montecarlo";
    reject_unknown(j, p, {"replications", "lambdas", "init_strategies", "include_nelder_mead", "designs",
                          "sample_sizes", "report_quantiles"});
    m.replications = get_count(j, "replications", p, m.replications);
    m.lambdas = get<std::vector<double>>(j, "lambdas", p, m.lambdas);
    if (j.contains("init_strategies")) {
        m.init_strategies.clear();
        for (const auto& s : get<std::vector<std::string>>(j, "init_strategies", p, {})) {
            const auto strategy = convert(p + ".init_strategies", [&] { return fitter::parse_init_strategy(s); });
            if (strategy == fitter::InitStrategy::explicit_coefficients) {
                throw ConfigError("montecarlo.init_strategies: 'explicit' is not a Monte Carlo strategy");
            }
            m.init_strategies.push_back(strategy);
        }
    }
    m.include_nelder_mead = get<bool>(j, "include_nelder_mead", p, m.include_nelder_mead);
    if (j.contains("designs")) {
        m.designs.clear();
        for (const auto& s : get<std::vector<std::string>>(j, "designs", p, {})) {
            m.designs.push_back(convert(p + ".designs", [&] { return dgp::parse_design(s); }));
        }
    }
    m.sample_sizes = get<std::vector<std::size_t>>(j, "sample_sizes", p, m.sample_sizes);
    m.report_quantiles = get<std::vector<double>>(j, "report_quantiles", p, m.report_quantiles);
}

void parse_backtest(const json& j, BacktestBlock& b) {
    const std::string p = "backtest";
    reject_unknown(j, p, {"initial_window", "horizon", "refit_every", "warm_start", "rolling_width"});
    b.initial_window = get_count(j, "initial_window", p, b.initial_window);
    b.horizon = get_count(j, "horizon", p, b.horizon);
    b.refit_every = get_count(j, "refit_every", p, b.refit_every);
    b.warm_start = get<bool>(j, "warm_start", p, b.warm_start);
    if (j.contains("rolling_width") && !j.at("rolling_width").is_null()) {
        b.rolling_width = get_count(j, "rolling_width", p, 0);
    }
}

void validate(const RunConfig& c) {
    convert("dgp", [&] {
        c.dgp.validate();
        return 0;
    });
    if (c.replications == 0 || c.montecarlo.replications == 0) {
        throw ConfigError("replications must be at least 1");
    }
    (void)convert("fit.quantiles", [&] { return c.fit.grid(); });
    (void)convert("model", [&] { return c.model_spec(); });
    convert("fit.optim", [&] {
        c.fit.optim.validate(1);
        return 0;
    });
    if (!(c.fit.lambda >= 0.0)) {
        throw ConfigError("fit.lambda must be non-negative");
    }
    if (c.fit.restarts == 0) {
        throw ConfigError("fit.restarts must be at least 1");
    }
    for (double l : c.montecarlo.lambdas) {
        if (!(l >= 0.0) || !std::isfinite(l)) {
            throw ConfigError("montecarlo.lambdas must be finite and non-negative");
        }
    }
    if (c.montecarlo.sample_sizes.empty() || c.montecarlo.designs.empty()) {
        throw ConfigError("montecarlo needs at least one design and one sample size");
    }
    if (c.montecarlo.lambdas.empty() && !c.montecarlo.include_nelder_mead) {
        throw ConfigError("montecarlo has no estimators");
    }
    for (double tau : c.montecarlo.report_quantiles) {
        if (!(tau > 0.0 && tau < 1.0)) {
            throw ConfigError("montecarlo.report_quantiles must lie in (0,1)");
        }
    }
    for (double tau : c.plot_quantiles) {
        if (!(tau > 0.0 && tau < 1.0)) {
            throw ConfigError("plot_quantiles must lie in (0,1)");
        }
    }
    if (c.backtest.horizon != 1) {
        throw ConfigError("backtest.horizon: only 1 is supported");
    }
    if (c.backtest.refit_every == 0) {
        throw ConfigError("backtest.refit_every must be at least 1");
    }
}

}  // namespace

QuantileGrid FitBlock::grid() const { return quantiles.empty() ? QuantileGrid::deciles() : QuantileGrid(quantiles); }

ModelSpec RunConfig::model_spec() const {
    ModelSpec spec;
    spec.lag_y = model.lag_y;
    spec.asymmetric_slope = model.asymmetric_slope;
    spec.quantile_lags = model.quantile_lags;
    for (const auto& name : model.exog_columns) {
        const auto it = std::find(data.exog_columns.begin(), data.exog_columns.end(), name);
        if (it == data.exog_columns.end()) {
            throw ConfigError("model.exog_columns: '" + name + "' is not listed in data.exog_columns");
        }
        spec.exog_columns.push_back(static_cast<std::size_t>(it - data.exog_columns.begin()));
    }
    spec.validate();
    return spec;
}

fitter::FitRequest RunConfig::fit_template() const {
    fitter::FitRequest req;
    req.spec = model_spec();
    req.grid = fit.grid();
    req.lambda = fit.lambda;
    req.init_strategy = fit.init;
    req.optimizer = fit.optimizer;
    req.optim_options = fit.optim;
    req.seed = seed;
    req.initial_quantiles = fit.initial_quantiles;
    req.beta_bound = fit.beta_bound;
    req.theta_bound = fit.theta_bound;
    req.restarts = fit.restarts;
    req.theta_grid_draws = fit.theta_grid_draws;
    return req;
}

backtest::BacktestPlan RunConfig::backtest_plan() const {
    backtest::BacktestPlan plan;
    plan.initial_window = backtest.initial_window;
    plan.horizon = backtest.horizon;
    plan.refit_every = backtest.refit_every;
    plan.warm_start = backtest.warm_start;
    plan.rolling_width = backtest.rolling_width;
    plan.fit_template = fit_template();
    return plan;
}

RunConfig parse_config(const json& j) {
    reject_unknown(j, "config", {"seed", "output_dir", "emit_plots", "plot_quantiles", "data", "dgp", "model", "fit",
                                 "montecarlo", "backtest"});
    RunConfig c;
    c.seed = get<std::uint64_t>(j, "seed", "config", c.seed);
    c.output_dir = get<std::string>(j, "output_dir", "config", c.output_dir.string());
    c.emit_plots = get<bool>(j, "emit_plots", "config", c.emit_plots);
    c.plot_quantiles = get<std::vector<double>>(j, "plot_quantiles", "config", c.plot_quantiles);
    if (j.contains("data")) {
        parse_data(j.at("data"), c.data);
    }
    if (j.contains("dgp")) {
        parse_dgp(j.at("dgp"), c.dgp, c.replications);
    }
    if (j.contains("model")) {
        parse_model(j.at("model"), c.model);
    }
    if (j.contains("fit")) {
        parse_fit(j.at("fit"), c.fit);
    }
    if (j.contains("montecarlo")) {
        parse_montecarlo(j.at("montecarlo"), c.montecarlo);
    }
    if (j.contains("backtest")) {
        parse_backtest(j.at("backtest"), c.backtest);
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path.string() + "'");
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config file '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

}  // namespace dynqr::cli
