#pragma once

#include "dynqr/backtest.hpp"
#include "dynqr/dgp.hpp"
#include "dynqr/fitter.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynqr::cli {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct DataSource {
    std::optional<std::filesystem::path> path;
    std::vector<std::string> exog_columns;  // names in the CSV header
};

struct ModelBlock {
    int lag_y = 1;
    bool asymmetric_slope = false;
    int quantile_lags = 1;
    std::vector<std::string> exog_columns;  // subset of data.exog_columns, by name
};

struct FitBlock {
    std::vector<double> quantiles;  // empty -> deciles
    double lambda = 0.0;
    fitter::InitStrategy init = fitter::InitStrategy::zeros;
    fitter::OptimizerKind optimizer = fitter::OptimizerKind::cmaes;
    InitialQuantiles initial_quantiles = InitialQuantiles::empirical;
    std::size_t restarts = 1;
    double beta_bound = 1e3;
    double theta_bound = 1.0;
    std::size_t theta_grid_draws = 1000;
    optim::OptimOptions optim;

    [[nodiscard]] QuantileGrid grid() const;
};

struct MonteCarloBlock {
    std::size_t replications = 2;
    std::vector<double> lambdas{0.0, 1.0, 5.0};
    std::vector<fitter::InitStrategy> init_strategies{fitter::InitStrategy::zeros};
    bool include_nelder_mead = true;
    std::vector<dgp::Design> designs{dgp::Design::y1};
    std::vector<std::size_t> sample_sizes{50};
    std::vector<double> report_quantiles{0.1, 0.5, 0.9};
};

struct BacktestBlock {
    std::size_t initial_window = 100;
    std::size_t horizon = 1;
    std::size_t refit_every = 1;
    bool warm_start = true;
    std::optional<std::size_t> rolling_width;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "dynqr_out";
    bool emit_plots = true;
    std::vector<double> plot_quantiles{0.05, 0.5, 0.95};
    DataSource data;
    dgp::DgpConfig dgp;
    std::size_t replications = 1;  // simulate command
    ModelBlock model;
    FitBlock fit;
    MonteCarloBlock montecarlo;
    BacktestBlock backtest;

    /// Model spec with exogenous names resolved against data.exog_columns.
    [[nodiscard]] ModelSpec model_spec() const;
    /// Fit request template (data left empty).
    [[nodiscard]] fitter::FitRequest fit_template() const;
    [[nodiscard]] backtest::BacktestPlan backtest_plan() const;
};

/// Parses and validates; unknown keys anywhere are rejected with their JSON path.
[[nodiscard]] RunConfig parse_config(const nlohmann::json& j);
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);

}  // namespace dynqr::cli
