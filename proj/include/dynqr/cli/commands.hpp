#pragma once

#include "dynqr/cli/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace dynqr::cli {

/// Files written by a command, in write order.
using Outputs = std::vector<std::filesystem::path>;

/// One CSV per replication (t, y, x_exog) plus truth.json.
Outputs cmd_simulate(const RunConfig& cfg);
/// coefficients.json, fitted_paths.csv and, with emit_plots, fan_chart.svg.
Outputs cmd_fit(const RunConfig& cfg);
/// bias.csv/json and crossing.csv/json over estimators x init strategies x designs x sample sizes.
Outputs cmd_montecarlo(const RunConfig& cfg);
/// forecasts.csv, coefficient_snapshots.csv and scores.json. Without a data file a
/// single path is simulated from the dgp block.
Outputs cmd_backtest(const RunConfig& cfg);

/// Full command-line entry point; returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dynqr::cli
