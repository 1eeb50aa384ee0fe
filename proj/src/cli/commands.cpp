#include "dynqr/cli/commands.hpp"

#include "dynqr/cli/csv.hpp"
#include "dynqr/cli/report.hpp"
#include "dynqr/cli/svg.hpp"
#include "dynqr/seeding.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <ostream>

namespace dynqr::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path prepare_dir(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec || !fs::is_directory(cfg.output_dir)) {
        throw std::runtime_error("cannot create output directory '" + cfg.output_dir.string() + "'");
    }
    return cfg.output_dir;
}

std::string tau_label(double tau) { return fmt::format("q{:g}", tau); }

SeriesData load_data(const RunConfig& cfg) {
    if (!cfg.data.path) {
        throw ConfigError("no input data: set data.path in the config or pass --data");
    }
    return read_series_csv(*cfg.data.path, cfg.data.exog_columns);
}

void write_paths_csv(const fs::path& path, const FittedQuantilePaths& paths, const QuantileGrid& grid) {
    std::vector<std::string> header{"t"};
    for (double tau : grid.levels()) {
        header.push_back(tau_label(tau));
    }
    std::vector<std::vector<std::string>> rows;
    // The starting lagged quantile occupies the row before the first fitted one.
    if (paths.first_index > 0) {
        std::vector<std::string> row{std::to_string(paths.first_index - 1)};
        for (Eigen::Index q = 0; q < paths.init_values.size(); ++q) {
            row.push_back(format_number(paths.init_values(q)));
        }
        rows.push_back(std::move(row));
    }
    for (Eigen::Index t = 0; t < paths.values.rows(); ++t) {
        std::vector<std::string> row{std::to_string(paths.first_index + static_cast<std::size_t>(t))};
        for (Eigen::Index q = 0; q < paths.values.cols(); ++q) {
            row.push_back(format_number(paths.values(t, q)));
        }
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

void write_series_csv(const fs::path& path, const SeriesData& data) {
    std::vector<std::string> header{"t", "y"};
    header.insert(header.end(), data.exog_names.begin(), data.exog_names.end());
    std::vector<std::vector<std::string>> rows;
    for (std::size_t t = 0; t < data.size(); ++t) {
        std::vector<std::string> row{std::to_string(t), format_number(data.y[t])};
        for (Eigen::Index c = 0; c < data.exog.cols(); ++c) {
            row.push_back(format_number(data.exog(static_cast<Eigen::Index>(t), c)));
        }
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

struct Estimator {
    std::string name;
    double lambda;
    fitter::OptimizerKind optimizer;
};

std::vector<Estimator> estimators(const MonteCarloBlock& mc) {
    std::vector<double> lambdas = mc.lambdas;
    std::sort(lambdas.begin(), lambdas.end());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
    std::vector<Estimator> out;
    for (double l : lambdas) {
        out.push_back({"DynQR", l, fitter::OptimizerKind::cmaes});
    }
    if (mc.include_nelder_mead) {
        out.push_back({"CAViaR-NM", 0.0, fitter::OptimizerKind::nelder_mead});
    }
    return out;
}

}  // namespace

Outputs cmd_simulate(const RunConfig& cfg) {
    const fs::path dir = prepare_dir(cfg);
    dgp::DgpConfig dcfg = cfg.dgp;
    dcfg.seed = cfg.seed;
    const QuantileGrid grid = cfg.fit.grid();
    const auto reps = dgp::run_replications(dcfg, cfg.replications, grid);

    Outputs written;
    json rep_info = json::array();
    for (std::size_t r = 0; r < reps.size(); ++r) {
        const fs::path file = dir / fmt::format("rep_{:03d}.csv", r);
        write_series_csv(file, reps[r].data);
        written.push_back(file);
        rep_info.push_back(json{{"file", file.filename().string()}, {"seed", reps[r].seed}, {"attempts", reps[r].attempts}});
    }
    const ModelSpec est_spec = dgp::estimation_spec(dcfg);
    json truth = coefficients_json(dgp::true_coefficient_set(dcfg, grid), grid,
                                   covariate_names(est_spec, {"x_exog"}));
    truth["design"] = std::string(dgp::to_string(dcfg.design));
    truth["process"] = std::string(dgp::to_string(dcfg.process));
    truth["T"] = dcfg.T;
    truth["burn_in"] = dcfg.burn_in;
    truth["master_seed"] = cfg.seed;
    truth["replications"] = rep_info;
    const fs::path truth_file = dir / "truth.json";
    write_text(truth_file, dump(truth));
    written.push_back(truth_file);
    return written;
}

Outputs cmd_fit(const RunConfig& cfg) {
    const SeriesData data = load_data(cfg);
    const fs::path dir = prepare_dir(cfg);
    fitter::FitRequest req = cfg.fit_template();
    req.data = data;
    const fitter::FitResult fit = fitter::fit(req);
    const auto names = covariate_names(req.spec, data.exog_names);

    Outputs written;
    const fs::path coef_file = dir / "coefficients.json";
    write_text(coef_file, dump(fit_json(fit, req.grid, names)));
    written.push_back(coef_file);
    const fs::path paths_file = dir / "fitted_paths.csv";
    write_paths_csv(paths_file, fit.paths, req.grid);
    written.push_back(paths_file);

    if (cfg.emit_plots) {
        FanSeries observed{"observed", {}, data.y};
        for (std::size_t t = 0; t < data.size(); ++t) {
            observed.x.push_back(static_cast<double>(t));
        }
        std::vector<FanSeries> lines;
        for (std::size_t q : nearest_levels(req.grid, cfg.plot_quantiles)) {
            FanSeries s{fmt::format("tau = {:g}", req.grid[q]), {}, {}};
            for (Eigen::Index t = 0; t < fit.paths.values.rows(); ++t) {
                s.x.push_back(static_cast<double>(fit.paths.first_index + static_cast<std::size_t>(t)));
                s.y.push_back(fit.paths.values(t, static_cast<Eigen::Index>(q)));
            }
            lines.push_back(std::move(s));
        }
        const fs::path svg_file = dir / "fan_chart.svg";
        write_text(svg_file, fan_chart_svg(observed, lines, fmt::format("Fitted quantiles (lambda = {:g})", req.lambda)));
        written.push_back(svg_file);
    }
    return written;
}

Outputs cmd_montecarlo(const RunConfig& cfg) {
    const fs::path dir = prepare_dir(cfg);
    const MonteCarloBlock& mc = cfg.montecarlo;
    const QuantileGrid grid = cfg.fit.grid();
    for (double tau : mc.report_quantiles) {
        if (!grid.contains(tau)) {
            throw ConfigError("montecarlo.report_quantiles: " + format_number(tau) + " is not one of fit.quantiles");
        }
    }
    const auto ests = estimators(mc);
    const auto cell_seeds = derive_seeds(cfg.seed, mc.designs.size() * mc.sample_sizes.size());

    std::vector<std::vector<std::string>> bias_rows, cross_rows;
    json bias_json = json::array(), cross_json = json::array();
    std::size_t cell = 0;
    for (dgp::Design design : mc.designs) {
        for (std::size_t T : mc.sample_sizes) {
            dgp::DgpConfig dcfg = cfg.dgp;
            dcfg.design = design;
            dcfg.T = T;
            dcfg.seed = cell_seeds[cell++];
            const auto reps = dgp::run_replications(dcfg, mc.replications, grid);
            const ModelSpec spec = dgp::estimation_spec(dcfg);
            const std::string design_name(dgp::to_string(design));
            const std::string process_name(dgp::to_string(dcfg.process));

            for (const Estimator& est : ests) {
                for (fitter::InitStrategy init : mc.init_strategies) {
                    std::vector<CoefficientSet> estimates, truths;
                    double crossing = 0.0;
                    for (std::size_t r = 0; r < reps.size(); ++r) {
                        fitter::FitRequest req = cfg.fit_template();
                        req.data = reps[r].data;
                        req.spec = spec;
                        req.grid = grid;
                        req.lambda = est.lambda;
                        req.optimizer = est.optimizer;
                        req.init_strategy = init;
                        req.seed = splitmix64(reps[r].seed);
                        try {
                            fitter::FitResult fit = fitter::fit(req);
                            crossing += fit.crossing_incidence_pct;
                            estimates.push_back(std::move(fit.coefficients));
                            truths.push_back(reps[r].true_coefficients);
                        } catch (const std::exception& e) {
                            throw std::runtime_error(fmt::format("{} (lambda {:g}, init {}, design {}, T {}) replication {}: {}",
                                                                 est.name, est.lambda, fitter::to_string(init),
                                                                 design_name, T, r, e.what()));
                        }
                    }
                    crossing /= static_cast<double>(reps.size());
                    const std::string init_name(fitter::to_string(init));
                    for (double tau : mc.report_quantiles) {
                        const double bias = scoring::coefficient_bias(estimates, truths, grid.index_of(tau));
                        bias_rows.push_back({est.name, format_number(est.lambda), init_name, design_name, process_name,
                                             std::to_string(T), format_number(tau), format_number(bias)});
                        bias_json.push_back(json{{"estimator", est.name}, {"lambda", est.lambda}, {"init", init_name},
                                                 {"design", design_name}, {"process", process_name}, {"T", T},
                                                 {"tau", tau}, {"bias", bias}});
                    }
                    cross_rows.push_back({est.name, format_number(est.lambda), init_name, design_name, process_name,
                                          std::to_string(T), format_number(crossing)});
                    cross_json.push_back(json{{"estimator", est.name}, {"lambda", est.lambda}, {"init", init_name},
                                              {"design", design_name}, {"process", process_name}, {"T", T},
                                              {"crossing_pct", crossing}});
                }
            }
        }
    }

    Outputs written;
    const fs::path bias_csv = dir / "bias.csv";
    write_csv(bias_csv, {"estimator", "lambda", "init", "design", "process", "T", "tau", "bias"}, bias_rows);
    const fs::path cross_csv = dir / "crossing.csv";
    write_csv(cross_csv, {"estimator", "lambda", "init", "design", "process", "T", "crossing_pct"}, cross_rows);
    const fs::path bias_js = dir / "bias.json";
    write_text(bias_js, dump(json{{"replications", mc.replications}, {"master_seed", cfg.seed}, {"rows", bias_json}}));
    const fs::path cross_js = dir / "crossing.json";
    write_text(cross_js,
               dump(json{{"replications", mc.replications}, {"master_seed", cfg.seed}, {"rows", cross_json}}));
    written = {bias_csv, cross_csv, bias_js, cross_js};
    return written;
}

Outputs cmd_backtest(const RunConfig& cfg) {
    SeriesData data;
    if (cfg.data.path) {
        data = load_data(cfg);
    } else {
        dgp::DgpConfig dcfg = cfg.dgp;
        dcfg.seed = cfg.seed;
        data = dgp::run_replications(dcfg, 1, cfg.fit.grid()).front().data;
    }
    backtest::BacktestPlan plan = cfg.backtest_plan();
    if (data.size() < plan.initial_window + 2) {
        throw std::invalid_argument(fmt::format("series has {} observations; backtest needs at least {}", data.size(),
                                                plan.initial_window + 2));
    }
    const fs::path dir = prepare_dir(cfg);
    const backtest::BacktestResult result = backtest::run_backtest(data, plan);
    const QuantileGrid& grid = plan.fit_template.grid;

    std::vector<std::string> header{"origin", "target", "realized"};
    for (double tau : grid.levels()) {
        header.push_back(tau_label(tau));
    }
    std::vector<std::vector<std::string>> rows;
    std::vector<std::vector<std::string>> snapshot_rows;
    const auto names = covariate_names(plan.fit_template.spec, data.exog_names);
    for (const auto& rec : result.records) {
        std::vector<std::string> row{std::to_string(rec.origin_index), std::to_string(rec.origin_index + 1),
                                     format_number(rec.realized)};
        for (double v : rec.forecast) {
            row.push_back(format_number(v));
        }
        rows.push_back(std::move(row));
        for (std::size_t q = 0; q < grid.size(); ++q) {
            std::vector<std::string> s{std::to_string(rec.origin_index), format_number(grid[q])};
            for (Eigen::Index k = 0; k < rec.coefficients.beta.cols(); ++k) {
                s.push_back(format_number(rec.coefficients.beta(static_cast<Eigen::Index>(q), k)));
            }
            for (Eigen::Index l = 0; l < rec.coefficients.theta.cols(); ++l) {
                s.push_back(format_number(rec.coefficients.theta(static_cast<Eigen::Index>(q), l)));
            }
            snapshot_rows.push_back(std::move(s));
        }
    }
    std::vector<std::string> snap_header{"origin", "tau"};
    for (const auto& n : names) {
        snap_header.push_back("beta_" + n);
    }
    if (plan.fit_template.spec.quantile_lags > 0) {
        snap_header.emplace_back("theta");
    }

    Outputs written;
    const fs::path forecasts = dir / "forecasts.csv";
    write_csv(forecasts, header, rows);
    const fs::path snapshots = dir / "coefficient_snapshots.csv";
    write_csv(snapshots, snap_header, snapshot_rows);
    const fs::path scores = dir / "scores.json";
    write_text(scores, dump(json{{"forecast_count", result.records.size()},
                                 {"initial_window", plan.initial_window},
                                 {"lambda", plan.fit_template.lambda},
                                 {"scores", scores_json(result.unsorted, result.sorted)}}));
    written = {forecasts, snapshots, scores};
    return written;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Crossing-penalised dynamic quantile regression"};
    app.require_subcommand(1);
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> data_path;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON configuration file")->required();
        sub->add_option("--seed", seed, "master seed (overrides the config)");
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_option("--data", data_path, "input CSV (overrides data.path)");
    };
    auto* simulate = app.add_subcommand("simulate", "simulate Monte Carlo datasets");
    auto* fit = app.add_subcommand("fit", "fit the model to a CSV series");
    auto* montecarlo = app.add_subcommand("montecarlo", "bias and crossing tables over replications");
    auto* backtest = app.add_subcommand("backtest", "expanding-window one-step-ahead forecasts");
    for (auto* sub : {simulate, fit, montecarlo, backtest}) {
        add_common(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << error_json("usage", e.what());
        return 2;
    }

    try {
        RunConfig cfg = load_config(config_path);
        if (seed) {
            cfg.seed = *seed;
        }
        if (out_dir) {
            cfg.output_dir = *out_dir;
        }
        if (data_path) {
            cfg.data.path = *data_path;
        }
        Outputs written;
        if (simulate->parsed()) {
            written = cmd_simulate(cfg);
        } else if (fit->parsed()) {
            written = cmd_fit(cfg);
        } else if (montecarlo->parsed()) {
            written = cmd_montecarlo(cfg);
        } else {
            written = cmd_backtest(cfg);
        }
        for (const auto& p : written) {
            out << p.string() << '\n';
        }
        return 0;
    } catch (const ConfigError& e) {
        err << error_json("config", e.what());
        return 2;
    } catch (const CsvError& e) {
        err << error_json("input", e.what());
        return 3;
    } catch (const std::invalid_argument& e) {
        err << error_json("invalid_argument", e.what());
        return 3;
    } catch (const std::exception& e) {
        err << error_json("runtime", e.what());
        return 1;
    }
}

}  // namespace dynqr::cli
