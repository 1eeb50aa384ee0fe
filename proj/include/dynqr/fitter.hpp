#pragma once

#include "dynqr/optim.hpp"
#include "dynqr/quantile_core.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace dynqr::fitter {

enum class InitStrategy { zeros, qr_warm_start, explicit_coefficients };
enum class OptimizerKind { cmaes, nelder_mead };

[[nodiscard]] std::string_view to_string(InitStrategy s);
[[nodiscard]] std::string_view to_string(OptimizerKind k);
[[nodiscard]] InitStrategy parse_init_strategy(std::string_view s);
[[nodiscard]] OptimizerKind parse_optimizer(std::string_view s);

struct FitRequest {
    SeriesData data;
    ModelSpec spec;
    QuantileGrid grid = QuantileGrid::deciles();
    double lambda = 0.0;
    InitStrategy init_strategy = InitStrategy::zeros;
    std::optional<CoefficientSet> explicit_init;
    OptimizerKind optimizer = OptimizerKind::cmaes;
    optim::OptimOptions optim_options;
    std::uint64_t seed = 0;
    InitialQuantiles initial_quantiles = InitialQuantiles::empirical;
    double beta_bound = 1e3;
    double theta_bound = 1.0;
    std::size_t restarts = 1;            // independent optimizer runs, best kept
    std::size_t theta_grid_draws = 1000; // U(0,1) lagged-quantile candidates in the warm start

    void validate() const;
};

struct FitResult {
    CoefficientSet coefficients;
    FittedQuantilePaths paths;
    double lambda = 0.0;
    double objective_value = 0.0;
    double pinball_component = 0.0;
    double penalty_component = 0.0;
    double crossing_incidence_pct = 0.0;
    optim::OptimResult optim_diagnostics;
};

/// l = Q (K+1) + Q L.
[[nodiscard]] std::size_t parameter_count(std::size_t num_quantiles, std::size_t num_covariates,
                                          std::size_t quantile_lags);

/// Flattens beta rows in ascending-tau order, then theta rows.
[[nodiscard]] std::vector<double> pack(const CoefficientSet& coeffs);
[[nodiscard]] CoefficientSet unpack(std::span<const double> flat, std::size_t num_quantiles,
                                    std::size_t num_covariates, std::size_t quantile_lags);
/// unpack into an existing set of the right shape (no allocation).
void unpack_into(std::span<const double> flat, CoefficientSet& out);

/// Per-coordinate box: +-beta_bound for beta, +-theta_bound for theta.
[[nodiscard]] optim::Bounds coefficient_bounds(std::size_t num_quantiles, std::size_t num_covariates,
                                               std::size_t quantile_lags, double beta_bound, double theta_bound);

/**
 * @brief Starting coefficients from independent per-quantile static fits.
 *
 * Each quantile gets a small CMA-ES fit of the L = 0, lambda = 0 model. When the
 * model has a lagged quantile, theta_grid_draws U(0,1) candidates are scored
 * with beta held at the static fit and the best one is kept.
 */
[[nodiscard]] CoefficientSet qr_warm_start(const FitRequest& req, std::span<const double> init_values);

/// Minimises the penalised objective for the request.
[[nodiscard]] FitResult fit(const FitRequest& req);

/// True when a is preferred over b: lower objective, then lower penalty, then
/// lexicographically smaller packed coefficients.
[[nodiscard]] bool preferred(const FitResult& a, const FitResult& b);

struct QrOracleResult {
    Vector coefficients;
    double loss = 0.0;  // total (not averaged) pinball loss
};

/**
 * @brief Exact linear quantile regression by subset enumeration.
 *
 * Some optimal solution interpolates K+1 observations, so scanning every
 * nonsingular (K+1)-subset finds the minimum. Restricted to T <= 60, K+1 <= 3.
 */
[[nodiscard]] QrOracleResult qr_oracle(std::span<const double> y, const Matrix& X, double tau);

}  // namespace dynqr::fitter
