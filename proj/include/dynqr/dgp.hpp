#pragma once

#include "dynqr/quantile_core.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace dynqr::dgp {

/// Heteroskedasticity designs: which entries of xi are active.
///   y1: intercept only; y2: intercept and exogenous; y3: all four.
enum class Design { y1, y2, y3 };

/// QAR(1) has no lagged-quantile term; DQAR(1,1) has one.
enum class Process { qar1, dqar11 };

[[nodiscard]] std::string_view to_string(Design d);
[[nodiscard]] std::string_view to_string(Process p);
[[nodiscard]] Design parse_design(std::string_view s);
[[nodiscard]] Process parse_process(std::string_view s);

/// Coefficient order used throughout: intercept, y-lag, exogenous, quantile-lag.
using LevelCoefficients = std::array<double, 4>;

struct DgpConfig {
    LevelCoefficients theta_base{2.0, 0.5, -3.0, 0.25};
    LevelCoefficients xi{1.0, 0.15, 1.0, 0.075};
    Design design = Design::y1;
    Process process = Process::qar1;
    std::size_t T = 50;
    std::size_t burn_in = 50;
    std::size_t fine_grid_size = 999;  // levels k / (n + 1)
    std::size_t max_attempts = 100;
    std::uint64_t seed = 0;

    void validate() const;
    /// xi with the entries inactive under `design` set to zero.
    [[nodiscard]] LevelCoefficients active_xi() const;
};

class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Standard normal CDF.
[[nodiscard]] double normal_cdf(double x);

/// Standard normal quantile function; |Phi(result) - p| < 1e-12.
[[nodiscard]] double inverse_normal_cdf(double p);

/// theta(tau) = theta + xi * Phi^{-1}(tau) per level, masked by design; the
/// quantile-lag entry is zero for QAR(1).
[[nodiscard]] std::vector<LevelCoefficients> make_coefficients(const DgpConfig& cfg, const QuantileGrid& grid);

/// The same coefficients as a CoefficientSet (beta Q x 3, theta Q x 1).
[[nodiscard]] CoefficientSet true_coefficient_set(const DgpConfig& cfg, const QuantileGrid& grid);

/// Model specification that matches the data generating process.
[[nodiscard]] ModelSpec estimation_spec(const DgpConfig& cfg);

/**
 * @brief Draws one observation from a discretised conditional distribution.
 *
 * `fine` holds the conditional quantiles at levels k/(F+1), k = 1..F. The draw
 * u selects the bracket containing it and v interpolates within it. Below the
 * lowest (above the highest) level the bracket is extended by 0.001 * iqr.
 */
[[nodiscard]] double interpolate_draw(std::span<const double> fine, double iqr, double u, double v);

struct SimulatedDataset {
    SeriesData data;                  // y plus one exogenous U(0,1) column "x_exog"
    CoefficientSet true_coefficients; // on the estimation grid
    Matrix true_paths;                // T x Q true conditional quantiles
    std::size_t attempts = 1;
    std::uint64_t seed = 0;
};

/// Simulates T + burn_in steps, discards the burn-in, and re-simulates from fresh
/// draws whenever the retained fine-grid quantiles cross.
[[nodiscard]] SimulatedDataset simulate_path(const DgpConfig& cfg, const QuantileGrid& estimation_grid,
                                             std::mt19937_64& rng);

/// Deterministic, pairwise-distinct per-replication seeds (SplitMix64 stream).
[[nodiscard]] std::vector<std::uint64_t> replication_seeds(std::uint64_t master_seed, std::size_t n);

/// n_reps independent datasets; replication i uses replication_seeds(cfg.seed, n_reps)[i].
[[nodiscard]] std::vector<SimulatedDataset> run_replications(const DgpConfig& cfg, std::size_t n_reps,
                                                             const QuantileGrid& estimation_grid);

}  // namespace dynqr::dgp
