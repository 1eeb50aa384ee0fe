#pragma once

#include "dynqr/quantile_core.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace dynqr::scoring {

/// Level weights for the quantile-weighted CRPS:
///   uniform 1/Q, centre tau(1-tau), left_tail (1-tau)^2, right_tail tau^2.
enum class WeightScheme { uniform, centre, left_tail, right_tail };

inline constexpr std::array<WeightScheme, 4> kAllSchemes{WeightScheme::uniform, WeightScheme::centre,
                                                         WeightScheme::left_tail, WeightScheme::right_tail};

[[nodiscard]] std::string_view to_string(WeightScheme s);
[[nodiscard]] double weight(WeightScheme s, double tau, std::size_t num_levels);

struct ScoreReport {
    bool sorted = false;
    double qs_total = 0.0;                  // mean QS over observations and levels
    std::array<double, 4> qwcrps{};         // indexed like kAllSchemes
    std::vector<double> per_observation;    // uniform-scheme score per observation

    [[nodiscard]] double score(WeightScheme s) const { return qwcrps[static_cast<std::size_t>(s)]; }
};

/// Mean over replications of the mean absolute coefficient error at one quantile.
/// Compares the beta row, plus theta when the estimate carries it.
[[nodiscard]] double coefficient_bias(std::span<const CoefficientSet> estimates, std::span<const CoefficientSet> truth,
                                      std::size_t quantile_index);

/// Percentage of (t, q) entries that differ from the row-sorted paths.
[[nodiscard]] double crossing_incidence(const Matrix& paths);

/// Ascending sort of a forecast quantile vector.
[[nodiscard]] std::vector<double> rearrange(std::span<const double> quantiles);

/// QS = 2 (1{y <= q} - tau)(q - y).
[[nodiscard]] double quantile_score(double y, double q, double tau);

/// Mean over observations of sum_q w(tau_q) QS_{t, tau_q}. forecasts is N x Q.
[[nodiscard]] double qwcrps(const Matrix& forecasts, std::span<const double> realized, const QuantileGrid& grid,
                            WeightScheme scheme);

/// Scores under all four schemes; rearranges each forecast row first when sorted is set.
[[nodiscard]] ScoreReport score_forecasts(const Matrix& forecasts, std::span<const double> realized,
                                          const QuantileGrid& grid, bool sorted);

}  // namespace dynqr::scoring
