#include "dynqr/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dynqr::scoring {

std::string_view to_string(WeightScheme s) {
    switch (s) {
        case WeightScheme::uniform: return "uniform";
        case WeightScheme::centre: return "centre";
        case WeightScheme::left_tail: return "left_tail";
        case WeightScheme::right_tail: return "right_tail";
    }
    return "unknown";
}

double weight(WeightScheme s, double tau, std::size_t num_levels) {
    switch (s) {
        case WeightScheme::uniform: return 1.0 / static_cast<double>(num_levels);
        case WeightScheme::centre: return tau * (1.0 - tau);
        case WeightScheme::left_tail: return (1.0 - tau) * (1.0 - tau);
        case WeightScheme::right_tail: return tau * tau;
    }
    throw std::invalid_argument("unknown weight scheme");
}

double coefficient_bias(std::span<const CoefficientSet> estimates, std::span<const CoefficientSet> truth,
                        std::size_t quantile_index) {
    if (estimates.empty() || estimates.size() != truth.size()) {
        throw std::invalid_argument("coefficient_bias: estimates and truth must pair up");
    }
    double total = 0.0;
    for (std::size_t r = 0; r < estimates.size(); ++r) {
        const CoefficientSet& est = estimates[r];
        const CoefficientSet& tru = truth[r];
        const auto q = static_cast<Eigen::Index>(quantile_index);
        if (quantile_index >= est.num_quantiles() || quantile_index >= tru.num_quantiles() ||
            est.num_covariates() != tru.num_covariates() || est.quantile_lags() > tru.quantile_lags()) {
            throw std::invalid_argument("coefficient_bias: dimension mismatch");
        }
        double sum = (est.beta.row(q) - tru.beta.row(q)).cwiseAbs().sum();
        std::size_t count = est.num_covariates();
        for (Eigen::Index l = 0; l < est.theta.cols(); ++l) {
            sum += std::abs(est.theta(q, l) - tru.theta(q, l));
            ++count;
        }
        total += sum / static_cast<double>(count);
    }
    return total / static_cast<double>(estimates.size());
}

double crossing_incidence(const Matrix& paths) {
    const Eigen::Index T = paths.rows();
    const Eigen::Index Q = paths.cols();
    if (T == 0 || Q == 0) {
        return 0.0;
    }
    std::size_t mismatches = 0;
    std::vector<double> row(static_cast<std::size_t>(Q));
    for (Eigen::Index t = 0; t < T; ++t) {
        for (Eigen::Index q = 0; q < Q; ++q) {
            row[static_cast<std::size_t>(q)] = paths(t, q);
        }
        std::stable_sort(row.begin(), row.end());
        for (Eigen::Index q = 0; q < Q; ++q) {
            if (row[static_cast<std::size_t>(q)] != paths(t, q)) {
                ++mismatches;
            }
        }
    }
    return 100.0 * static_cast<double>(mismatches) / (static_cast<double>(T) * static_cast<double>(Q));
}

std::vector<double> rearrange(std::span<const double> quantiles) {
    std::vector<double> out(quantiles.begin(), quantiles.end());
    std::stable_sort(out.begin(), out.end());
    return out;
}

double quantile_score(double y, double q, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::invalid_argument("quantile_score: tau outside (0,1)");
    }
    const double indicator = y <= q ? 1.0 : 0.0;
    return 2.0 * (indicator - tau) * (q - y);
}

namespace {

void check_dims(const Matrix& forecasts, std::span<const double> realized, const QuantileGrid& grid) {
    if (static_cast<std::size_t>(forecasts.rows()) != realized.size() ||
        static_cast<std::size_t>(forecasts.cols()) != grid.size()) {
        throw std::invalid_argument("forecast matrix does not match realized values and grid");
    }
}

double row_score(const double* row, double y, const QuantileGrid& grid, WeightScheme scheme) {
    double s = 0.0;
    for (std::size_t q = 0; q < grid.size(); ++q) {
        s += weight(scheme, grid[q], grid.size()) * quantile_score(y, row[q], grid[q]);
    }
    return s;
}

}  // namespace

double qwcrps(const Matrix& forecasts, std::span<const double> realized, const QuantileGrid& grid,
              WeightScheme scheme) {
    check_dims(forecasts, realized, grid);
    if (realized.empty()) {
        return 0.0;
    }
    std::vector<double> row(grid.size());
    double total = 0.0;
    for (std::size_t t = 0; t < realized.size(); ++t) {
        for (std::size_t q = 0; q < grid.size(); ++q) {
            row[q] = forecasts(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(q));
        }
        total += row_score(row.data(), realized[t], grid, scheme);
    }
    return total / static_cast<double>(realized.size());
}

ScoreReport score_forecasts(const Matrix& forecasts, std::span<const double> realized, const QuantileGrid& grid,
                            bool sorted) {
    check_dims(forecasts, realized, grid);
    Matrix used = forecasts;
    if (sorted) {
        for (Eigen::Index t = 0; t < used.rows(); ++t) {
            std::vector<double> row(static_cast<std::size_t>(used.cols()));
            for (Eigen::Index q = 0; q < used.cols(); ++q) {
                row[static_cast<std::size_t>(q)] = used(t, q);
            }
            const auto r = rearrange(row);
            for (Eigen::Index q = 0; q < used.cols(); ++q) {
                used(t, q) = r[static_cast<std::size_t>(q)];
            }
        }
    }
    ScoreReport report;
    report.sorted = sorted;
    for (std::size_t s = 0; s < kAllSchemes.size(); ++s) {
        report.qwcrps[s] = qwcrps(used, realized, grid, kAllSchemes[s]);
    }
    report.qs_total = report.qwcrps[0];
    report.per_observation.resize(realized.size());
    std::vector<double> row(grid.size());
    for (std::size_t t = 0; t < realized.size(); ++t) {
        for (std::size_t q = 0; q < grid.size(); ++q) {
            row[q] = used(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(q));
        }
        report.per_observation[t] = row_score(row.data(), realized[t], grid, WeightScheme::uniform);
    }
    return report;
}

}  // namespace dynqr::scoring
