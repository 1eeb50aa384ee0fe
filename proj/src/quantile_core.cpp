#include "dynqr/quantile_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace dynqr {

QuantileGrid::QuantileGrid(std::vector<double> levels) : levels_(std::move(levels)) {
    if (levels_.empty()) {
        throw std::invalid_argument("quantile grid must contain at least one level");
    }
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        const double tau = levels_[i];
        if (!(tau > 0.0 && tau < 1.0)) {
            throw std::invalid_argument("quantile level " + std::to_string(tau) + " outside (0,1)");
        }
        if (i > 0 && !(tau > levels_[i - 1])) {
            throw std::invalid_argument("quantile levels must be strictly increasing");
        }
    }
}

QuantileGrid QuantileGrid::deciles() {
    std::vector<double> levels;
    for (int k = 1; k <= 9; ++k) {
        levels.push_back(k / 10.0);
    }
    return QuantileGrid(std::move(levels));
}

QuantileGrid QuantileGrid::equispaced(std::size_t n) {
    std::vector<double> levels;
    levels.reserve(n);
    for (std::size_t k = 1; k <= n; ++k) {
        levels.push_back(static_cast<double>(k) / static_cast<double>(n + 1));
    }
    return QuantileGrid(std::move(levels));
}

bool QuantileGrid::contains(double tau) const noexcept {
    return std::any_of(levels_.begin(), levels_.end(), [tau](double l) { return std::abs(l - tau) < 1e-12; });
}

std::size_t QuantileGrid::index_of(double tau) const {
    for (std::size_t i = 0; i < levels_.size(); ++i) {
        if (std::abs(levels_[i] - tau) < 1e-12) {
            return i;
        }
    }
    throw std::invalid_argument("quantile level " + std::to_string(tau) + " is not on the grid");
}

void SeriesData::validate() const {
    if (static_cast<std::size_t>(exog.rows()) != y.size() && exog.cols() > 0) {
        throw std::invalid_argument("exogenous row count does not match series length");
    }
    if (!exog_names.empty() && exog_names.size() != static_cast<std::size_t>(exog.cols())) {
        throw std::invalid_argument("exogenous name count does not match column count");
    }
    if (!timestamps.empty() && timestamps.size() != y.size()) {
        throw std::invalid_argument("timestamp count does not match series length");
    }
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (!std::isfinite(y[t])) {
            throw std::invalid_argument("non-finite y at row " + std::to_string(t));
        }
    }
    if (exog.size() > 0 && !exog.allFinite()) {
        throw std::invalid_argument("non-finite exogenous value");
    }
}

SeriesData SeriesData::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > y.size()) {
        throw std::out_of_range("series slice out of range");
    }
    SeriesData out;
    out.y.assign(y.begin() + static_cast<std::ptrdiff_t>(begin), y.begin() + static_cast<std::ptrdiff_t>(end));
    const auto n = static_cast<Eigen::Index>(end - begin);
    if (exog.cols() > 0) {
        out.exog = exog.middleRows(static_cast<Eigen::Index>(begin), n);
    } else {
        out.exog = Matrix(n, 0);
    }
    out.exog_names = exog_names;
    if (!timestamps.empty()) {
        out.timestamps.assign(timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                              timestamps.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

SeriesData SeriesData::head(std::size_t n) const { return slice(0, n); }

void ModelSpec::validate() const {
    if (lag_y != 0 && lag_y != 1) {
        throw std::invalid_argument("lag_y must be 0 or 1");
    }
    if (quantile_lags != 0 && quantile_lags != 1) {
        throw std::invalid_argument("quantile_lags must be 0 or 1");
    }
    if (asymmetric_slope && lag_y < 1) {
        throw std::invalid_argument("asymmetric_slope requires lag_y >= 1");
    }
    if (!include_intercept) {
        throw std::invalid_argument("the covariate vector must start with an intercept");
    }
}

std::size_t ModelSpec::num_covariates() const noexcept {
    std::size_t k = include_intercept ? 1 : 0;
    if (lag_y >= 1) {
        k += asymmetric_slope ? 2 : 1;
    }
    return k + exog_columns.size();
}

CoefficientSet::CoefficientSet(std::size_t num_quantiles, std::size_t num_covariates, std::size_t quantile_lags)
    : beta(Matrix::Zero(static_cast<Eigen::Index>(num_quantiles), static_cast<Eigen::Index>(num_covariates))),
      theta(Matrix::Zero(static_cast<Eigen::Index>(num_quantiles), static_cast<Eigen::Index>(quantile_lags))) {}

bool CoefficientSet::all_finite() const { return beta.allFinite() && theta.allFinite(); }

bool operator==(const CoefficientSet& a, const CoefficientSet& b) {
    return a.beta.rows() == b.beta.rows() && a.beta.cols() == b.beta.cols() && a.theta.rows() == b.theta.rows() &&
           a.theta.cols() == b.theta.cols() && a.beta == b.beta && a.theta == b.theta;
}

namespace {

void fill_design_row(const SeriesData& data, const ModelSpec& spec, std::size_t t, double* row) {
    std::size_t c = 0;
    row[c++] = 1.0;
    if (spec.lag_y >= 1) {
        const double prev = data.y[t - 1];
        if (spec.asymmetric_slope) {
            row[c++] = prev > 0.0 ? prev : 0.0;
            row[c++] = prev < 0.0 ? -prev : 0.0;
        } else {
            row[c++] = prev;
        }
    }
    for (std::size_t col : spec.exog_columns) {
        row[c++] = data.exog(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(col));
    }
}

}  // namespace

Design build_design(const SeriesData& data, const ModelSpec& spec) {
    spec.validate();
    data.validate();
    const std::size_t T = data.size();
    if (T == 0) {
        throw std::invalid_argument("empty series");
    }
    const auto lag = static_cast<std::size_t>(spec.lag_y);
    if (lag >= T) {
        throw std::invalid_argument("lag request exceeds series length");
    }
    for (std::size_t col : spec.exog_columns) {
        if (col >= static_cast<std::size_t>(data.exog.cols())) {
            throw std::invalid_argument("exogenous column " + std::to_string(col) + " does not exist");
        }
    }

    const std::size_t k = spec.num_covariates();
    Design d;
    d.X = Matrix::Zero(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(k));
    d.valid.assign(T, 0);
    d.first_valid = lag;
    std::vector<double> row(k);
    for (std::size_t t = 0; t < T; ++t) {
        if (t < lag) {
            d.X(static_cast<Eigen::Index>(t), 0) = 1.0;
            continue;
        }
        d.valid[t] = 1;
        fill_design_row(data, spec, t, row.data());
        for (std::size_t c = 0; c < k; ++c) {
            d.X(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = row[c];
        }
    }
    return d;
}

Vector design_row(const SeriesData& data, const ModelSpec& spec, std::size_t t) {
    spec.validate();
    if (t < static_cast<std::size_t>(spec.lag_y) || t >= data.size()) {
        throw std::out_of_range("design row " + std::to_string(t) + " is not constructible");
    }
    for (std::size_t col : spec.exog_columns) {
        if (col >= static_cast<std::size_t>(data.exog.cols())) {
            throw std::invalid_argument("missing exogenous column " + std::to_string(col));
        }
    }
    Vector row(static_cast<Eigen::Index>(spec.num_covariates()));
    fill_design_row(data, spec, t, row.data());
    return row;
}

double pinball_loss(double u, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::invalid_argument("pinball_loss: tau outside (0,1)");
    }
    return u < 0.0 ? (tau - 1.0) * u : tau * u;
}

bool quantile_recursion_into(const CoefficientSet& coeffs, const Matrix& X, std::span<const double> init,
                             Matrix& out) {
    const Eigen::Index T = X.rows();
    const Eigen::Index Q = coeffs.beta.rows();
    if (coeffs.beta.cols() != X.cols()) {
        throw std::invalid_argument("coefficient width does not match design width");
    }
    if (static_cast<std::size_t>(Q) != init.size()) {
        throw std::invalid_argument("initial value count does not match quantile count");
    }
    if (coeffs.theta.rows() != Q || coeffs.theta.cols() > 1) {
        throw std::invalid_argument("theta must be Q x L with L in {0,1}");
    }
    out.resize(T, Q);
    // X * beta^T gives the static part for every (t, q) in one product.
    out.noalias() = X * coeffs.beta.transpose();
    if (coeffs.theta.cols() == 1) {
        for (Eigen::Index q = 0; q < Q; ++q) {
            const double theta = coeffs.theta(q, 0);
            double prev = init[static_cast<std::size_t>(q)];
            for (Eigen::Index t = 0; t < T; ++t) {
                prev = out(t, q) + prev * theta;
                out(t, q) = prev;
            }
        }
    }
    return out.allFinite();
}

FittedQuantilePaths quantile_recursion(const CoefficientSet& coeffs, const Matrix& X, std::span<const double> init) {
    FittedQuantilePaths paths;
    if (!quantile_recursion_into(coeffs, X, init, paths.values)) {
        throw RecursionError("quantile recursion produced a non-finite value");
    }
    paths.init_values = Eigen::Map<const Vector>(init.data(), static_cast<Eigen::Index>(init.size()));
    return paths;
}

double crossing_distance(const Matrix& paths) {
    const Eigen::Index T = paths.rows();
    const Eigen::Index Q = paths.cols();
    if (Q < 2) {
        throw std::invalid_argument("crossing_distance needs at least two quantiles");
    }
    if (T == 0) {
        return 0.0;
    }
    double sum = 0.0;
    for (Eigen::Index q = 1; q < Q; ++q) {
        for (Eigen::Index t = 0; t < T; ++t) {
            const double gap = paths(t, q) - paths(t, q - 1);
            if (gap < 0.0) {
                sum -= gap;
            }
        }
    }
    return sum / (static_cast<double>(Q - 1) * static_cast<double>(T));
}

double crossing_distance(const FittedQuantilePaths& paths) { return crossing_distance(paths.values); }

double average_pinball_loss(std::span<const double> y, const Matrix& paths, const QuantileGrid& grid) {
    const Eigen::Index T = paths.rows();
    const Eigen::Index Q = paths.cols();
    if (static_cast<std::size_t>(T) != y.size() || static_cast<std::size_t>(Q) != grid.size()) {
        throw std::invalid_argument("average_pinball_loss: dimension mismatch");
    }
    if (T == 0) {
        return 0.0;
    }
    double sum = 0.0;
    for (Eigen::Index q = 0; q < Q; ++q) {
        const double tau = grid[static_cast<std::size_t>(q)];
        for (Eigen::Index t = 0; t < T; ++t) {
            const double u = y[static_cast<std::size_t>(t)] - paths(t, q);
            sum += u < 0.0 ? (tau - 1.0) * u : tau * u;
        }
    }
    return sum / (static_cast<double>(Q) * static_cast<double>(T));
}

double empirical_quantile(std::span<const double> values, double tau) {
    if (values.empty()) {
        throw std::invalid_argument("empirical_quantile of an empty sample");
    }
    if (!(tau >= 0.0 && tau <= 1.0)) {
        throw std::invalid_argument("empirical_quantile: tau outside [0,1]");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = tau * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<double> initial_quantiles(std::span<const double> y, const QuantileGrid& grid,
                                      InitialQuantiles strategy) {
    std::vector<double> init(grid.size(), 0.0);
    if (strategy == InitialQuantiles::empirical) {
        for (std::size_t q = 0; q < grid.size(); ++q) {
            init[q] = empirical_quantile(y, grid[q]);
        }
    }
    return init;
}

DynqrObjective::DynqrObjective(const SeriesData& data, const ModelSpec& spec, QuantileGrid grid, double lambda,
                               std::vector<double> init)
    : spec_(spec), grid_(std::move(grid)), lambda_(lambda), init_(std::move(init)) {
    if (!(lambda_ >= 0.0) || !std::isfinite(lambda_)) {
        throw std::invalid_argument("lambda must be a finite non-negative number");
    }
    if (init_.size() != grid_.size()) {
        throw std::invalid_argument("initial value count does not match quantile count");
    }
    const Design d = build_design(data, spec_);
    X_ = d.effective();
    first_index_ = d.first_valid;
    y_.assign(data.y.begin() + static_cast<std::ptrdiff_t>(d.first_valid), data.y.end());
}

ObjectiveBreakdown DynqrObjective::breakdown(const CoefficientSet& coeffs) const {
    if (coeffs.num_quantiles() != grid_.size()) {
        throw std::invalid_argument("coefficient rows do not match the quantile grid");
    }
    if (coeffs.quantile_lags() != static_cast<std::size_t>(spec_.quantile_lags)) {
        throw std::invalid_argument("theta width does not match the model's quantile lags");
    }
    thread_local Matrix scratch;
    if (!quantile_recursion_into(coeffs, X_, init_, scratch)) {
        throw RecursionError("quantile recursion produced a non-finite value");
    }
    ObjectiveBreakdown out;
    out.pinball = average_pinball_loss(y_, scratch, grid_);
    out.penalty = grid_.size() >= 2 ? crossing_distance(scratch) : 0.0;
    out.total = out.pinball + lambda_ * out.penalty;
    return out;
}

double DynqrObjective::operator()(const CoefficientSet& coeffs) const {
    try {
        const ObjectiveBreakdown b = breakdown(coeffs);
        return std::isfinite(b.total) ? b.total : std::numeric_limits<double>::infinity();
    } catch (const RecursionError&) {
        return std::numeric_limits<double>::infinity();
    }
}

FittedQuantilePaths DynqrObjective::paths(const CoefficientSet& coeffs) const {
    FittedQuantilePaths p = quantile_recursion(coeffs, X_, init_);
    p.first_index = first_index_;
    return p;
}

double dynqr_objective(const CoefficientSet& coeffs, const SeriesData& data, const ModelSpec& spec,
                       const QuantileGrid& grid, double lambda, std::span<const double> init) {
    const DynqrObjective objective(data, spec, grid, lambda, std::vector<double>(init.begin(), init.end()));
    return objective(coeffs);
}

}  // namespace dynqr
