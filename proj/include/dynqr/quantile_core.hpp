#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dynqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown when the quantile recursion produces a non-finite value
/// (typically an explosive lagged-quantile coefficient).
class RecursionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * @brief Ordered set of target quantile levels tau_1 < ... < tau_Q.
 *
 * All levels lie in the open interval (0, 1). The constructor rejects
 * anything else, so a constructed grid is always valid.
 */
class QuantileGrid {
public:
    explicit QuantileGrid(std::vector<double> levels);

    /// Nine deciles 0.1, ..., 0.9.
    static QuantileGrid deciles();
    /// n equispaced levels k/(n+1), k = 1..n.
    static QuantileGrid equispaced(std::size_t n);

    [[nodiscard]] std::size_t size() const noexcept { return levels_.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return levels_[i]; }
    [[nodiscard]] const std::vector<double>& levels() const noexcept { return levels_; }

    /// Index of a level equal to tau within 1e-12; throws if absent.
    [[nodiscard]] std::size_t index_of(double tau) const;
    [[nodiscard]] bool contains(double tau) const noexcept;

private:
    std::vector<double> levels_;
};

/// Observed series plus optional exogenous covariates (T x m).
struct SeriesData {
    std::vector<double> y;
    Matrix exog;  // T x m, may have zero columns
    std::vector<std::string> exog_names;
    std::vector<std::string> timestamps;  // empty or length T

    [[nodiscard]] std::size_t size() const noexcept { return y.size(); }

    /// Throws std::invalid_argument on row-count mismatch or non-finite entries.
    void validate() const;

    /// First n observations (rows) of the series.
    [[nodiscard]] SeriesData head(std::size_t n) const;
    /// Observations [begin, end).
    [[nodiscard]] SeriesData slice(std::size_t begin, std::size_t end) const;
};

/**
 * @brief Dynamic quantile model specification.
 *
 * Covariate row x_t = (1, lagged-y terms, selected exogenous columns).
 * With asymmetric_slope the lagged return enters as (|y_{t-1}|^+, |y_{t-1}|^-).
 */
struct ModelSpec {
    int lag_y = 1;                  // 0 or 1
    bool asymmetric_slope = false;  // requires lag_y >= 1
    int quantile_lags = 1;          // L, 0 or 1
    bool include_intercept = true;
    std::vector<std::size_t> exog_columns;

    void validate() const;

    /// Number of covariate columns K+1, intercept included.
    [[nodiscard]] std::size_t num_covariates() const noexcept;
};

/// Per-quantile coefficients: beta is Q x (K+1), theta is Q x L.
struct CoefficientSet {
    Matrix beta;
    Matrix theta;

    CoefficientSet() = default;
    CoefficientSet(std::size_t num_quantiles, std::size_t num_covariates, std::size_t quantile_lags);

    [[nodiscard]] std::size_t num_quantiles() const noexcept { return static_cast<std::size_t>(beta.rows()); }
    [[nodiscard]] std::size_t num_covariates() const noexcept { return static_cast<std::size_t>(beta.cols()); }
    [[nodiscard]] std::size_t quantile_lags() const noexcept { return static_cast<std::size_t>(theta.cols()); }

    [[nodiscard]] bool all_finite() const;
    friend bool operator==(const CoefficientSet& a, const CoefficientSet& b);
};

/// Fitted quantiles. Row r corresponds to series index first_index + r.
struct FittedQuantilePaths {
    Matrix values;       // T_eff x Q
    Vector init_values;  // lagged quantile used for the first row
    std::size_t first_index = 0;
};

/// Design matrix over the full series; rows with undefined lags are masked.
struct Design {
    Matrix X;                      // T x (K+1)
    std::vector<unsigned char> valid;
    std::size_t first_valid = 0;   // masked rows always form a prefix

    [[nodiscard]] std::size_t effective_rows() const noexcept {
        return static_cast<std::size_t>(X.rows()) - first_valid;
    }
    /// The unmasked block of X.
    [[nodiscard]] Matrix effective() const { return X.bottomRows(static_cast<Eigen::Index>(effective_rows())); }
};

[[nodiscard]] Design build_design(const SeriesData& data, const ModelSpec& spec);

/// Covariate row for series index t, computed from data up to t-1 and exog at t.
[[nodiscard]] Vector design_row(const SeriesData& data, const ModelSpec& spec, std::size_t t);

/// Check (pinball) loss u * (tau - 1{u < 0}).
[[nodiscard]] double pinball_loss(double u, double tau);

/**
 * @brief Runs the lagged-quantile recursion over every row of X.
 *
 * values(t, q) = X(t,:) . beta(q,:) + values(t-1, q) * theta(q, 0),
 * with values(-1, q) = init[q]. Throws RecursionError on non-finite output.
 */
[[nodiscard]] FittedQuantilePaths quantile_recursion(const CoefficientSet& coeffs, const Matrix& X,
                                                     std::span<const double> init);

/// Same recursion written into a preallocated T x Q buffer; returns false on non-finite output.
bool quantile_recursion_into(const CoefficientSet& coeffs, const Matrix& X, std::span<const double> init,
                             Matrix& out);

/// Average thresholded adjacent-quantile crossing depth, normalised by (Q-1)T.
[[nodiscard]] double crossing_distance(const Matrix& paths);
[[nodiscard]] double crossing_distance(const FittedQuantilePaths& paths);

/// Mean pinball loss (1/QT) sum_q sum_t rho(y_t - paths(t,q)).
[[nodiscard]] double average_pinball_loss(std::span<const double> y, const Matrix& paths, const QuantileGrid& grid);

/// Linear-interpolation (type 7) sample quantile.
[[nodiscard]] double empirical_quantile(std::span<const double> values, double tau);

enum class InitialQuantiles { empirical, zeros };

/// Lagged quantile used at the first effective row of the recursion.
[[nodiscard]] std::vector<double> initial_quantiles(std::span<const double> y, const QuantileGrid& grid,
                                                    InitialQuantiles strategy);

struct ObjectiveBreakdown {
    double pinball = 0.0;
    double penalty = 0.0;
    double total = 0.0;
};

/**
 * @brief Crossing-penalised multi-quantile CAViaR objective.
 *
 * Holds the prepared effective design so repeated evaluations only run the
 * recursion. Evaluation is const and allocation-light, so one instance can be
 * shared by concurrent callers.
 */
class DynqrObjective {
public:
    DynqrObjective(const SeriesData& data, const ModelSpec& spec, QuantileGrid grid, double lambda,
                   std::vector<double> init);

    /// Throws RecursionError when the recursion diverges.
    [[nodiscard]] ObjectiveBreakdown breakdown(const CoefficientSet& coeffs) const;
    /// Total objective; +infinity when the recursion diverges.
    [[nodiscard]] double operator()(const CoefficientSet& coeffs) const;

    [[nodiscard]] FittedQuantilePaths paths(const CoefficientSet& coeffs) const;

    [[nodiscard]] const QuantileGrid& grid() const noexcept { return grid_; }
    [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] const std::vector<double>& init() const noexcept { return init_; }
    [[nodiscard]] const Matrix& design() const noexcept { return X_; }
    [[nodiscard]] std::span<const double> response() const noexcept { return y_; }
    [[nodiscard]] std::size_t first_index() const noexcept { return first_index_; }

private:
    ModelSpec spec_;
    QuantileGrid grid_;
    double lambda_;
    std::vector<double> init_;
    Matrix X_;               // effective rows only
    std::vector<double> y_;  // effective rows only
    std::size_t first_index_;
};

/// One-shot evaluation of the penalised objective.
[[nodiscard]] double dynqr_objective(const CoefficientSet& coeffs, const SeriesData& data, const ModelSpec& spec,
                                     const QuantileGrid& grid, double lambda, std::span<const double> init);

}  // namespace dynqr
