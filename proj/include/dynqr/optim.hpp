#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace dynqr::optim {

/// Objective over R^n. May return +infinity to flag an infeasible point.
using Objective = std::function<double(std::span<const double>)>;

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;

    void validate(std::size_t n) const;
    [[nodiscard]] bool contains(std::span<const double> x) const;
    void clip(std::span<double> x) const;
};

enum class Termination { max_iters, tol_fun, tol_x, max_evaluations, target_reached };

[[nodiscard]] std::string_view to_string(Termination t);

struct OptimOptions {
    std::size_t max_iters = 0;             // generations (CMA-ES) or iterations (NM); 0 -> 1000 * n
    double tol_fun = 1e-10;
    std::size_t tol_fun_window = 30;       // generations
    double tol_x = 1e-12;
    std::optional<Bounds> bounds;
    std::optional<std::size_t> pop_size;   // CMA-ES population override
    std::uint64_t seed = 0;
    std::size_t max_evaluations = 0;       // 0 -> unlimited
    std::optional<double> target_value;    // stop as soon as best <= target
    /// Per-coordinate initial standard deviations relative to sigma0 (CMA-ES)
    /// or initial simplex edge lengths (Nelder-Mead). Empty -> defaults.
    std::vector<double> coordinate_scales;
    bool record_points = false;            // keep the per-generation best point in the trace
    bool check_covariance = false;         // verify C is symmetric positive-definite after each update

    void validate(std::size_t n) const;
};

struct GenerationRecord {
    double best = 0.0;    // best fitness in this generation
    double median = 0.0;  // median fitness in this generation
    std::vector<double> best_point;  // filled only with record_points
};

struct OptimResult {
    std::vector<double> best_point;
    double best_value = 0.0;
    std::size_t evaluations = 0;
    std::size_t generations = 0;
    std::vector<GenerationRecord> trace;
    Termination termination = Termination::max_iters;
};

/// Internal CMA-ES state (mean, covariance, step size, evolution paths).
struct OptimState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    double step_size = 0.0;
    Eigen::VectorXd path_sigma;
    Eigen::VectorXd path_c;
    std::size_t generation = 0;
    std::size_t pop_size = 0;
    std::uint64_t rng_seed = 0;
};

/// Population max(100, 10 n).
[[nodiscard]] std::size_t default_population(std::size_t n);

/// Recombination weights over the ceil(pop/4) selected points: w_i proportional to
/// ln(mu + 1/2) - ln(i), normalised to sum to one.
[[nodiscard]] std::vector<double> selection_weights(std::size_t pop_size);

/**
 * @brief Covariance matrix adaptation evolution strategy.
 *
 * Each generation samples pop_size candidates from N(mean, sigma^2 C), ranks them
 * by fitness (stable; +inf last), recombines the top quarter, and adapts C by
 * rank-one plus rank-mu updates and sigma by cumulative step-size adaptation.
 * Out-of-bounds candidates are resampled up to ten times and then clipped.
 */
class Cmaes {
public:
    Cmaes(std::span<const double> x0, double sigma0, const OptimOptions& opts);

    /// Runs one generation; returns true when a stopping rule fired.
    bool step(const Objective& f);

    [[nodiscard]] const OptimState& state() const noexcept { return state_; }
    [[nodiscard]] const OptimResult& result() const noexcept { return result_; }

private:
    void sample(Eigen::MatrixXd& candidates, Eigen::MatrixXd& steps);
    void update_eigensystem();
    void repair_covariance();
    void verify_covariance() const;
    [[nodiscard]] bool best_history_flat() const;

    OptimOptions opts_;
    OptimState state_;
    OptimResult result_;
    std::size_t n_;
    std::size_t max_iters_;

    std::vector<double> weights_;
    double mu_eff_ = 0.0;
    double c_sigma_ = 0.0, d_sigma_ = 0.0, c_c_ = 0.0, c_1_ = 0.0, c_mu_ = 0.0;
    double chi_n_ = 0.0;

    Eigen::MatrixXd eigvecs_;
    Eigen::VectorXd sqrt_eigvals_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::vector<double> best_history_;
    bool done_ = false;
};

/// Runs Cmaes until a stopping rule fires. sigma0 defaults to 0.3 (hi - lo) when
/// bounded, else 0.5.
[[nodiscard]] OptimResult cmaes_minimize(const Objective& f, std::span<const double> x0,
                                         std::optional<double> sigma0, const OptimOptions& opts);

/**
 * @brief Nelder-Mead simplex with coordinate clipping of trial points.
 *
 * Restarts from the best vertex with a fresh simplex until a restart improves
 * the best value by less than tol_fun, or the iteration budget is exhausted.
 */
[[nodiscard]] OptimResult nelder_mead_minimize(const Objective& f, std::span<const double> x0,
                                               const OptimOptions& opts);

}  // namespace dynqr::optim
