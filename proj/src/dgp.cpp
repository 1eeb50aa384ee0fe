#include "dynqr/dgp.hpp"

#include "dynqr/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dynqr::dgp {

std::string_view to_string(Design d) {
    switch (d) {
        case Design::y1: return "y1";
        case Design::y2: return "y2";
        case Design::y3: return "y3";
    }
    return "unknown";
}

std::string_view to_string(Process p) {
    switch (p) {
        case Process::qar1: return "qar1";
        case Process::dqar11: return "dqar11";
    }
    return "unknown";
}

Design parse_design(std::string_view s) {
    if (s == "y1") return Design::y1;
    if (s == "y2") return Design::y2;
    if (s == "y3") return Design::y3;
    throw std::invalid_argument("unknown design '" + std::string(s) + "' (expected y1, y2 or y3)");
}

Process parse_process(std::string_view s) {
    if (s == "qar1") return Process::qar1;
    if (s == "dqar11") return Process::dqar11;
    throw std::invalid_argument("unknown process '" + std::string(s) + "' (expected qar1 or dqar11)");
}

void DgpConfig::validate() const {
    for (double v : xi) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("xi entries must be finite and non-negative");
        }
    }
    for (double v : theta_base) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("theta_base entries must be finite");
        }
    }
    if (T == 0) {
        throw std::invalid_argument("sample size must be positive");
    }
    if (fine_grid_size < 3) {
        throw std::invalid_argument("fine grid needs at least three levels");
    }
    if (max_attempts == 0) {
        throw std::invalid_argument("max_attempts must be positive");
    }
}

LevelCoefficients DgpConfig::active_xi() const {
    LevelCoefficients out = xi;
    switch (design) {
        case Design::y1: out[1] = out[2] = out[3] = 0.0; break;
        case Design::y2: out[1] = out[3] = 0.0; break;
        case Design::y3: break;
    }
    return out;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace {

// Rational approximation for the lower half (p <= 0.5), relative error ~1e-9,
// polished by two Halley steps against the erfc-based CDF.
double lower_inverse(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x = 0.0;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    for (int i = 0; i < 2; ++i) {
        const double e = normal_cdf(x) - p;
        const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    return x;
}

}  // namespace

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw std::invalid_argument("inverse_normal_cdf: p outside (0,1)");
    }
    if (p == 0.5) {
        return 0.0;
    }
    // 1 - p is exact for p in [0.5, 1), so reflecting keeps antisymmetry exact.
    return p < 0.5 ? lower_inverse(p) : -lower_inverse(1.0 - p);
}

std::vector<LevelCoefficients> make_coefficients(const DgpConfig& cfg, const QuantileGrid& grid) {
    const LevelCoefficients xi = cfg.active_xi();
    std::vector<LevelCoefficients> out(grid.size());
    for (std::size_t q = 0; q < grid.size(); ++q) {
        const double z = inverse_normal_cdf(grid[q]);
        for (std::size_t j = 0; j < 4; ++j) {
            out[q][j] = cfg.theta_base[j] + xi[j] * z;
        }
        if (cfg.process == Process::qar1) {
            out[q][3] = 0.0;
        }
    }
    return out;
}

CoefficientSet true_coefficient_set(const DgpConfig& cfg, const QuantileGrid& grid) {
    const auto levels = make_coefficients(cfg, grid);
    CoefficientSet c(grid.size(), 3, 1);
    for (std::size_t q = 0; q < grid.size(); ++q) {
        const auto r = static_cast<Eigen::Index>(q);
        c.beta(r, 0) = levels[q][0];
        c.beta(r, 1) = levels[q][1];
        c.beta(r, 2) = levels[q][2];
        c.theta(r, 0) = levels[q][3];
    }
    return c;
}

ModelSpec estimation_spec(const DgpConfig& cfg) {
    ModelSpec spec;
    spec.lag_y = 1;
    spec.asymmetric_slope = false;
    spec.quantile_lags = cfg.process == Process::dqar11 ? 1 : 0;
    spec.exog_columns = {0};
    return spec;
}

double interpolate_draw(std::span<const double> fine, double iqr, double u, double v) {
    const std::size_t F = fine.size();
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::floor(u * static_cast<double>(F + 1))), F);
    double lower = 0.0;
    double upper = 0.0;
    if (k == 0) {
        upper = fine[0];
        lower = upper - 0.001 * iqr;
    } else if (k == F) {
        lower = fine[F - 1];
        upper = lower + 0.001 * iqr;
    } else {
        lower = fine[k - 1];
        upper = fine[k];
    }
    return lower + v * (upper - lower);
}

namespace {

std::size_t nearest_level(std::size_t F, double tau) {
    const auto k = static_cast<std::size_t>(std::lround(tau * static_cast<double>(F + 1)));
    return std::clamp<std::size_t>(k, 1, F) - 1;
}

}  // namespace

SimulatedDataset simulate_path(const DgpConfig& cfg, const QuantileGrid& estimation_grid, std::mt19937_64& rng) {
    cfg.validate();
    const std::size_t F = cfg.fine_grid_size;
    const QuantileGrid fine_grid = QuantileGrid::equispaced(F);
    const auto fine_coef = make_coefficients(cfg, fine_grid);
    const auto est_coef = make_coefficients(cfg, estimation_grid);
    const std::size_t Q = estimation_grid.size();
    const std::size_t total = cfg.T + cfg.burn_in;
    const std::size_t i25 = nearest_level(F, 0.25);
    const std::size_t i75 = nearest_level(F, 0.75);

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> fine(F), fine_prev(F), est(Q), est_prev(Q);
    std::vector<double> y(total), x(total);
    Matrix est_paths(static_cast<Eigen::Index>(cfg.T), static_cast<Eigen::Index>(Q));

    for (std::size_t attempt = 1; attempt <= cfg.max_attempts; ++attempt) {
        std::fill(fine_prev.begin(), fine_prev.end(), 0.0);
        std::fill(est_prev.begin(), est_prev.end(), 0.0);
        double y_prev = 0.0;
        bool rejected = false;
        for (std::size_t t = 0; t < total && !rejected; ++t) {
            const double xt = unif(rng);
            for (std::size_t k = 0; k < F; ++k) {
                const auto& c = fine_coef[k];
                fine[k] = c[0] + c[1] * y_prev + c[2] * xt + c[3] * fine_prev[k];
            }
            for (std::size_t q = 0; q < Q; ++q) {
                const auto& c = est_coef[q];
                est[q] = c[0] + c[1] * y_prev + c[2] * xt + c[3] * est_prev[q];
            }
            for (std::size_t k = 0; k < F; ++k) {
                if (!std::isfinite(fine[k]) || (t >= cfg.burn_in && k > 0 && fine[k] < fine[k - 1])) {
                    rejected = true;
                    break;
                }
            }
            if (rejected) {
                break;
            }
            const double u = unif(rng);
            const double v = unif(rng);
            const double yt = interpolate_draw(fine, fine[i75] - fine[i25], u, v);
            y[t] = yt;
            x[t] = xt;
            if (t >= cfg.burn_in) {
                for (std::size_t q = 0; q < Q; ++q) {
                    est_paths(static_cast<Eigen::Index>(t - cfg.burn_in), static_cast<Eigen::Index>(q)) = est[q];
                }
            }
            y_prev = yt;
            std::swap(fine, fine_prev);
            std::swap(est, est_prev);
        }
        if (rejected) {
            continue;
        }

        SimulatedDataset out;
        out.attempts = attempt;
        out.data.y.assign(y.begin() + static_cast<std::ptrdiff_t>(cfg.burn_in), y.end());
        out.data.exog = Matrix(static_cast<Eigen::Index>(cfg.T), 1);
        for (std::size_t t = 0; t < cfg.T; ++t) {
            out.data.exog(static_cast<Eigen::Index>(t), 0) = x[t + cfg.burn_in];
        }
        out.data.exog_names = {"x_exog"};
        out.true_coefficients = true_coefficient_set(cfg, estimation_grid);
        out.true_paths = std::move(est_paths);
        return out;
    }
    throw SimulationError("fine-grid quantiles crossed in " + std::to_string(cfg.max_attempts) +
                          " consecutive simulations; the configuration is unstable");
}

std::vector<std::uint64_t> replication_seeds(std::uint64_t master_seed, std::size_t n) {
    return derive_seeds(master_seed, n);
}

std::vector<SimulatedDataset> run_replications(const DgpConfig& cfg, std::size_t n_reps,
                                               const QuantileGrid& estimation_grid) {
    const auto seeds = replication_seeds(cfg.seed, n_reps);
    std::vector<SimulatedDataset> out;
    out.reserve(n_reps);
    for (std::size_t i = 0; i < n_reps; ++i) {
        std::mt19937_64 rng(seeds[i]);
        try {
            SimulatedDataset ds = simulate_path(cfg, estimation_grid, rng);
            ds.seed = seeds[i];
            out.push_back(std::move(ds));
        } catch (const SimulationError& e) {
            throw SimulationError("replication " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace dynqr::dgp
