#include "dynqr/fitter.hpp"

#include "dynqr/scoring.hpp"
#include "dynqr/seeding.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

namespace dynqr::fitter {

std::string_view to_string(InitStrategy s) {
    switch (s) {
        case InitStrategy::zeros: return "zeros";
        case InitStrategy::qr_warm_start: return "qr_warm_start";
        case InitStrategy::explicit_coefficients: return "explicit";
    }
    return "unknown";
}

std::string_view to_string(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::cmaes: return "cmaes";
        case OptimizerKind::nelder_mead: return "nelder_mead";
    }
    return "unknown";
}

InitStrategy parse_init_strategy(std::string_view s) {
    if (s == "zeros") return InitStrategy::zeros;
    if (s == "qr_warm_start" || s == "qr") return InitStrategy::qr_warm_start;
    if (s == "explicit") return InitStrategy::explicit_coefficients;
    throw std::invalid_argument("unknown init strategy '" + std::string(s) + "'");
}

OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "cmaes") return OptimizerKind::cmaes;
    if (s == "nelder_mead") return OptimizerKind::nelder_mead;
    throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

void FitRequest::validate() const {
    spec.validate();
    data.validate();
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("lambda must be a finite non-negative number");
    }
    if (!(beta_bound > 0.0) || !(theta_bound > 0.0)) {
        throw std::invalid_argument("coefficient bounds must be positive");
    }
    if (restarts == 0) {
        throw std::invalid_argument("restarts must be at least 1");
    }
    if (init_strategy == InitStrategy::explicit_coefficients) {
        if (!explicit_init) {
            throw std::invalid_argument("explicit init strategy requires coefficients");
        }
        if (explicit_init->num_quantiles() != grid.size() || explicit_init->num_covariates() != spec.num_covariates() ||
            explicit_init->quantile_lags() != static_cast<std::size_t>(spec.quantile_lags)) {
            throw std::invalid_argument("explicit init coefficients have the wrong shape");
        }
        if (!explicit_init->all_finite()) {
            throw std::invalid_argument("explicit init coefficients must be finite");
        }
    }
}

std::size_t parameter_count(std::size_t num_quantiles, std::size_t num_covariates, std::size_t quantile_lags) {
    return num_quantiles * num_covariates + num_quantiles * quantile_lags;
}

std::vector<double> pack(const CoefficientSet& coeffs) {
    const std::size_t Q = coeffs.num_quantiles();
    const std::size_t K1 = coeffs.num_covariates();
    const std::size_t L = coeffs.quantile_lags();
    std::vector<double> flat;
    flat.reserve(parameter_count(Q, K1, L));
    for (std::size_t q = 0; q < Q; ++q) {
        for (std::size_t k = 0; k < K1; ++k) {
            flat.push_back(coeffs.beta(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(k)));
        }
    }
    for (std::size_t q = 0; q < Q; ++q) {
        for (std::size_t l = 0; l < L; ++l) {
            flat.push_back(coeffs.theta(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(l)));
        }
    }
    return flat;
}

void unpack_into(std::span<const double> flat, CoefficientSet& out) {
    const std::size_t Q = out.num_quantiles();
    const std::size_t K1 = out.num_covariates();
    const std::size_t L = out.quantile_lags();
    if (flat.size() != parameter_count(Q, K1, L)) {
        throw std::invalid_argument("flat coefficient vector has length " + std::to_string(flat.size()) +
                                    ", expected " + std::to_string(parameter_count(Q, K1, L)));
    }
    std::size_t i = 0;
    for (std::size_t q = 0; q < Q; ++q) {
        for (std::size_t k = 0; k < K1; ++k) {
            out.beta(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(k)) = flat[i++];
        }
    }
    for (std::size_t q = 0; q < Q; ++q) {
        for (std::size_t l = 0; l < L; ++l) {
            out.theta(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(l)) = flat[i++];
        }
    }
}

CoefficientSet unpack(std::span<const double> flat, std::size_t num_quantiles, std::size_t num_covariates,
                      std::size_t quantile_lags) {
    CoefficientSet out(num_quantiles, num_covariates, quantile_lags);
    unpack_into(flat, out);
    return out;
}

optim::Bounds coefficient_bounds(std::size_t num_quantiles, std::size_t num_covariates, std::size_t quantile_lags,
                                 double beta_bound, double theta_bound) {
    const std::size_t n_beta = num_quantiles * num_covariates;
    const std::size_t n = parameter_count(num_quantiles, num_covariates, quantile_lags);
    optim::Bounds b;
    b.lower.resize(n);
    b.upper.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double bound = i < n_beta ? beta_bound : theta_bound;
        b.lower[i] = -bound;
        b.upper[i] = bound;
    }
    return b;
}

namespace {

double sample_sd(std::span<const double> v) {
    if (v.size() < 2) {
        return 0.0;
    }
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Initial sampling scales: beta on the response scale divided by each covariate's
// spread, theta on a fixed 0.3.
std::vector<double> sampler_scales(const DynqrObjective& objective, std::size_t Q, std::size_t L) {
    const Matrix& X = objective.design();
    const std::span<const double> y = objective.response();
    double y_scale = sample_sd(y);
    if (!(y_scale > 0.0)) {
        double m = 0.0;
        for (double v : y) {
            m = std::max(m, std::abs(v));
        }
        y_scale = 1e-3 * std::max(1.0, m);
    }
    const auto K1 = static_cast<std::size_t>(X.cols());
    std::vector<double> col_scale(K1, y_scale);
    for (std::size_t k = 1; k < K1; ++k) {
        std::vector<double> col(static_cast<std::size_t>(X.rows()));
        for (Eigen::Index t = 0; t < X.rows(); ++t) {
            col[static_cast<std::size_t>(t)] = X(t, static_cast<Eigen::Index>(k));
        }
        const double s = sample_sd(col);
        if (s > 0.0) {
            col_scale[k] = y_scale / s;
        }
    }
    std::vector<double> scales;
    scales.reserve(parameter_count(Q, K1, L));
    for (std::size_t q = 0; q < Q; ++q) {
        scales.insert(scales.end(), col_scale.begin(), col_scale.end());
    }
    for (std::size_t i = 0; i < Q * L; ++i) {
        scales.push_back(0.3);
    }
    return scales;
}

optim::Objective flat_objective(const DynqrObjective& objective, std::size_t Q, std::size_t K1, std::size_t L) {
    return [&objective, Q, K1, L](std::span<const double> x) {
        thread_local CoefficientSet scratch;
        if (scratch.num_quantiles() != Q || scratch.num_covariates() != K1 || scratch.quantile_lags() != L) {
            scratch = CoefficientSet(Q, K1, L);
        }
        unpack_into(x, scratch);
        return objective(scratch);
    };
}

optim::OptimResult run_optimizer(OptimizerKind kind, const optim::Objective& f, std::span<const double> x0,
                                 optim::OptimOptions opts, const std::vector<double>& scales) {
    if (kind == OptimizerKind::cmaes) {
        if (opts.coordinate_scales.empty()) {
            opts.coordinate_scales = scales;
        }
        return optim::cmaes_minimize(f, x0, 1.0, opts);
    }
    return optim::nelder_mead_minimize(f, x0, opts);
}

FitResult finalize(const DynqrObjective& objective, CoefficientSet coeffs, optim::OptimResult diagnostics) {
    FitResult r;
    const ObjectiveBreakdown b = objective.breakdown(coeffs);
    r.paths = objective.paths(coeffs);
    r.coefficients = std::move(coeffs);
    r.lambda = objective.lambda();
    r.pinball_component = b.pinball;
    r.penalty_component = b.penalty;
    r.objective_value = b.total;
    r.crossing_incidence_pct = r.paths.values.cols() >= 2 ? scoring::crossing_incidence(r.paths.values) : 0.0;
    r.optim_diagnostics = std::move(diagnostics);
    return r;
}

}  // namespace

CoefficientSet qr_warm_start(const FitRequest& req, std::span<const double> init_values) {
    const std::size_t Q = req.grid.size();
    const std::size_t K1 = req.spec.num_covariates();
    const auto L = static_cast<std::size_t>(req.spec.quantile_lags);
    const auto seeds = derive_seeds(req.seed ^ 0x5157A27ULL, 2 * Q);

    ModelSpec static_spec = req.spec;
    static_spec.quantile_lags = 0;
    CoefficientSet out(Q, K1, L);

    for (std::size_t q = 0; q < Q; ++q) {
        const QuantileGrid single({req.grid[q]});
        const std::vector<double> init{init_values[q]};
        const DynqrObjective objective(req.data, static_spec, single, 0.0, init);
        optim::OptimOptions opts = req.optim_options;
        opts.seed = seeds[q];
        opts.bounds = coefficient_bounds(1, K1, 0, req.beta_bound, req.theta_bound);
        opts.pop_size.reset();
        opts.coordinate_scales.clear();
        opts.record_points = false;
        const std::vector<double> x0(K1, 0.0);
        const auto f = flat_objective(objective, 1, K1, 0);
        const auto res = optim::cmaes_minimize(f, x0, 1.0,
                                               [&] {
                                                   opts.coordinate_scales = sampler_scales(objective, 1, 0);
                                                   return opts;
                                               }());
        for (std::size_t k = 0; k < K1; ++k) {
            out.beta(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(k)) = res.best_point[k];
        }
    }

    if (L == 1) {
        std::mt19937_64 rng(seeds[Q]);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        for (std::size_t q = 0; q < Q; ++q) {
            const QuantileGrid single({req.grid[q]});
            const std::vector<double> init{init_values[q]};
            const DynqrObjective objective(req.data, req.spec, single, 0.0, init);
            CoefficientSet candidate(1, K1, 1);
            candidate.beta.row(0) = out.beta.row(static_cast<Eigen::Index>(q));
            double best_value = std::numeric_limits<double>::infinity();
            double best_theta = 0.0;
            for (std::size_t draw = 0; draw < req.theta_grid_draws; ++draw) {
                const double theta = std::min(unif(rng), req.theta_bound);
                candidate.theta(0, 0) = theta;
                const double v = objective(candidate);
                if (v < best_value) {
                    best_value = v;
                    best_theta = theta;
                }
            }
            out.theta(static_cast<Eigen::Index>(q), 0) = best_theta;
        }
    }
    return out;
}

namespace {

// First stage of the simplex protocol: each quantile is refined on its own
// before the joint run starts from the stacked estimates.
std::vector<double> per_quantile_simplex(const FitRequest& req, std::span<const double> init_values,
                                         const CoefficientSet& start) {
    const std::size_t Q = req.grid.size();
    const std::size_t K1 = req.spec.num_covariates();
    const auto L = static_cast<std::size_t>(req.spec.quantile_lags);
    CoefficientSet out = start;
    for (std::size_t q = 0; q < Q; ++q) {
        const auto r = static_cast<Eigen::Index>(q);
        const QuantileGrid single({req.grid[q]});
        const std::vector<double> init{init_values[q]};
        const DynqrObjective objective(req.data, req.spec, single, 0.0, init);
        CoefficientSet row(1, K1, L);
        row.beta.row(0) = start.beta.row(r);
        if (L > 0) {
            row.theta.row(0) = start.theta.row(r);
        }
        std::vector<double> x0 = pack(row);
        optim::OptimOptions opts = req.optim_options;
        opts.bounds = coefficient_bounds(1, K1, L, req.beta_bound, req.theta_bound);
        opts.bounds->clip(x0);
        opts.coordinate_scales.clear();
        const auto res = optim::nelder_mead_minimize(flat_objective(objective, 1, K1, L), x0, opts);
        unpack_into(res.best_point, row);
        out.beta.row(r) = row.beta.row(0);
        if (L > 0) {
            out.theta.row(r) = row.theta.row(0);
        }
    }
    return pack(out);
}

}  // namespace

bool preferred(const FitResult& a, const FitResult& b) {
    if (a.objective_value != b.objective_value) {
        return a.objective_value < b.objective_value;
    }
    if (a.penalty_component != b.penalty_component) {
        return a.penalty_component < b.penalty_component;
    }
    const auto pa = pack(a.coefficients);
    const auto pb = pack(b.coefficients);
    return std::lexicographical_compare(pa.begin(), pa.end(), pb.begin(), pb.end());
}

FitResult fit(const FitRequest& req) {
    req.validate();
    const std::size_t Q = req.grid.size();
    const std::size_t K1 = req.spec.num_covariates();
    const auto L = static_cast<std::size_t>(req.spec.quantile_lags);

    const std::vector<double> init_values = initial_quantiles(req.data.y, req.grid, req.initial_quantiles);
    const DynqrObjective objective(req.data, req.spec, req.grid, req.lambda, init_values);

    CoefficientSet start(Q, K1, L);
    switch (req.init_strategy) {
        case InitStrategy::zeros: break;
        case InitStrategy::qr_warm_start: start = qr_warm_start(req, init_values); break;
        case InitStrategy::explicit_coefficients: start = *req.explicit_init; break;
    }
    std::vector<double> x0 = pack(start);
    const optim::Bounds bounds = coefficient_bounds(Q, K1, L, req.beta_bound, req.theta_bound);
    bounds.clip(x0);

    if (req.optimizer == OptimizerKind::nelder_mead) {
        x0 = per_quantile_simplex(req, init_values, start);
    }

    optim::OptimOptions opts = req.optim_options;
    opts.bounds = bounds;
    const std::vector<double> scales = sampler_scales(objective, Q, L);
    const auto f = flat_objective(objective, Q, K1, L);
    const auto seeds = req.restarts == 1 ? std::vector<std::uint64_t>{req.seed} : derive_seeds(req.seed, req.restarts);

    std::optional<FitResult> best;
    for (std::size_t r = 0; r < req.restarts; ++r) {
        opts.seed = seeds[r];
        optim::OptimResult res = run_optimizer(req.optimizer, f, x0, opts, scales);
        if (!std::isfinite(res.best_value)) {
            throw std::runtime_error("optimizer found no finite objective value");
        }
        CoefficientSet coeffs = unpack(res.best_point, Q, K1, L);
        FitResult candidate = finalize(objective, std::move(coeffs), std::move(res));
        if (!best || preferred(candidate, *best)) {
            best = std::move(candidate);
        }
    }
    return std::move(*best);
}

QrOracleResult qr_oracle(std::span<const double> y, const Matrix& X, double tau) {
    if (!(tau > 0.0 && tau < 1.0)) {
        throw std::invalid_argument("qr_oracle: tau outside (0,1)");
    }
    const auto T = static_cast<std::size_t>(X.rows());
    const auto p = static_cast<std::size_t>(X.cols());
    if (T != y.size()) {
        throw std::invalid_argument("qr_oracle: design and response lengths differ");
    }
    if (T > 60 || p == 0 || p > 3 || p > T) {
        throw std::invalid_argument("qr_oracle handles only T <= 60 and 1 <= K+1 <= 3");
    }

    QrOracleResult best;
    best.loss = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    Matrix A(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    Vector b(static_cast<Eigen::Index>(p));
    while (true) {
        for (std::size_t i = 0; i < p; ++i) {
            A.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(idx[i]));
            b(static_cast<Eigen::Index>(i)) = y[idx[i]];
        }
        const Eigen::FullPivLU<Matrix> lu(A);
        if (lu.isInvertible()) {
            const Vector coef = lu.solve(b);
            double loss = 0.0;
            for (std::size_t t = 0; t < T; ++t) {
                loss += pinball_loss(y[t] - X.row(static_cast<Eigen::Index>(t)).dot(coef), tau);
            }
            if (loss < best.loss) {
                best.loss = loss;
                best.coefficients = coef;
            }
        }
        // next combination in lexicographic order
        std::size_t i = p;
        while (i > 0 && idx[i - 1] == T - p + (i - 1)) {
            --i;
        }
        if (i == 0) {
            break;
        }
        ++idx[i - 1];
        for (std::size_t j = i; j < p; ++j) {
            idx[j] = idx[j - 1] + 1;
        }
    }
    if (!std::isfinite(best.loss)) {
        throw std::runtime_error("qr_oracle: every observation subset is singular");
    }
    return best;
}

}  // namespace dynqr::fitter
