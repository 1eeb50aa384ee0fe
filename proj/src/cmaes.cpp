#include "dynqr/optim.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dynqr::optim {

namespace {

constexpr double kMaxCondition = 1e14;
constexpr int kBoundResamples = 10;

double sanitize(double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : v; }

}  // namespace

void Bounds::validate(std::size_t n) const {
    if (lower.size() != n || upper.size() != n) {
        throw std::invalid_argument("bounds dimension does not match the problem dimension");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(lower[i] <= upper[i])) {
            throw std::invalid_argument("invalid bounds at coordinate " + std::to_string(i));
        }
    }
}

bool Bounds::contains(std::span<const double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < lower[i] || x[i] > upper[i]) {
            return false;
        }
    }
    return true;
}

void Bounds::clip(std::span<double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = std::clamp(x[i], lower[i], upper[i]);
    }
}

std::string_view to_string(Termination t) {
    switch (t) {
        case Termination::max_iters: return "max_iters";
        case Termination::tol_fun: return "tol_fun";
        case Termination::tol_x: return "tol_x";
        case Termination::max_evaluations: return "max_evaluations";
        case Termination::target_reached: return "target_reached";
    }
    return "unknown";
}

void OptimOptions::validate(std::size_t n) const {
    if (!(tol_fun > 0.0) || !(tol_x > 0.0)) {
        throw std::invalid_argument("tolerances must be positive");
    }
    if (bounds) {
        bounds->validate(n);
    }
    if (!coordinate_scales.empty()) {
        if (coordinate_scales.size() != n) {
            throw std::invalid_argument("coordinate_scales dimension mismatch");
        }
        for (double s : coordinate_scales) {
            if (!(s > 0.0) || !std::isfinite(s)) {
                throw std::invalid_argument("coordinate scales must be positive and finite");
            }
        }
    }
    if (pop_size && *pop_size < 2) {
        throw std::invalid_argument("population size must be at least 2");
    }
}

std::size_t default_population(std::size_t n) { return std::max<std::size_t>(100, 10 * n); }

std::vector<double> selection_weights(std::size_t pop_size) {
    if (pop_size == 0) {
        throw std::invalid_argument("population size must be positive");
    }
    const std::size_t mu = (pop_size + 3) / 4;
    std::vector<double> w(mu);
    const double base = std::log(static_cast<double>(mu) + 0.5);
    for (std::size_t i = 0; i < mu; ++i) {
        w[i] = base - std::log(static_cast<double>(i + 1));
    }
    const double sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& v : w) {
        v /= sum;
    }
    return w;
}

Cmaes::Cmaes(std::span<const double> x0, double sigma0, const OptimOptions& opts)
    : opts_(opts), n_(x0.size()), rng_(opts.seed) {
    if (n_ == 0) {
        throw std::invalid_argument("CMA-ES needs at least one dimension");
    }
    for (double v : x0) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("non-finite starting point");
        }
    }
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) {
        throw std::invalid_argument("initial step size must be positive");
    }
    opts_.validate(n_);
    max_iters_ = opts_.max_iters > 0 ? opts_.max_iters : 1000 * n_;

    const auto n = static_cast<Eigen::Index>(n_);
    const auto nd = static_cast<double>(n_);
    state_.pop_size = opts_.pop_size.value_or(default_population(n_));
    state_.rng_seed = opts_.seed;
    state_.step_size = sigma0;
    state_.mean = Eigen::Map<const Eigen::VectorXd>(x0.data(), n);
    if (opts_.bounds) {
        opts_.bounds->clip(std::span<double>(state_.mean.data(), n_));
    }
    state_.covariance = Eigen::MatrixXd::Identity(n, n);
    if (!opts_.coordinate_scales.empty()) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double s = opts_.coordinate_scales[static_cast<std::size_t>(i)];
            state_.covariance(i, i) = s * s;
        }
    }
    state_.path_sigma = Eigen::VectorXd::Zero(n);
    state_.path_c = Eigen::VectorXd::Zero(n);

    weights_ = selection_weights(state_.pop_size);
    double sq = 0.0;
    for (double w : weights_) {
        sq += w * w;
    }
    mu_eff_ = 1.0 / sq;

    // Default learning rates and damping of the standard CMA-ES.
    c_sigma_ = (mu_eff_ + 2.0) / (nd + mu_eff_ + 5.0);
    d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (nd + 1.0)) - 1.0) + c_sigma_;
    c_c_ = (4.0 + mu_eff_ / nd) / (nd + 4.0 + 2.0 * mu_eff_ / nd);
    c_1_ = 2.0 / ((nd + 1.3) * (nd + 1.3) + mu_eff_);
    c_mu_ = std::min(1.0 - c_1_, 2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((nd + 2.0) * (nd + 2.0) + mu_eff_));
    chi_n_ = std::sqrt(nd) * (1.0 - 1.0 / (4.0 * nd) + 1.0 / (21.0 * nd * nd));

    update_eigensystem();
    result_.best_point.assign(state_.mean.data(), state_.mean.data() + n);
    result_.best_value = std::numeric_limits<double>::infinity();
}

void Cmaes::update_eigensystem() {
    state_.covariance = 0.5 * (state_.covariance + state_.covariance.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(state_.covariance);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("covariance eigendecomposition failed");
    }
    Eigen::VectorXd ev = solver.eigenvalues();
    const double max_ev = ev.maxCoeff();
    const double min_ev = ev.minCoeff();
    if (!std::isfinite(max_ev) || !(max_ev > 0.0)) {
        throw std::runtime_error("covariance degenerated beyond repair");
    }
    if (min_ev <= 0.0 || max_ev > kMaxCondition * min_ev) {
        repair_covariance();
        return;
    }
    eigvecs_ = solver.eigenvectors();
    sqrt_eigvals_ = ev.cwiseSqrt();
}

void Cmaes::repair_covariance() {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(state_.covariance);
    const Eigen::VectorXd ev = solver.eigenvalues();
    const double max_ev = ev.maxCoeff();
    const double shift = max_ev / kMaxCondition - ev.minCoeff();
    state_.covariance.diagonal().array() += shift;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> repaired(state_.covariance);
    const Eigen::VectorXd rev = repaired.eigenvalues();
    if (repaired.info() != Eigen::Success || !(rev.minCoeff() > 0.0) || !rev.allFinite()) {
        throw std::runtime_error("covariance degenerated beyond repair");
    }
    eigvecs_ = repaired.eigenvectors();
    sqrt_eigvals_ = rev.cwiseSqrt();
}

void Cmaes::verify_covariance() const {
    const Eigen::MatrixXd& c = state_.covariance;
    if ((c - c.transpose()).cwiseAbs().maxCoeff() > 0.0) {
        throw std::logic_error("covariance lost symmetry");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c, Eigen::EigenvaluesOnly);
    if (!(solver.eigenvalues().minCoeff() > 0.0)) {
        throw std::logic_error("covariance lost positive definiteness");
    }
}

void Cmaes::sample(Eigen::MatrixXd& candidates, Eigen::MatrixXd& steps) {
    const auto n = static_cast<Eigen::Index>(n_);
    const auto pop = static_cast<Eigen::Index>(state_.pop_size);
    candidates.resize(n, pop);
    steps.resize(n, pop);
    Eigen::VectorXd z(n);
    for (Eigen::Index k = 0; k < pop; ++k) {
        Eigen::VectorXd x;
        for (int attempt = 0; attempt <= kBoundResamples; ++attempt) {
            for (Eigen::Index i = 0; i < n; ++i) {
                z(i) = normal_(rng_);
            }
            x = state_.mean + state_.step_size * (eigvecs_ * sqrt_eigvals_.cwiseProduct(z));
            if (!opts_.bounds || opts_.bounds->contains(std::span<const double>(x.data(), n_))) {
                break;
            }
        }
        if (opts_.bounds) {
            opts_.bounds->clip(std::span<double>(x.data(), n_));
        }
        candidates.col(k) = x;
        steps.col(k) = (x - state_.mean) / state_.step_size;
    }
}

bool Cmaes::step(const Objective& f) {
    if (done_) {
        return true;
    }
    const auto n = static_cast<Eigen::Index>(n_);
    const std::size_t pop = state_.pop_size;
    Eigen::MatrixXd candidates;
    Eigen::MatrixXd steps;
    sample(candidates, steps);

    std::vector<double> fitness(pop);
    for (std::size_t k = 0; k < pop; ++k) {
        const auto col = static_cast<Eigen::Index>(k);
        fitness[k] = sanitize(f(std::span<const double>(candidates.col(col).data(), n_)));
        ++result_.evaluations;
        if (fitness[k] < result_.best_value) {
            result_.best_value = fitness[k];
            result_.best_point.assign(candidates.col(col).data(), candidates.col(col).data() + n);
        }
    }

    std::vector<std::size_t> order(pop);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });

    GenerationRecord rec;
    rec.best = fitness[order.front()];
    rec.median = pop % 2 == 1 ? fitness[order[pop / 2]] : 0.5 * (fitness[order[pop / 2 - 1]] + fitness[order[pop / 2]]);
    if (opts_.record_points) {
        const auto col = static_cast<Eigen::Index>(order.front());
        rec.best_point.assign(candidates.col(col).data(), candidates.col(col).data() + n);
    }

    // Recombination over the selected quarter.
    Eigen::VectorXd y_w = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        y_w += weights_[i] * steps.col(static_cast<Eigen::Index>(order[i]));
    }
    state_.mean += state_.step_size * y_w;

    // C^{-1/2} y_w = B D^{-1} B^T y_w
    const Eigen::VectorXd c_inv_sqrt_yw = eigvecs_ * (eigvecs_.transpose() * y_w).cwiseQuotient(sqrt_eigvals_);
    state_.path_sigma = (1.0 - c_sigma_) * state_.path_sigma + std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_) * c_inv_sqrt_yw;

    const double gen = static_cast<double>(state_.generation + 1);
    const double ps_norm = state_.path_sigma.norm();
    const double ps_bias = std::sqrt(1.0 - std::pow(1.0 - c_sigma_, 2.0 * gen));
    const bool h_sigma = ps_norm / ps_bias < (1.4 + 2.0 / (static_cast<double>(n_) + 1.0)) * chi_n_;

    state_.path_c = (1.0 - c_c_) * state_.path_c;
    if (h_sigma) {
        state_.path_c += std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_) * y_w;
    }

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const auto col = steps.col(static_cast<Eigen::Index>(order[i]));
        rank_mu.noalias() += weights_[i] * col * col.transpose();
    }
    const double delta_h = h_sigma ? 0.0 : c_c_ * (2.0 - c_c_);
    state_.covariance = (1.0 - c_1_ - c_mu_ + c_1_ * delta_h) * state_.covariance +
                        c_1_ * state_.path_c * state_.path_c.transpose() + c_mu_ * rank_mu;

    const double log_change = std::min(1.0, (c_sigma_ / d_sigma_) * (ps_norm / chi_n_ - 1.0));
    state_.step_size *= std::exp(log_change);

    update_eigensystem();
    if (opts_.check_covariance) {
        verify_covariance();
    }

    ++state_.generation;
    result_.generations = state_.generation;
    best_history_.push_back(rec.best);

    double gen_spread = std::numeric_limits<double>::infinity();
    if (std::isfinite(fitness[order.back()]) && std::isfinite(rec.best)) {
        gen_spread = fitness[order.back()] - rec.best;
    }
    result_.trace.push_back(std::move(rec));

    if (opts_.target_value && result_.best_value <= *opts_.target_value) {
        result_.termination = Termination::target_reached;
        done_ = true;
    } else if (opts_.max_evaluations > 0 && result_.evaluations >= opts_.max_evaluations) {
        result_.termination = Termination::max_evaluations;
        done_ = true;
    } else if (best_history_flat() && gen_spread < opts_.tol_fun) {
        result_.termination = Termination::tol_fun;
        done_ = true;
    } else if (state_.step_size * std::sqrt(state_.covariance.diagonal().maxCoeff()) < opts_.tol_x) {
        result_.termination = Termination::tol_x;
        done_ = true;
    } else if (state_.generation >= max_iters_) {
        result_.termination = Termination::max_iters;
        done_ = true;
    }
    return done_;
}

// Best-fitness range over the trailing window.
bool Cmaes::best_history_flat() const {
    const std::size_t w = opts_.tol_fun_window;
    if (best_history_.size() < w || w == 0) {
        return false;
    }
    const auto first = best_history_.end() - static_cast<std::ptrdiff_t>(w);
    const auto [lo, hi] = std::minmax_element(first, best_history_.end());
    return std::isfinite(*hi) && (*hi - *lo) < opts_.tol_fun;
}

OptimResult cmaes_minimize(const Objective& f, std::span<const double> x0, std::optional<double> sigma0,
                           const OptimOptions& opts) {
    OptimOptions local = opts;
    double s0 = 0.5;
    if (sigma0) {
        s0 = *sigma0;
    } else if (opts.bounds) {
        opts.bounds->validate(x0.size());
        // sigma0 = 0.3 (hi - lo) per coordinate: scalar part from the widest box,
        // relative widths folded into the initial covariance.
        double widest = 0.0;
        for (std::size_t i = 0; i < x0.size(); ++i) {
            widest = std::max(widest, opts.bounds->upper[i] - opts.bounds->lower[i]);
        }
        if (widest > 0.0) {
            s0 = 0.3 * widest;
            if (local.coordinate_scales.empty()) {
                local.coordinate_scales.resize(x0.size());
                for (std::size_t i = 0; i < x0.size(); ++i) {
                    const double width = opts.bounds->upper[i] - opts.bounds->lower[i];
                    local.coordinate_scales[i] = std::max(width / widest, 1e-12);
                }
            }
        }
    }
    Cmaes es(x0, s0, local);
    while (!es.step(f)) {
    }
    return es.result();
}

}  // namespace dynqr::optim
