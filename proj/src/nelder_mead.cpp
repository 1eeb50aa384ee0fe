#include "dynqr/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace dynqr::optim {

namespace {

struct Vertex {
    std::vector<double> x;
    double f = 0.0;
};

class SimplexRun {
public:
    SimplexRun(const Objective& f, const OptimOptions& opts, OptimResult& result, std::size_t max_iters)
        : f_(f), opts_(opts), result_(result), max_iters_(max_iters) {}

    // Runs one simplex descent from `start`; returns false when a budget ran out.
    bool descend(const std::vector<double>& start, std::size_t& iterations) {
        const std::size_t n = start.size();
        std::vector<Vertex> simplex(n + 1);
        simplex[0].x = start;
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> v = start;
            double step = 0.0;
            if (!opts_.coordinate_scales.empty()) {
                step = opts_.coordinate_scales[i];
            } else {
                step = start[i] != 0.0 ? 0.05 * std::abs(start[i]) : 0.00025;
            }
            v[i] += step;
            clip(v);
            if (v[i] == start[i]) {
                v[i] = start[i] - step;
                clip(v);
            }
            if (v[i] == start[i]) {
                throw std::invalid_argument("degenerate initial simplex at coordinate " + std::to_string(i));
            }
            simplex[i + 1].x = std::move(v);
        }
        for (Vertex& v : simplex) {
            v.f = eval(v.x);
        }

        std::vector<double> centroid(n), trial(n), trial2(n);
        while (true) {
            std::stable_sort(simplex.begin(), simplex.end(), [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
            record(simplex);
            if (budget_exhausted()) {
                return false;
            }
            if (iterations >= max_iters_) {
                result_.termination = Termination::max_iters;
                return false;
            }
            if (converged(simplex)) {
                return true;
            }
            ++iterations;

            std::fill(centroid.begin(), centroid.end(), 0.0);
            for (std::size_t k = 0; k < n; ++k) {
                for (std::size_t i = 0; i < n; ++i) {
                    centroid[i] += simplex[k].x[i];
                }
            }
            for (double& c : centroid) {
                c /= static_cast<double>(n);
            }
            Vertex& worst = simplex[n];
            const double f_best = simplex[0].f;
            const double f_second = simplex[n - 1].f;

            affine(centroid, worst.x, 1.0, trial);  // reflection
            const double f_r = eval(trial);
            if (f_r < f_best) {
                affine(centroid, worst.x, 2.0, trial2);  // expansion
                const double f_e = eval(trial2);
                if (f_e < f_r) {
                    worst.x = trial2;
                    worst.f = f_e;
                } else {
                    worst.x = trial;
                    worst.f = f_r;
                }
                continue;
            }
            if (f_r < f_second) {
                worst.x = trial;
                worst.f = f_r;
                continue;
            }
            if (f_r < worst.f) {
                affine(centroid, worst.x, 0.5, trial2);  // outside contraction
                const double f_c = eval(trial2);
                if (f_c <= f_r) {
                    worst.x = trial2;
                    worst.f = f_c;
                    continue;
                }
            } else {
                affine(centroid, worst.x, -0.5, trial2);  // inside contraction
                const double f_c = eval(trial2);
                if (f_c < worst.f) {
                    worst.x = trial2;
                    worst.f = f_c;
                    continue;
                }
            }
            for (std::size_t k = 1; k <= n; ++k) {  // shrink towards the best vertex
                for (std::size_t i = 0; i < n; ++i) {
                    simplex[k].x[i] = simplex[0].x[i] + 0.5 * (simplex[k].x[i] - simplex[0].x[i]);
                }
                clip(simplex[k].x);
                simplex[k].f = eval(simplex[k].x);
            }
        }
    }

private:
    // out = centroid + coef * (centroid - worst), clipped.
    void affine(const std::vector<double>& centroid, const std::vector<double>& worst, double coef,
                std::vector<double>& out) const {
        for (std::size_t i = 0; i < centroid.size(); ++i) {
            out[i] = centroid[i] + coef * (centroid[i] - worst[i]);
        }
        clip(out);
    }

    void clip(std::vector<double>& x) const {
        if (opts_.bounds) {
            opts_.bounds->clip(x);
        }
    }

    double eval(const std::vector<double>& x) {
        double v = f_(x);
        if (std::isnan(v)) {
            v = std::numeric_limits<double>::infinity();
        }
        ++result_.evaluations;
        if (v < result_.best_value) {
            result_.best_value = v;
            result_.best_point = x;
        }
        return v;
    }

    bool budget_exhausted() {
        if (opts_.target_value && result_.best_value <= *opts_.target_value) {
            result_.termination = Termination::target_reached;
            return true;
        }
        if (opts_.max_evaluations > 0 && result_.evaluations >= opts_.max_evaluations) {
            result_.termination = Termination::max_evaluations;
            return true;
        }
        return false;
    }

    bool converged(const std::vector<Vertex>& simplex) const {
        const double spread = simplex.back().f - simplex.front().f;
        if (!(spread <= opts_.tol_fun)) {
            return false;
        }
        double size = 0.0;
        for (std::size_t k = 1; k < simplex.size(); ++k) {
            for (std::size_t i = 0; i < simplex[k].x.size(); ++i) {
                size = std::max(size, std::abs(simplex[k].x[i] - simplex[0].x[i]));
            }
        }
        return size <= std::max(opts_.tol_x, 1e-10 * (1.0 + max_abs(simplex[0].x)));
    }

    static double max_abs(const std::vector<double>& x) {
        double m = 0.0;
        for (double v : x) {
            m = std::max(m, std::abs(v));
        }
        return m;
    }

    void record(const std::vector<Vertex>& simplex) {
        GenerationRecord rec;
        rec.best = simplex.front().f;
        const std::size_t m = simplex.size();
        rec.median = m % 2 == 1 ? simplex[m / 2].f : 0.5 * (simplex[m / 2 - 1].f + simplex[m / 2].f);
        if (opts_.record_points) {
            rec.best_point = simplex.front().x;
        }
        result_.trace.push_back(std::move(rec));
        ++result_.generations;
    }

    const Objective& f_;
    const OptimOptions& opts_;
    OptimResult& result_;
    std::size_t max_iters_;
};

}  // namespace

OptimResult nelder_mead_minimize(const Objective& f, std::span<const double> x0, const OptimOptions& opts) {
    const std::size_t n = x0.size();
    if (n == 0) {
        throw std::invalid_argument("Nelder-Mead needs at least one dimension");
    }
    for (double v : x0) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("non-finite starting point");
        }
    }
    opts.validate(n);

    OptimResult result;
    result.best_value = std::numeric_limits<double>::infinity();
    const std::size_t max_iters = opts.max_iters > 0 ? opts.max_iters : 1000 * n;
    SimplexRun run(f, opts, result, max_iters);

    std::vector<double> start(x0.begin(), x0.end());
    if (opts.bounds) {
        opts.bounds->clip(start);
    }
    std::size_t iterations = 0;
    double previous = std::numeric_limits<double>::infinity();
    while (run.descend(start, iterations)) {
        // Restart from the best vertex; stop once a restart no longer improves.
        if (previous - result.best_value < opts.tol_fun) {
            result.termination = Termination::tol_fun;
            break;
        }
        previous = result.best_value;
        start = result.best_point;
    }
    return result;
}

}  // namespace dynqr::optim
