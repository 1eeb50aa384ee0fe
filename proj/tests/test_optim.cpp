#include "dynqr/optim.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>

using namespace dynqr::optim;

namespace {

double sphere(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) {
        s += v * v;
    }
    return s;
}

double rosenbrock(std::span<const double> x) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        s += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
    }
    return s;
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("population and selection weights") {
    CHECK(default_population(1) == 100);
    CHECK(default_population(10) == 100);
    CHECK(default_population(36) == 360);
    for (std::size_t pop : {2, 4, 5, 100, 101, 360}) {
        const auto w = selection_weights(pop);
        CHECK(w.size() == (pop + 3) / 4);
        CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
        for (std::size_t i = 0; i < w.size(); ++i) {
            CHECK(w[i] > 0.0);
            if (i > 0) {
                CHECK(w[i] < w[i - 1]);
            }
        }
    }
    // w_i proportional to ln(mu + 1/2) - ln i, here mu = 2
    const auto w = selection_weights(8);
    const double a = std::log(2.5), b = std::log(2.5) - std::log(2.0);
    CHECK(w[0] == doctest::Approx(a / (a + b)));
}

TEST_CASE("CMA-ES on the 20-d sphere") {
    OptimOptions opts;
    opts.seed = 1;
    // the large default population spends the budget in too few generations; use 4 + floor(3 ln n)
    opts.pop_size = 4 + static_cast<std::size_t>(3.0 * std::log(20.0));
    opts.max_evaluations = 20000;
    opts.target_value = 1e-10;
    const std::vector<double> x0(20, 3.0);
    const auto r = cmaes_minimize(sphere, x0, 2.0, opts);
    CHECK(r.best_value < 1e-10);
    CHECK(r.evaluations <= 20000);
    CHECK(r.best_value == sphere(r.best_point));
}

TEST_CASE("CMA-ES on a nonsmooth 1-d function") {
    OptimOptions opts;
    opts.seed = 2;
    const auto f = [](std::span<const double> x) { return std::abs(x[0] - 5.0); };
    const auto r = cmaes_minimize(f, std::vector<double>{0.0}, std::nullopt, opts);
    CHECK(std::abs(r.best_point[0] - 5.0) < 1e-6);
}

TEST_CASE("CMA-ES on a constant function stops on the flat-fitness rule") {
    OptimOptions opts;
    opts.seed = 3;
    const std::vector<double> x0{1.0, -2.0, 0.5};
    const auto r = cmaes_minimize([](std::span<const double>) { return 4.0; }, x0, 0.5, opts);
    CHECK(r.termination == Termination::tol_fun);
    CHECK(r.best_value == 4.0);
    CHECK(r.generations <= opts.tol_fun_window + 2);
}

TEST_CASE("CMA-ES is reproducible and rank-invariant") {
    OptimOptions opts;
    opts.seed = 99;
    opts.max_iters = 60;
    opts.record_points = true;
    const std::vector<double> x0{-1.2, 1.0, 0.3, 0.8};
    const auto a = cmaes_minimize(rosenbrock, x0, 0.5, opts);
    const auto b = cmaes_minimize(rosenbrock, x0, 0.5, opts);
    CHECK(a.best_point == b.best_point);
    CHECK(a.best_value == b.best_value);
    CHECK(a.evaluations == b.evaluations);

    // an increasing transform of f leaves the ranking, and so every iterate, unchanged
    const auto g = [](std::span<const double> x) { return 2.0 * rosenbrock(x) + 1.0; };
    const auto c = cmaes_minimize(g, x0, 0.5, opts);
    REQUIRE(a.trace.size() == c.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].best_point == c.trace[i].best_point);
    }
}

TEST_CASE("CMA-ES covariance stays symmetric positive-definite") {
    OptimOptions opts;
    opts.seed = 5;
    opts.max_iters = 200;
    const std::vector<double> x0(6, 2.0);
    Cmaes es(x0, 1.0, opts);
    for (int g = 0; g < 200; ++g) {
        const bool done = es.step(rosenbrock);
        const auto& C = es.state().covariance;
        CHECK((C - C.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(C);
        CHECK(eig.eigenvalues().minCoeff() > 0.0);
        CHECK(es.state().step_size > 0.0);
        if (done) {
            break;
        }
    }
}

TEST_CASE("bounded CMA-ES never evaluates outside the box") {
    OptimOptions opts;
    opts.seed = 6;
    opts.bounds = Bounds{{-1.0, -1.0, 2.0}, {1.0, 1.0, 3.0}};
    std::size_t violations = 0;
    const auto f = [&](std::span<const double> x) {
        if (!opts.bounds->contains(x)) {
            ++violations;
        }
        return sphere(x);
    };
    const auto r = cmaes_minimize(f, std::vector<double>{0.9, -0.9, 2.9}, std::nullopt, opts);
    CHECK(violations == 0);
    CHECK(r.best_point[2] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("option validation") {
    OptimOptions opts;
    opts.tol_fun = 0.0;
    CHECK_THROWS_AS(opts.validate(2), std::invalid_argument);
    opts = OptimOptions{};
    opts.bounds = Bounds{{1.0}, {0.0}};
    CHECK_THROWS_AS(opts.validate(1), std::invalid_argument);
    opts = OptimOptions{};
    CHECK_THROWS_AS((void)cmaes_minimize(sphere, std::vector<double>{std::nan("")}, 1.0, opts),
                    std::invalid_argument);
}

TEST_CASE("Nelder-Mead examples") {
    OptimOptions opts;
    SUBCASE("sphere") {
        const auto r = nelder_mead_minimize(sphere, std::vector<double>(5, 1.0), opts);
        CHECK(r.best_value < 1e-8);
    }
    SUBCASE("Rosenbrock") {
        const auto r = nelder_mead_minimize(rosenbrock, std::vector<double>{-1.2, 1.0}, opts);
        CHECK(r.best_value < 1e-6);
        CHECK(r.best_point[0] == doctest::Approx(1.0).epsilon(1e-3));
    }
    SUBCASE("active lower bound") {
        opts.bounds = Bounds{{2.0}, {10.0}};
        const auto r = nelder_mead_minimize(sphere, std::vector<double>{5.0}, opts);
        CHECK(r.best_point[0] == 2.0);
    }
    SUBCASE("bounded runs stay in the box") {
        opts.bounds = Bounds{{-0.5, -0.5}, {0.5, 0.5}};
        bool outside = false;
        const auto f = [&](std::span<const double> x) {
            outside = outside || !opts.bounds->contains(x);
            return rosenbrock(x);
        };
        (void)nelder_mead_minimize(f, std::vector<double>{0.0, 0.0}, opts);
        CHECK_FALSE(outside);
    }
    SUBCASE("degenerate simplex") {
        opts.bounds = Bounds{{1.0, 0.0}, {1.0, 1.0}};
        CHECK_THROWS_AS((void)nelder_mead_minimize(sphere, std::vector<double>{1.0, 0.5}, opts),
                        std::invalid_argument);
    }
}

}  // TEST_SUITE
