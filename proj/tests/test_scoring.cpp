#include "dynqr/scoring.hpp"
#include "support.hpp"

#include <doctest.h>

#include <numeric>

using namespace dynqr;
using namespace dynqr::scoring;

TEST_SUITE("scoring") {

TEST_CASE("quantile score") {
    CHECK(quantile_score(1.3, 1.3, 0.2) == 0.0);
    CHECK(quantile_score(0.0, 1.0, 0.5) == doctest::Approx(1.0));
    CHECK(quantile_score(1.0, 0.0, 0.9) == doctest::Approx(1.8));
    CHECK_THROWS_AS((void)quantile_score(0.0, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("weights") {
    CHECK(weight(WeightScheme::uniform, 0.3, 4) == 0.25);
    CHECK(weight(WeightScheme::centre, 0.3, 4) == doctest::Approx(0.21));
    CHECK(weight(WeightScheme::left_tail, 0.3, 4) == doctest::Approx(0.49));
    CHECK(weight(WeightScheme::right_tail, 0.3, 4) == doctest::Approx(0.09));
    test::Gen g(1);
    for (int i = 0; i < 200; ++i) {
        const double tau = g.uniform(1e-6, 1 - 1e-6);
        for (auto s : kAllSchemes) {
            CHECK(weight(s, tau, 9) >= 0.0);
        }
    }
}

TEST_CASE("coefficient bias") {
    CoefficientSet truth(3, 2, 1);
    truth.beta.setConstant(1.0);
    std::vector<CoefficientSet> t1{truth};
    CHECK(coefficient_bias(t1, t1, 1) == 0.0);

    CoefficientSet off = truth;
    off.beta(1, 0) += 0.3;
    CoefficientSet est(1, 1, 0);
    est.beta(0, 0) = 1.3;
    CoefficientSet tru(1, 1, 0);
    tru.beta(0, 0) = 1.0;
    CHECK(coefficient_bias(std::vector{est}, std::vector{tru}, 0) == doctest::Approx(0.3));

    // per-replication mean absolute deviations 0.2 and 0.4
    CoefficientSet a(1, 2, 0), b(1, 2, 0), z(1, 2, 0);
    a.beta << 0.2, -0.2;
    b.beta << 0.4, 0.4;
    CHECK(coefficient_bias(std::vector{a, b}, std::vector{z, z}, 0) == doctest::Approx(0.3));

    // theta enters only when the estimate has it
    CoefficientSet with_theta(1, 1, 1), truth_theta(1, 1, 1);
    with_theta.theta(0, 0) = 0.5;
    CHECK(coefficient_bias(std::vector{with_theta}, std::vector{truth_theta}, 0) == doctest::Approx(0.25));
    CHECK_THROWS_AS((void)coefficient_bias(std::vector{a}, std::vector{a, b}, 0), std::invalid_argument);
}

TEST_CASE("crossing incidence examples") {
    Matrix sorted(2, 3);
    sorted << 1, 2, 3, 4, 5, 6;
    CHECK(crossing_incidence(sorted) == 0.0);
    Matrix swap(1, 2);
    swap << 2, 1;
    CHECK(crossing_incidence(swap) == 100.0);
    Matrix one(2, 3);
    one << 1, 3, 2, 4, 5, 6;
    CHECK(crossing_incidence(one) == doctest::Approx(100.0 / 3.0));
}

TEST_CASE("crossing incidence agrees with crossing distance on zero") {
    test::Gen g(2);
    for (int rep = 0; rep < 300; ++rep) {
        Matrix m = g.matrix(static_cast<Eigen::Index>(g.index(1, 8)), static_cast<Eigen::Index>(g.index(2, 5)));
        if (rep % 2 == 0) {
            m = test::sort_rows(m);
        }
        CHECK((crossing_incidence(m) == 0.0) == (crossing_distance(m) == 0.0));
        const double pct = crossing_incidence(m);
        CHECK(pct >= 0.0);
        CHECK(pct <= 100.0);
    }
}

TEST_CASE("rearrangement") {
    CHECK(rearrange(std::vector<double>{1, 3, 2}) == std::vector<double>{1, 2, 3});
    CHECK(rearrange(std::vector<double>{1, 2, 3}) == std::vector<double>{1, 2, 3});
    CHECK(rearrange(std::vector<double>{2, 2, 2}) == std::vector<double>{2, 2, 2});
}

TEST_CASE("qwcrps definitions") {
    const QuantileGrid grid({0.25, 0.75});
    Matrix perfect(2, 2);
    perfect << 1, 1, -2, -2;
    const std::vector<double> y{1.0, -2.0};
    for (auto s : kAllSchemes) {
        CHECK(qwcrps(perfect, y, grid, s) == 0.0);
    }

    // one observation y = 0 with forecasts (-1, 1) under the centre scheme:
    // QS(0.25) = 2 (0 - 0.25)(-1 - 0) = 0.5, QS(0.75) = 2 (1 - 0.75)(1 - 0) = 0.5, weights 0.1875 each
    Matrix f(1, 2);
    f << -1.0, 1.0;
    CHECK(qwcrps(f, std::vector<double>{0.0}, grid, WeightScheme::centre) == doctest::Approx(0.1875));

    test::Gen g(3);
    const Matrix m = g.matrix(30, 2);
    const std::vector<double> yy = g.series(30);
    double plain = 0.0;
    for (Eigen::Index t = 0; t < 30; ++t) {
        for (std::size_t q = 0; q < 2; ++q) {
            plain += quantile_score(yy[static_cast<std::size_t>(t)], m(t, static_cast<Eigen::Index>(q)), grid[q]);
        }
    }
    CHECK(qwcrps(m, yy, grid, WeightScheme::uniform) == doctest::Approx(plain / 60.0));
}

TEST_CASE("qwcrps: ordering invariance and positive homogeneity") {
    test::Gen g(4);
    for (int rep = 0; rep < 50; ++rep) {
        const QuantileGrid grid = g.grid(g.index(1, 7));
        const auto N = static_cast<Eigen::Index>(g.index(1, 25));
        const Matrix f = g.matrix(N, static_cast<Eigen::Index>(grid.size()));
        const std::vector<double> y = g.series(static_cast<std::size_t>(N));
        std::vector<std::size_t> perm(static_cast<std::size_t>(N));
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), g.engine());
        Matrix fp(N, f.cols());
        std::vector<double> yp(y.size());
        for (std::size_t i = 0; i < perm.size(); ++i) {
            fp.row(static_cast<Eigen::Index>(i)) = f.row(static_cast<Eigen::Index>(perm[i]));
            yp[i] = y[perm[i]];
        }
        const double c = g.uniform(0.1, 10);
        std::vector<double> yc(y);
        for (auto& v : yc) {
            v *= c;
        }
        for (auto s : kAllSchemes) {
            const double base = qwcrps(f, y, grid, s);
            CHECK(qwcrps(fp, yp, grid, s) == doctest::Approx(base).epsilon(1e-12));
            CHECK(qwcrps(c * f, yc, grid, s) == doctest::Approx(c * base).epsilon(1e-12));
        }
    }
}

TEST_CASE("sorting never worsens the uniform score") {
    test::Gen g(5);
    for (int rep = 0; rep < 500; ++rep) {
        const QuantileGrid grid = g.grid(g.index(2, 9));
        const auto N = static_cast<Eigen::Index>(g.index(1, 20));
        const Matrix f = g.matrix(N, static_cast<Eigen::Index>(grid.size()));
        const std::vector<double> y = g.series(static_cast<std::size_t>(N));
        const auto raw = score_forecasts(f, y, grid, false);
        const auto sorted = score_forecasts(f, y, grid, true);
        CHECK(sorted.score(WeightScheme::uniform) <= raw.score(WeightScheme::uniform));
        CHECK(raw.qs_total == raw.score(WeightScheme::uniform));
        CHECK(sorted.sorted);
        CHECK(raw.per_observation.size() == static_cast<std::size_t>(N));
    }
}

}  // TEST_SUITE
