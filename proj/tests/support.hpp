#pragma once

#include "dynqr/quantile_core.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

namespace dynqr::test {

/// Small seeded generator for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(rng_); }
    std::size_t index(std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
    }

    Matrix matrix(Eigen::Index rows, Eigen::Index cols, double lo = -3.0, double hi = 3.0) {
        Matrix m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i) {
            for (Eigen::Index j = 0; j < cols; ++j) {
                m(i, j) = uniform(lo, hi);
            }
        }
        return m;
    }

    std::vector<double> series(std::size_t n) {
        std::vector<double> v(n);
        for (auto& x : v) {
            x = normal();
        }
        return v;
    }

    SeriesData data(std::size_t T, std::size_t m) {
        SeriesData d;
        d.y = series(T);
        d.exog = matrix(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(m), 0.0, 1.0);
        return d;
    }

    /// Grid of Q sorted distinct levels in (0,1).
    QuantileGrid grid(std::size_t Q) {
        std::vector<double> levels;
        while (levels.size() < Q) {
            const double tau = std::round(uniform(0.01, 0.99) * 1000.0) / 1000.0;
            if (std::find(levels.begin(), levels.end(), tau) == levels.end()) {
                levels.push_back(tau);
            }
        }
        std::sort(levels.begin(), levels.end());
        return QuantileGrid(levels);
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
};

/// Row-wise sorted copy.
inline Matrix sort_rows(Matrix m) {
    for (Eigen::Index t = 0; t < m.rows(); ++t) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index q = 0; q < m.cols(); ++q) {
            row[static_cast<std::size_t>(q)] = m(t, q);
        }
        std::sort(row.begin(), row.end());
        for (Eigen::Index q = 0; q < m.cols(); ++q) {
            m(t, q) = row[static_cast<std::size_t>(q)];
        }
    }
    return m;
}

}  // namespace dynqr::test
