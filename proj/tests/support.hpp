#pragma once

#include "thrlasso/design.hpp"

#include <random>

namespace thrlasso::testing {

// Hand-rolled generators for property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double normal() { return norm_(rng_); }
    double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

    Matrix matrix(Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
        return m;
    }

    Vector vector(Eigen::Index n) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
        return v;
    }

    /// Distinct uniform thresholds.
    Vector thresholds(Eigen::Index n) {
        Vector q(n);
        for (Eigen::Index i = 0; i < n; ++i) q[i] = uniform();
        return q;
    }

    /// y = X beta + X delta 1{q < tau0} + noise with a sparse (beta, delta).
    Dataset dataset(Eigen::Index n, Eigen::Index M, double tau0 = 0.5, double noise = 0.5) {
        Matrix X = matrix(n, M);
        Vector q = thresholds(n);
        Vector beta = Vector::Zero(M), delta = Vector::Zero(M);
        beta[0] = 1.0;
        if (M > 1) delta[M > 2 ? 2 : 1] = 1.0;
        Vector y = X * beta;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (q[i] < tau0) y[i] += X.row(i).dot(delta);
            y[i] += noise * normal();
        }
        return Dataset::create(std::move(y), std::move(X), std::move(q));
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> norm_{0.0, 1.0};
};

}  // namespace thrlasso::testing
