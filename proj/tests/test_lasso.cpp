#include "support.hpp"
#include "thrlasso/error.hpp"
#include "thrlasso/lasso.hpp"

#include <gtest/gtest.h>

#include <limits>

using namespace thrlasso;
using thrlasso::testing::Gen;

namespace {

// Exhaustive oracle: every sign pattern s in {-1, 0, 1}^p gives the stationary point
// X_A'X_A a = X_A'y - (n lambda / 2) w_A s_A on its support; the minimizer is the best
// sign-consistent candidate.
double sign_pattern_oracle(const ThresholdDesign& d, const Vector& y, double lambda) {
    const Eigen::Index p = d.p();
    const double n = static_cast<double>(d.n());
    double best = penalized_objective(d, y, Vector::Zero(p), lambda);
    int patterns = 1;
    for (Eigen::Index k = 0; k < p; ++k) patterns *= 3;
    for (int code = 0; code < patterns; ++code) {
        std::vector<Eigen::Index> idx;
        std::vector<double> sign;
        int c = code;
        for (Eigen::Index j = 0; j < p; ++j, c /= 3) {
            if (c % 3 == 0) continue;
            idx.push_back(j);
            sign.push_back(c % 3 == 1 ? 1.0 : -1.0);
        }
        if (idx.empty()) continue;
        const auto k = static_cast<Eigen::Index>(idx.size());
        Matrix XA(d.n(), k);
        Vector rhs(k);
        for (Eigen::Index a = 0; a < k; ++a) XA.col(a) = d.columns.col(idx[static_cast<std::size_t>(a)]);
        rhs = XA.transpose() * y;
        for (Eigen::Index a = 0; a < k; ++a)
            rhs[a] -= 0.5 * n * lambda * d.col_norms[idx[static_cast<std::size_t>(a)]] * sign[static_cast<std::size_t>(a)];
        const Vector aA = (XA.transpose() * XA).ldlt().solve(rhs);
        bool consistent = true;
        for (Eigen::Index a = 0; a < k; ++a) consistent = consistent && aA[a] * sign[static_cast<std::size_t>(a)] > 0.0;
        if (!consistent) continue;
        Vector alpha = Vector::Zero(p);
        for (Eigen::Index a = 0; a < k; ++a) alpha[idx[static_cast<std::size_t>(a)]] = aA[a];
        best = std::min(best, penalized_objective(d, y, alpha, lambda));
    }
    return best;
}

ThresholdDesign random_design(Gen& gen, Eigen::Index n, Eigen::Index p) {
    return ThresholdDesign::from_matrix(gen.matrix(n, p));
}

}  // namespace

TEST(SoftThreshold, Basics) {
    EXPECT_EQ(soft_threshold(3.0, 1.0), 2.0);
    EXPECT_EQ(soft_threshold(-3.0, 1.0), -2.0);
    EXPECT_EQ(soft_threshold(0.5, 1.0), 0.0);
}

TEST(Lasso, MatchesSignPatternOracle) {
    Gen gen(101);
    for (int trial = 0; trial < 60; ++trial) {
        const auto d = random_design(gen, 10, 4);
        const Vector y = gen.vector(10);
        const double lambda = gen.uniform(0.01, 1.0) * lambda_max(d, y);
        const auto fit = fit_weighted_lasso(d, y, lambda);
        ASSERT_TRUE(fit.converged);
        EXPECT_NEAR(fit.objective, sign_pattern_oracle(d, y, lambda), 1e-8) << "trial " << trial;
    }
}

TEST(Lasso, OrthonormalClosedForm) {
    Gen gen(7);
    const Eigen::Index n = 40, p = 6;
    const Matrix Q = Eigen::HouseholderQR<Matrix>(gen.matrix(n, p)).householderQ() * Matrix::Identity(n, p);
    const auto d = ThresholdDesign::from_matrix(std::sqrt(static_cast<double>(n)) * Q);
    const Vector y = gen.vector(n) * 2.0;
    for (const double lambda : {0.0, 0.05, 0.3, 1.0}) {
        const auto fit = fit_weighted_lasso(d, y, lambda);
        for (Eigen::Index j = 0; j < p; ++j) {
            const double z = d.columns.col(j).dot(y) / static_cast<double>(n);
            EXPECT_NEAR(fit.alpha[j], soft_threshold(z, lambda / 2.0), 1e-10);
        }
    }
}

TEST(Lasso, ZeroAtLambdaMax) {
    Gen gen(8);
    const auto d = random_design(gen, 30, 8);
    const Vector y = gen.vector(30);
    const double lmax = lambda_max(d, y);
    EXPECT_EQ(fit_weighted_lasso(d, y, lmax * (1 + 1e-12)).sparsity(), 0);
    EXPECT_GT(fit_weighted_lasso(d, y, lmax * 0.99).sparsity(), 0);
}

TEST(Lasso, AllZeroDesignRaises) {
    const auto d = ThresholdDesign::from_matrix(Matrix::Zero(5, 2));
    EXPECT_THROW(lambda_max(d, Vector::Ones(5)), Error);
}

TEST(Lasso, ZeroNormColumnsStayZero) {
    Gen gen(9);
    Matrix X = gen.matrix(20, 4);
    X.col(3).setZero();
    const auto d = ThresholdDesign::from_matrix(X);
    Vector warm = Vector::Ones(4);
    const auto fit = fit_weighted_lasso(d, gen.vector(20), 0.01, {}, warm);
    EXPECT_EQ(fit.alpha[3], 0.0);
    EXPECT_TRUE(fit.converged);
}

TEST(Lasso, KktCertifiedOnRandomInstances) {
    Gen gen(10);
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = random_design(gen, gen.integer(5, 50), gen.integer(1, 40));
        const Vector y = gen.vector(d.n());
        const double lambda = gen.uniform(1e-3, 1.0) * lambda_max(d, y);
        const auto fit = fit_weighted_lasso(d, y, lambda);
        ASSERT_TRUE(fit.converged) << trial;
        EXPECT_LT(kkt_residual(d, y, fit.alpha, lambda), 1e-6);
        EXPECT_NEAR(fit.objective, penalized_objective(d, y, fit.alpha, lambda), 1e-12);
    }
}

TEST(Lasso, ScaleEquivarianceProperty) {
    Gen gen(12);
    for (int trial = 0; trial < 30; ++trial) {
        const auto d = random_design(gen, 25, 6);
        const Vector y = gen.vector(25);
        const double lambda = 0.2 * lambda_max(d, y);
        const double c = gen.uniform(0.2, 5.0);
        const auto base = fit_weighted_lasso(d, y, lambda);
        const auto scaled = fit_weighted_lasso(d, c * y, c * lambda);
        EXPECT_LT((scaled.alpha - c * base.alpha).cwiseAbs().maxCoeff(), 1e-7 * c);

        // Rescaling a column leaves the weighted penalty and the fitted values unchanged.
        Matrix X2 = d.columns;
        const double k = gen.uniform(0.1, 10.0);
        X2.col(2) *= k;
        const auto fit2 = fit_weighted_lasso(ThresholdDesign::from_matrix(X2), y, lambda);
        EXPECT_NEAR(fit2.alpha[2] * k, base.alpha[2], 1e-7);
        EXPECT_NEAR(fit2.objective, base.objective, 1e-9);
    }
}

TEST(Lasso, WarmAndColdStartAgree) {
    Gen gen(13);
    for (int trial = 0; trial < 30; ++trial) {
        const auto d = random_design(gen, 30, 10);
        const Vector y = gen.vector(30);
        const double lambda = gen.uniform(0.05, 0.8) * lambda_max(d, y);
        const auto cold = fit_weighted_lasso(d, y, lambda);
        const auto warm = fit_weighted_lasso(d, y, lambda, {}, Vector(gen.vector(10) * 3.0));
        EXPECT_NEAR(cold.objective, warm.objective, 1e-9 * std::max(1.0, cold.objective));
    }
}

TEST(Lasso, NeverWorseThanTheStartProperty) {
    Gen gen(14);
    for (int trial = 0; trial < 50; ++trial) {
        const auto d = random_design(gen, 20, 8);
        const Vector y = gen.vector(20);
        const double lambda = gen.uniform(0.01, 1.0) * lambda_max(d, y);
        SolverConfig cfg;
        cfg.max_iters = gen.integer(1, 4);
        const Vector start = gen.vector(8);
        const auto fit = fit_weighted_lasso(d, y, lambda, cfg, start);
        EXPECT_LE(fit.objective, penalized_objective(d, y, start, lambda) + 1e-12);
    }
}

TEST(Lasso, BoxBoundClampsCoefficients) {
    Gen gen(15);
    const auto d = random_design(gen, 30, 3);
    const Vector y = d.columns * Vector::Constant(3, 5.0);
    SolverConfig cfg;
    cfg.box_bound = 1.0;
    const auto fit = fit_weighted_lasso(d, y, 1e-3, cfg);
    EXPECT_LE(fit.alpha.cwiseAbs().maxCoeff(), 1.0);
}

TEST(Lasso, InvalidInputs) {
    Gen gen(16);
    const auto d = random_design(gen, 10, 2);
    EXPECT_THROW(fit_weighted_lasso(d, Vector::Zero(9), 0.1), Error);
    EXPECT_THROW(fit_weighted_lasso(d, Vector::Zero(10), -1.0), Error);
    EXPECT_THROW(fit_weighted_lasso(d, Vector::Zero(10), 0.1, {}, Vector(Vector::Zero(3))), Error);
    SolverConfig bad;
    bad.kkt_tol = 0.0;
    EXPECT_THROW(fit_weighted_lasso(d, Vector::Zero(10), 0.1, bad), Error);
}

TEST(Lasso, DuplicatedColumnsCertify) {
    Gen gen(17);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix X = gen.matrix(20, 6);
        X.col(3) = X.col(1);
        X.col(5) = 2.0 * X.col(0) - X.col(2);
        const Vector y = gen.vector(20);
        const auto d = ThresholdDesign::from_matrix(X);
        const double lambda = gen.uniform(0.01, 0.5) * lambda_max(d, y);
        const auto fit = fit_weighted_lasso(d, y, lambda);
        EXPECT_TRUE(fit.converged);
        EXPECT_LT(fit.kkt_residual, 1e-6);
    }
}

TEST(Lasso, WideDesignSmallPenaltyCertifies) {
    // p > n at a tiny penalty: the active set saturates and coordinate descent alone is slow.
    Gen gen(18);
    for (int trial = 0; trial < 50; ++trial) {
        const auto n = gen.integer(8, 25);
        const auto data = gen.dataset(n, gen.integer(n / 2 + 1, 20));
        const auto d = build_design(data, gen.uniform(0.2, 0.8));
        const double lambda = gen.uniform(1e-3, 1e-2) * lambda_max(d, data.y());
        const auto fit = fit_weighted_lasso(d, data.y(), lambda);
        EXPECT_TRUE(fit.converged) << trial;
        EXPECT_LT(fit.kkt_residual, 1e-6);
        EXPECT_LE(fit.iters, SolverConfig{}.max_iters);
    }
}
