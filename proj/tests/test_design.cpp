#include "support.hpp"
#include "thrlasso/error.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace thrlasso;
using thrlasso::testing::Gen;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Dataset, RejectsMismatchedLengths) {
    EXPECT_EQ(code_of([] { Dataset::create(Vector::Zero(3), Matrix::Ones(4, 2), Vector::LinSpaced(3, 0, 1)); }),
              ErrorCode::LengthMismatch);
}

TEST(Dataset, RejectsNonFiniteAndZeroColumns) {
    Matrix X = Matrix::Ones(3, 2);
    X(1, 1) = std::nan("");
    EXPECT_EQ(code_of([&] { Dataset::create(Vector::Zero(3), X, Vector::LinSpaced(3, 0, 1)); }), ErrorCode::NonFinite);
    Matrix Z = Matrix::Ones(3, 2);
    Z.col(1).setZero();
    EXPECT_EQ(code_of([&] { Dataset::create(Vector::Zero(3), Z, Vector::LinSpaced(3, 0, 1)); }), ErrorCode::ZeroColumn);
}

TEST(Dataset, DuplicateQNamesBothRows) {
    Vector q(4);
    q << 0.1, 0.7, 0.3, 0.7;
    try {
        Dataset::create(Vector::Zero(4), Matrix::Ones(4, 1), q);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DuplicateQ);
        EXPECT_NE(std::string(e.what()).find("rows 2 and 4"), std::string::npos) << e.what();
    }
}

TEST(Dataset, JitterBreaksTiesAndKeepsOrder) {
    Vector q(5);
    q << 0.2, 0.5, 0.5, 0.5, 0.9;
    const auto d = Dataset::create(Vector::Zero(5), Matrix::Ones(5, 1), q, {}, TiePolicy::Jitter);
    EXPECT_EQ(d.jittered_ties(), 2);
    std::vector<double> v(d.q().begin(), d.q().end());
    EXPECT_EQ(std::adjacent_find(v.begin(), v.end()), v.end());
    EXPECT_LT(d.q()[3], 0.9);
    EXPECT_EQ(d.names().front(), "x1");
}

TEST(Design, StrictIndicatorAtTau) {
    Vector q(3);
    q << 0.2, 0.5, 0.8;
    Matrix X(3, 1);
    X << 1, 2, 3;
    const auto d = Dataset::create(Vector::Zero(3), X, q);
    const auto des = build_design(d, 0.5);
    EXPECT_EQ(des.columns(0, 1), 1.0);
    EXPECT_EQ(des.columns(1, 1), 0.0);  // q == tau is not below tau
    EXPECT_NEAR(des.col_norms[0], std::sqrt(14.0 / 3.0), 1e-15);
    EXPECT_NEAR(des.col_norms[1], std::sqrt(1.0 / 3.0), 1e-15);
}

TEST(Design, IncrementalMatchesRebuildProperty) {
    Gen gen(11);
    for (int trial = 0; trial < 50; ++trial) {
        const auto data = gen.dataset(gen.integer(5, 40), gen.integer(1, 6));
        auto des = build_design(data, gen.uniform());
        for (int step = 0; step < 8; ++step) {
            const double tau = gen.uniform(-0.1, 1.1);
            advance_design(data, des, tau);
            const auto fresh = build_design(data, tau);
            ASSERT_EQ(des.columns, fresh.columns);
            ASSERT_LT((des.col_norms - fresh.col_norms).cwiseAbs().maxCoeff(), 1e-15);
        }
    }
}

TEST(TauGrid, EquispacedEndpointsAndCount) {
    const auto g = TauGrid::equispaced(0.15, 0.85);
    ASSERT_EQ(g.points.size(), 71u);
    EXPECT_DOUBLE_EQ(g.points.front(), 0.15);
    EXPECT_DOUBLE_EQ(g.points.back(), 0.85);
    EXPECT_NEAR(g.points[35], 0.5, 1e-15);
    EXPECT_EQ(TauGrid::equispaced(0.4, 0.4, 1).points.size(), 1u);
}

TEST(TauGrid, ValidateRequiresInteriorRange) {
    Gen gen(3);
    const auto data = gen.dataset(30, 2);
    EXPECT_EQ(code_of([&] { TauGrid::equispaced(-0.5, 0.5, 5).validate_for(data); }), ErrorCode::InvalidArgument);
    EXPECT_NO_THROW(TauGrid::equispaced(0.15, 0.85, 5).validate_for(data));
}

TEST(TauGrid, AdaptiveUsesMidpoints) {
    Vector q(4);
    q << 0.1, 0.4, 0.2, 0.9;
    const auto d = Dataset::create(Vector::Zero(4), Matrix::Ones(4, 1), q);
    const auto g = TauGrid::adaptive(d, 0.0, 1.0);
    ASSERT_EQ(g.points.size(), 3u);
    EXPECT_DOUBLE_EQ(g.points[0], 0.15);
    EXPECT_DOUBLE_EQ(g.points[1], 0.30000000000000004);
    EXPECT_DOUBLE_EQ(g.points[2], 0.65);
}

TEST(TauGrid, QuantileEndpoints) {
    Vector q = Vector::LinSpaced(11, 0.0, 1.0);
    const auto d = Dataset::create(Vector::Zero(11), Matrix::Ones(11, 1), q);
    const auto g = TauGrid::quantile(d, 0.1, 0.9, 5);
    EXPECT_NEAR(g.t0, 0.1, 1e-15);
    EXPECT_NEAR(g.t1, 0.9, 1e-15);
    EXPECT_NEAR(empirical_quantile(q, 0.25), 0.25, 1e-15);
}

TEST(Rn, CountingCase) {
    // 30 of 200 rows below t0 with unit covariates: rn = 30 / 200.
    const Eigen::Index n = 200;
    Vector q = Vector::LinSpaced(n, 0.0025, 0.9975);
    const auto d = Dataset::create(Vector::Zero(n), Matrix::Ones(n, 2), q);
    const double t0 = 0.5 * (q[29] + q[30]);
    const auto rn = compute_rn(d, t0);
    EXPECT_DOUBLE_EQ(rn.value, 30.0 / 200.0);
    EXPECT_FALSE(rn.degenerate);
    EXPECT_TRUE(compute_rn(d, 0.0).degenerate);
}

TEST(Rn, TakesTheSmallestColumnRatio) {
    Matrix X(4, 2);
    X << 1, 1, 1, 0.5, 1, 1, 1, 1;
    Vector q(4);
    q << 0.1, 0.2, 0.6, 0.7;
    const auto d = Dataset::create(Vector::Zero(4), X, q);
    // column 2: (1 + 0.25) / (1 + 0.25 + 1 + 1)
    EXPECT_NEAR(compute_rn(d, 0.5).value, 1.25 / 3.25, 1e-15);
}

TEST(TrueModel, RegressionAndRisk) {
    TrueModel t;
    t.beta0 = Vector::Ones(2);
    t.delta0 = Vector::Constant(2, 2.0);
    t.tau0 = 0.5;
    Matrix X(2, 2);
    X << 1, 2, 3, 4;
    Vector q(2);
    q << 0.2, 0.8;
    const Vector f = t.regression(X, q);
    EXPECT_DOUBLE_EQ(f[0], 3.0 + 6.0);
    EXPECT_DOUBLE_EQ(f[1], 7.0);
    EXPECT_EQ(threshold_regression(X, q, t.alpha0(), 0.5), f);
    EXPECT_DOUBLE_EQ(prediction_risk_norm(f, f), 0.0);
    EXPECT_EQ(code_of([&] { prediction_risk_norm(f, Vector::Zero(3)); }), ErrorCode::LengthMismatch);
}

TEST(Dataset, WithoutRowDropsOneObservation) {
    Gen gen(5);
    const auto d = gen.dataset(10, 3);
    const auto f = d.without_row(4);
    EXPECT_EQ(f.n(), 9);
    EXPECT_EQ(f.y()[4], d.y()[5]);
    EXPECT_EQ(f.X().row(3), d.X().row(3));
}
