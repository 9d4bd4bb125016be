#include "support.hpp"
#include "thrlasso/error.hpp"
#include "thrlasso/rng.hpp"
#include "thrlasso/simulation.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace thrlasso;

namespace {

SimulationConfig small_config() {
    SimulationConfig cfg;
    cfg.n = 60;
    cfg.M = 10;
    cfg.grid.points = 21;
    cfg.replications = 6;
    cfg.eval_size = 100;
    cfg.estimators = {EstimatorKind::Lasso, EstimatorKind::LeastSquares, EstimatorKind::Oracle1,
                      EstimatorKind::Oracle2};
    return cfg;
}

}  // namespace

// Known-answer vectors from the Random123 distribution (kat_vectors, philox4x32_10).
TEST(Philox, KnownAnswers) {
    using B = Philox4x32::Block;
    EXPECT_EQ(Philox4x32::bijection(B{0, 0, 0, 0}, {0, 0}), (B{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
    EXPECT_EQ(Philox4x32::bijection(B{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
              (B{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
    EXPECT_EQ(Philox4x32::bijection(B{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
              (B{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
    auto a = make_stream(7, 3, StreamPurpose::Design);
    auto b = make_stream(7, 3, StreamPurpose::Design);
    auto c = make_stream(7, 3, StreamPurpose::Noise);
    auto d = make_stream(7, 4, StreamPurpose::Design);
    int same_c = 0, same_d = 0;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        EXPECT_EQ(x, b.next_u64());
        same_c += x == c.next_u64();
        same_d += x == d.next_u64();
    }
    EXPECT_EQ(same_c, 0);
    EXPECT_EQ(same_d, 0);
}

TEST(Philox, UniformMoments) {
    auto rng = make_stream(1, 0, StreamPurpose::Eval);
    const int N = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < N; ++i) {
        const double u = rng.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sq += u * u;
    }
    EXPECT_NEAR(sum / N, 0.5, 0.005);
    EXPECT_NEAR(sq / N - (sum / N) * (sum / N), 1.0 / 12.0, 0.002);
}

TEST(NormalQuantile, InvertsErfcCdf) {
    for (double p = 1e-12; p < 1.0; p = p < 0.01 ? p * 10 : p + 0.0137) {
        const double x = normal_quantile(p);
        const double cdf = 0.5 * std::erfc(-x / std::sqrt(2.0));
        EXPECT_NEAR(cdf, p, 1e-14 + 1e-12 * p) << p;
    }
    EXPECT_EQ(normal_quantile(0.5), 0.0);
    EXPECT_THROW(normal_quantile(0.0), Error);
    EXPECT_THROW(normal_quantile(1.0), Error);
}

TEST(Simulate, DeterministicForSeedAndIndex) {
    const auto cfg = small_config();
    const auto a = simulate_dataset(cfg, 2);
    const auto b = simulate_dataset(cfg, 2);
    const auto c = simulate_dataset(cfg, 3);
    EXPECT_EQ(a.data.y(), b.data.y());
    EXPECT_EQ(a.data.X(), b.data.X());
    EXPECT_EQ(a.data.q(), b.data.q());
    EXPECT_NE(a.data.y(), c.data.y());
}

TEST(Simulate, TrueCoefficients) {
    auto cfg = small_config();
    cfg.c = 2.0;
    const auto t = cfg.true_model();
    EXPECT_EQ(t.beta0[0], 1.0);
    EXPECT_EQ(t.beta0[2], 1.0);
    EXPECT_EQ(t.beta0.cwiseAbs().sum(), 2.0);
    EXPECT_EQ(t.delta0[1], -2.0);
    EXPECT_EQ(t.delta0[2], 2.0);
    EXPECT_EQ(t.delta0.cwiseAbs().sum(), 4.0);
    EXPECT_EQ(t.tau0, 0.5);
}

TEST(Simulate, NoThresholdEffectIgnoresQ) {
    auto cfg = small_config();
    cfg.c = 0.0;
    const auto s = simulate_dataset(cfg, 0);
    const Vector permuted = s.data.q().reverse();
    EXPECT_EQ(s.truth.regression(s.data.X(), permuted), s.truth.regression(s.data.X(), s.data.q()));
}

TEST(Simulate, ToeplitzAdjacentCorrelation) {
    auto rng = make_stream(99, 0, StreamPurpose::Design);
    const Matrix X = draw_covariates(rng, 5000, 6, 0.3);
    for (Eigen::Index j = 0; j + 1 < X.cols(); ++j) {
        const double cov = X.col(j).dot(X.col(j + 1)) / 5000.0;
        EXPECT_NEAR(cov, 0.3, 0.05);
        EXPECT_NEAR(X.col(j).squaredNorm() / 5000.0, 1.0, 0.06);
    }
    EXPECT_NEAR(X.col(0).dot(X.col(2)) / 5000.0, 0.09, 0.05);
}

TEST(Simulate, ConfigValidation) {
    auto cfg = small_config();
    cfg.rho = 1.0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = small_config();
    cfg.M = 2;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = small_config();
    cfg.replications = 0;
    EXPECT_THROW(cfg.validate(), Error);
    cfg = small_config();
    cfg.estimators = {EstimatorKind::Lasso, EstimatorKind::Lasso};
    EXPECT_THROW(cfg.validate(), Error);
    EXPECT_THROW(estimator_from_string("ridge"), Error);
    EXPECT_EQ(estimator_from_string("oracle2"), EstimatorKind::Oracle2);
}

TEST(PredictionError, ZeroAtTruth) {
    const auto cfg = small_config();
    const auto s = simulate_dataset(cfg, 0);
    const auto eval = draw_evaluation_set(cfg, 0);
    EXPECT_EQ(prediction_error(s.truth.alpha0(), s.truth.tau0, s.truth, eval), 0.0);
}

TEST(PredictionError, MatchesDirectSummation) {
    const auto cfg = small_config();
    const auto s = simulate_dataset(cfg, 1);
    const auto eval = draw_evaluation_set(cfg, 1);
    thrlasso::testing::Gen gen(5);
    const Vector alpha = gen.vector(2 * cfg.M);
    const double tau = 0.37;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < eval.X.rows(); ++i) {
        double f0 = 0.0, f = 0.0;
        for (Eigen::Index j = 0; j < cfg.M; ++j) {
            const double x = eval.X(i, j);
            f0 += x * s.truth.beta0[j] + (eval.q[i] < 0.5 ? x * s.truth.delta0[j] : 0.0);
            f += x * alpha[j] + (eval.q[i] < tau ? x * alpha[cfg.M + j] : 0.0);
        }
        acc += (f - f0) * (f - f0);
    }
    const double oracle = acc / static_cast<double>(eval.X.rows());
    EXPECT_NEAR(prediction_error(alpha, tau, s.truth, eval), oracle, 1e-12 * oracle);
}

TEST(MonteCarlo, SummaryRecomputableFromRecords) {
    const auto cfg = small_config();
    const auto report = run_monte_carlo(cfg);
    ASSERT_EQ(report.replications.size(), 6u);
    for (const auto kind : cfg.estimators) {
        std::vector<double> pe, l1;
        double m = 0.0, tau = 0.0, sup = 0.0;
        for (const auto& r : report.replications) {
            const auto* rec = r.find(kind);
            ASSERT_NE(rec, nullptr);
            if (rec->failed) continue;
            pe.push_back(rec->pe);
            l1.push_back(rec->l1_alpha);
            m += rec->m_alpha;
            tau += *rec->l1_tau;
            sup += rec->support_recovered;
        }
        const auto& s = report.summary(kind);
        const double k = static_cast<double>(pe.size());
        ASSERT_EQ(s.completed, static_cast<int>(pe.size()));
        const double mean = std::accumulate(pe.begin(), pe.end(), 0.0) / k;
        double ss = 0.0;
        for (const double v : pe) ss += (v - mean) * (v - mean);
        EXPECT_NEAR(s.pe_mean, mean, 1e-12);
        EXPECT_NEAR(s.pe_sd, std::sqrt(ss / (k - 1.0)), 1e-12);
        EXPECT_NEAR(s.pe_median, median(pe), 1e-12);
        EXPECT_NEAR(s.m_alpha_mean, m / k, 1e-12);
        EXPECT_NEAR(s.l1_alpha_mean, std::accumulate(l1.begin(), l1.end(), 0.0) / k, 1e-12);
        EXPECT_NEAR(*s.l1_tau_mean, tau / k, 1e-12);
        EXPECT_NEAR(s.support_frequency, sup / k, 1e-12);
    }
    // Oracle 2 knows tau0.
    for (const auto& r : report.replications) EXPECT_EQ(r.find(EstimatorKind::Oracle2)->tau_hat, 0.5);
}

TEST(MonteCarlo, SingleReplication) {
    auto cfg = small_config();
    cfg.replications = 1;
    const auto report = run_monte_carlo(cfg);
    const auto& s = report.summary(EstimatorKind::Lasso);
    ASSERT_EQ(s.completed, 1);
    EXPECT_EQ(s.pe_mean, s.pe_median);
    EXPECT_EQ(s.pe_sd, 0.0);
}

TEST(MonteCarlo, NoThresholdEffectOmitsTauError) {
    auto cfg = small_config();
    cfg.c = 0.0;
    cfg.replications = 2;
    cfg.estimators = {EstimatorKind::Lasso};
    const auto report = run_monte_carlo(cfg);
    EXPECT_FALSE(report.summary(EstimatorKind::Lasso).l1_tau_mean.has_value());
    for (const auto& r : report.replications) EXPECT_FALSE(r.find(EstimatorKind::Lasso)->l1_tau.has_value());
}

TEST(MonteCarlo, IdenticalAcrossWorkerCounts) {
    auto cfg = small_config();
    cfg.replications = 8;
    const auto one = run_monte_carlo(cfg);
    cfg.workers = 8;
    const auto eight = run_monte_carlo(cfg);
    for (std::size_t k = 0; k < one.summaries.size(); ++k) {
        EXPECT_EQ(one.summaries[k].pe_mean, eight.summaries[k].pe_mean);
        EXPECT_EQ(one.summaries[k].l1_alpha_mean, eight.summaries[k].l1_alpha_mean);
    }
    for (std::size_t r = 0; r < one.replications.size(); ++r)
        EXPECT_EQ(one.replications[r].find(EstimatorKind::Lasso)->pe,
                  eight.replications[r].find(EstimatorKind::Lasso)->pe);
}

TEST(Rate, OlsSlope) {
    EXPECT_NEAR(ols_slope({0.0, 1.0, 2.0}, {1.0, 3.0, 5.0}), 2.0, 1e-15);
    EXPECT_THROW(ols_slope({1.0}, {1.0}), Error);
}

TEST(Median, EvenAndOdd) {
    EXPECT_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_EQ(median({4.0, 1.0, 2.0, 3.0}), 2.5);
}
