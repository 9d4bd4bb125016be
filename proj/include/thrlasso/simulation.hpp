#pragma once

#include "thrlasso/design.hpp"
#include "thrlasso/estimator.hpp"
#include "thrlasso/rng.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace thrlasso {

enum class EstimatorKind { Lasso, LeastSquares, Oracle1, Oracle2 };

std::string to_string(EstimatorKind kind);
/// Throws ConfigError on an unknown name.
EstimatorKind estimator_from_string(const std::string& name);

struct GridSpec {
    double t0 = 0.15;
    double t1 = 0.85;
    int points = TauGrid::kDefaultPoints;
    /// Use the midpoints of the sorted Q inside [t0, t1] instead of an equi-spaced grid.
    bool adaptive = false;

    TauGrid build(const Dataset& data) const;
};

/**
 * One Monte Carlo design: X rows N(0, Sigma) with Sigma_ij = rho^|i-j|,
 * Q ~ U(0, 1), U ~ N(0, sigma^2), beta0 = (1, 0, 1, 0, ..., 0) and
 * delta0 = c (0, -1, 1, 0, ..., 0).
 */
struct SimulationConfig {
    int n = 200;
    int M = 50;
    double rho = 0.0;
    double c = 1.0;
    double tau0 = 0.5;
    double sigma = 0.5;
    GridSpec grid;
    LambdaRule lambda_rule = LambdaRule::theoretical(2.8, 0.5);
    SolverConfig solver;
    int replications = 400;
    std::uint64_t seed = 20120101;
    int workers = 1;
    int eval_size = 400;
    std::vector<EstimatorKind> estimators{EstimatorKind::Lasso};

    /// Throws ConfigError.
    void validate() const;
    TrueModel true_model() const;
};

struct SimulatedSample {
    Dataset data;
    TrueModel truth;
};

/**
 * Draws replication `index`. Design uses the Design stream (X row by row, then Q),
 * noise the Noise stream; both are keyed by (seed, index).
 */
SimulatedSample simulate_dataset(const SimulationConfig& config, std::uint64_t index);

/// Covariates from the AR(1) recursion X1 = Z1, Xj = rho X(j-1) + sqrt(1 - rho^2) Zj.
Matrix draw_covariates(Philox4x32& rng, Eigen::Index n, Eigen::Index M, double rho);

struct EvaluationSet {
    Matrix X;
    Vector q;
};

/// Fresh covariates and thresholds from the Eval stream of (seed, index).
EvaluationSet draw_evaluation_set(const SimulationConfig& config, std::uint64_t index);

/// Mean of (f0 - f_hat)^2 over the evaluation set.
double prediction_error(const Vector& alpha_hat, double tau_hat, const TrueModel& truth,
                        const EvaluationSet& eval);

struct EstimatorRecord {
    bool failed = false;
    std::string failure;
    double pe = 0.0;
    int m_alpha = 0;
    double l1_alpha = 0.0;
    std::optional<double> l1_tau;  ///< absent when c = 0
    bool support_recovered = false;
    double tau_hat = 0.0;
    double lambda = 0.0;
    bool singular = false;         ///< least-squares pseudo-inverse fallback
};

struct ReplicationResult {
    std::uint64_t index = 0;
    std::vector<std::pair<EstimatorKind, EstimatorRecord>> records;

    const EstimatorRecord* find(EstimatorKind kind) const;
};

struct EstimatorSummary {
    EstimatorKind kind = EstimatorKind::Lasso;
    int completed = 0;
    int failed = 0;
    double pe_mean = 0.0;
    double pe_median = 0.0;
    double pe_sd = 0.0;
    double m_alpha_mean = 0.0;
    double l1_alpha_mean = 0.0;
    double l1_alpha_median = 0.0;
    std::optional<double> l1_tau_mean;
    std::optional<double> l1_tau_median;
    double support_frequency = 0.0;

    double failure_rate() const;
};

struct MonteCarloReport {
    SimulationConfig config;
    std::vector<ReplicationResult> replications;
    std::vector<EstimatorSummary> summaries;
    double wall_seconds = 0.0;

    const EstimatorSummary& summary(EstimatorKind kind) const;
};

/// Runs one replication of every configured estimator.
ReplicationResult run_replication(const SimulationConfig& config, std::uint64_t index);

/// Aggregates in replication order; failed records are excluded and counted.
std::vector<EstimatorSummary> summarize(const std::vector<EstimatorKind>& estimators,
                                        const std::vector<ReplicationResult>& replications);

MonteCarloReport run_monte_carlo(const SimulationConfig& config);

double median(std::vector<double> values);

struct RatePoint {
    int n = 0;
    double tau_error_median = 0.0;
    double l1_alpha_median = 0.0;
    int failed = 0;
};

struct RateExperiment {
    std::vector<RatePoint> points;
    double tau_slope = 0.0;    ///< OLS slope of log median |tau_hat - tau0| on log n
    double alpha_slope = 0.0;  ///< same for |alpha_hat - alpha0|_1
};

/// Reruns `base` (Lasso only) at each n with the same seed.
RateExperiment run_rate_experiment(SimulationConfig base, const std::vector<int>& ns);

/// Least-squares slope of y on x.
double ols_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace thrlasso
