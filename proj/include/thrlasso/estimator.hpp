#pragma once

#include "thrlasso/design.hpp"
#include "thrlasso/lasso.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace thrlasso {

/**
 * How a rule-level lambda is turned into the two penalties the estimator uses:
 * `fit` for the per-tau Lasso and `select` for ranking tau.
 *
 * Joint: both equal lambda, so (alpha_hat, tau_hat) is the joint minimizer of
 *        S_n(alpha, tau) + lambda |D(tau) alpha|_1.
 * Lars:  fit = 2 lambda / sqrt(n) and select = lambda. The per-tau fits then
 *        solve 1/2 ||y - Z b||^2 + lambda |b|_1 on unit-l2-normalized columns Z,
 *        which is the parameterization of the LARS/lasso path; tau is ranked with
 *        the unscaled lambda. This is the convention that reproduces the published
 *        Monte Carlo tables for the theoretical lambda rule.
 */
enum class PenaltyConvention { Joint, Lars };

struct PenaltyLevels {
    double fit = 0.0;
    double select = 0.0;

    static PenaltyLevels joint(double lambda) { return {lambda, lambda}; }
};

PenaltyLevels penalty_levels(double lambda, Eigen::Index n, PenaltyConvention convention);

enum class LambdaKind { Theoretical, Loocv, Fixed };

struct LambdaRule {
    LambdaKind kind = LambdaKind::Theoretical;
    double A = 2.8;
    std::optional<double> mu;    ///< when set, enforces 0 < mu < 1 and A > 2 sqrt(2) / mu
    double sigma = 0.5;
    std::optional<double> fixed_value;
    std::vector<double> candidates;
    PenaltyConvention convention = PenaltyConvention::Lars;

    static LambdaRule theoretical(double A, double sigma, std::optional<double> mu = std::nullopt,
                                  PenaltyConvention convention = PenaltyConvention::Lars);
    static LambdaRule fixed(double lambda);
    static LambdaRule loocv(std::vector<double> candidates);

    /// Throws InvalidArgument on a malformed rule.
    void validate() const;
};

std::string to_string(LambdaKind kind);
std::string to_string(PenaltyConvention convention);

/// A sigma sqrt(log(3M) / (n rn)).
double lambda_theoretical(Eigen::Index n, Eigen::Index M, double sigma, double A, double rn);

struct ProfilePoint {
    double tau = 0.0;
    LassoFit fit;
    double criterion = 0.0;  ///< S_n(alpha(tau), tau) + select_lambda |D(tau) alpha(tau)|_1
    std::string error;       ///< non-empty when the fit threw; criterion is then +inf

    bool ok() const noexcept { return error.empty() && fit.converged; }
};

struct ThresholdLassoEstimate {
    Vector alpha_hat;
    double tau_hat = 0.0;
    double lambda = 0.0;      ///< select penalty (the rule's lambda)
    double lambda_fit = 0.0;  ///< per-tau Lasso penalty
    std::size_t tau_index = 0;
    std::vector<ProfilePoint> profile;
    std::pair<double, double> argmin_interval{0.0, 0.0};

    Eigen::Index sparsity() const;
    /// Any profile point failed to converge or threw.
    bool has_failures() const;
};

/// Per-tau fits over the grid, swept from t0 to t1 with warm starts.
std::vector<ProfilePoint> profile_fit(const Dataset& data, const TauGrid& grid,
                                      PenaltyLevels penalty, const SolverConfig& config = {});

double default_tie_tol(double min_criterion);

/// Largest tau whose criterion is within tie_tol of the minimum.
ThresholdLassoEstimate select_tau(std::vector<ProfilePoint> profile,
                                  std::optional<double> tie_tol = std::nullopt);

ThresholdLassoEstimate fit_threshold_lasso(const Dataset& data, const TauGrid& grid,
                                           PenaltyLevels penalty, const SolverConfig& config = {});

struct LoocvOptions {
    /// Reuse tau_hat of the full-sample fit inside every fold.
    bool profile_frozen = false;
    int workers = 1;
};

struct LoocvResult {
    double lambda = 0.0;
    std::vector<double> candidates;
    std::vector<double> cv_error;     ///< sum of squared held-out errors; +inf if disqualified
    std::vector<int> failed_folds;
};

LoocvResult loocv_lambda(const Dataset& data, const TauGrid& grid, std::vector<double> candidates,
                         const SolverConfig& config = {}, const LoocvOptions& options = {});

/// Log-spaced candidates from lambda_max at t0 down to ratio * lambda_max.
std::vector<double> default_lambda_candidates(const Dataset& data, const TauGrid& grid,
                                              int count = 20, double ratio = 1e-3);

struct LeastSquaresFit {
    Vector alpha;              ///< length 2M, zero off the support
    double tau = 0.0;
    double rss = 0.0;          ///< n^-1 ||y - X(tau) alpha||^2
    bool singular = false;     ///< pseudo-inverse fallback was used at the reported tau
    std::vector<std::pair<double, double>> profile;  ///< (tau, rss) when tau was profiled
};

/**
 * Least squares restricted to `support` (indices into the 2M columns of X(tau)).
 * With `tau` set the fit is at that threshold; otherwise tau is profiled over
 * `grid` with the same max-of-argmin convention as the Lasso.
 */
LeastSquaresFit least_squares_fit(const Dataset& data, const std::vector<Eigen::Index>& support,
                                  std::optional<double> tau,
                                  const std::optional<TauGrid>& grid = std::nullopt);

/// Regime parameterization [X 1{Q >= tau} | X 1{Q < tau}] with coefficients (beta_0, beta_1).
ThresholdDesign regime_design(const Dataset& data, double tau);
/// (beta_0, beta_1) -> (beta, delta) = (beta_0, beta_1 - beta_0).
Vector regime_to_threshold(const Vector& regime_coef);

/// Resolves a rule into penalty levels for `data`. Loocv rules run the CV search.
PenaltyLevels resolve_lambda(const LambdaRule& rule, const Dataset& data, const TauGrid& grid,
                             const SolverConfig& config = {}, const LoocvOptions& options = {});

/// Residual standard deviation of a pilot fit at the LOOCV lambda; used when sigma is unknown.
double estimate_sigma_pilot(const Dataset& data, const TauGrid& grid,
                            const std::vector<double>& candidates, const SolverConfig& config = {});

}  // namespace thrlasso
