#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

namespace thrlasso {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// How to treat repeated threshold-variable values at load time.
enum class TiePolicy {
    Reject,  ///< DuplicateQ error (default).
    Jitter,  ///< Break ties by a rank-based epsilon and log a warning.
};

/**
 * Response, covariates and threshold variable of one sample.
 *
 * Immutable once built. Construction validates that the three parts share n,
 * that every entry is finite, that no covariate column is identically zero,
 * and that the threshold values are distinct (subject to TiePolicy).
 */
class Dataset {
public:
    static Dataset create(Vector y, Matrix X, Vector q,
                          std::vector<std::string> names = {},
                          TiePolicy ties = TiePolicy::Reject);

    const Vector& y() const noexcept { return y_; }
    const Matrix& X() const noexcept { return X_; }
    const Vector& q() const noexcept { return q_; }
    /// Covariate names; defaults to x1..xM.
    const std::vector<std::string>& names() const noexcept { return names_; }

    Eigen::Index n() const noexcept { return y_.size(); }
    Eigen::Index M() const noexcept { return X_.cols(); }
    double q_min() const noexcept { return q_.minCoeff(); }
    double q_max() const noexcept { return q_.maxCoeff(); }

    /// Number of ties broken by jitter during construction (0 under Reject).
    int jittered_ties() const noexcept { return jittered_ties_; }

    /// Copy with row `i` removed (leave-one-out folds).
    Dataset without_row(Eigen::Index i) const;

private:
    Dataset() = default;

    Vector y_;
    Matrix X_;
    Vector q_;
    std::vector<std::string> names_;
    int jittered_ties_ = 0;
};

/**
 * The split design X(tau) = [X | X * 1{Q < tau}] together with its empirical
 * column norms ||.||_n, which are the diagonal of the penalty scaling D(tau).
 */
struct ThresholdDesign {
    double tau = 0.0;
    Eigen::Index M = 0;      ///< covariates per block; columns() has 2M columns
    Matrix columns;          ///< n x 2M
    Vector col_norms;        ///< length 2M, sqrt(n^-1 sum_i columns(i,j)^2)

    Eigen::Index n() const noexcept { return columns.rows(); }
    Eigen::Index p() const noexcept { return columns.cols(); }

    /// Arbitrary design matrix with the same norm bookkeeping (solver tests, diagnostics).
    static ThresholdDesign from_matrix(Matrix columns, double tau = 0.0);
};

ThresholdDesign build_design(const Dataset& data, double tau);

/// Moves `design` to `new_tau` touching only rows whose indicator flips.
/// Equivalent to build_design(data, new_tau).
void advance_design(const Dataset& data, ThresholdDesign& design, double new_tau);

/// Empirical norm ||v||_n.
double empirical_norm(const Eigen::Ref<const Vector>& v);

struct TauGrid {
    double t0 = 0.0;
    double t1 = 0.0;
    std::vector<double> points;

    static constexpr int kDefaultPoints = 71;

    static TauGrid equispaced(double t0, double t1, int points = kDefaultPoints);
    /// Midpoints between consecutive sorted Q values that fall inside [t0, t1].
    static TauGrid adaptive(const Dataset& data, double t0, double t1);
    /// Equi-spaced grid between empirical Q-quantiles (linear interpolation).
    static TauGrid quantile(const Dataset& data, double lo = 0.10, double hi = 0.90,
                            int points = kDefaultPoints);
    static TauGrid single(double tau);

    /// Throws InvalidArgument unless min Q < t0 <= t1 < max Q.
    void validate_for(const Dataset& data) const;
};

/// Empirical quantile of `v` at probability `p` (linear interpolation of order statistics).
double empirical_quantile(const Vector& v, double p);

struct TrueModel {
    Vector beta0;
    Vector delta0;
    double tau0 = 0.5;
    double sigma = 0.5;

    Vector alpha0() const;
    /// x'beta0 + x'delta0 1{q < tau0} for every row of X.
    Vector regression(const Matrix& X, const Vector& q) const;
};

struct RnResult {
    double value = 0.0;
    bool degenerate = false;  ///< value == 0: the lambda rule becomes useless
};

/// min_j ||X^(j)(t0)||_n^2 / ||X^(j)||_n^2. Does not enforce min Q < t0.
RnResult compute_rn(const Dataset& data, double t0);

/// sqrt(k^-1 sum (fit - truth)^2).
double prediction_risk_norm(const Eigen::Ref<const Vector>& fit_values,
                            const Eigen::Ref<const Vector>& true_values);

/// x'beta + x'delta 1{q < tau} with alpha = (beta, delta).
Vector threshold_regression(const Matrix& X, const Vector& q, const Vector& alpha, double tau);

}  // namespace thrlasso
