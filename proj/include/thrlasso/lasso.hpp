#pragma once

#include "thrlasso/design.hpp"

#include <optional>
#include <vector>

namespace thrlasso {

struct SolverConfig {
    int max_iters = 10000;     ///< coordinate sweeps
    double obj_tol = 1e-9;     ///< relative objective decrease between sweeps
    double coef_tol = 1e-10;   ///< max_j ||col_j||_n |change in alpha_j|
    double kkt_tol = 1e-6;     ///< certification threshold
    /// Optional box |alpha_j| <= bound; off unless set.
    std::optional<double> box_bound;

    void validate() const;
};

struct LassoFit {
    double tau = 0.0;
    double lambda = 0.0;
    Vector alpha;                        ///< beta then delta
    std::vector<Eigen::Index> active_set;
    double objective = 0.0;              ///< sn + lambda * sum_j col_norms[j] |alpha_j|
    double sn = 0.0;                     ///< n^-1 ||y - X(tau) alpha||^2
    double kkt_residual = 0.0;
    int iters = 0;
    bool converged = false;

    Eigen::Index sparsity() const noexcept { return static_cast<Eigen::Index>(active_set.size()); }
};

/// S_n(alpha) + lambda |D alpha|_1 evaluated from scratch.
double penalized_objective(const ThresholdDesign& design, const Vector& y, const Vector& alpha,
                           double lambda);

/// n^-1 ||y - X alpha||^2.
double residual_mean_square(const ThresholdDesign& design, const Vector& y, const Vector& alpha);

/**
 * Cyclic coordinate descent for
 *
 *     min_alpha  n^-1 ||y - X alpha||^2 + lambda sum_j w_j |alpha_j|,   w_j = ||col_j||_n.
 *
 * Returns the best iterate with converged = false when the KKT certificate is not
 * reached within max_iters sweeps. Throws Error(NonFinite) if an update blows up.
 */
LassoFit fit_weighted_lasso(const ThresholdDesign& design, const Vector& y, double lambda,
                            const SolverConfig& config = {},
                            const std::optional<Vector>& warm_start = std::nullopt);

/**
 * Largest violation of the optimality system, with g_j = (2/n) col_j'(y - X alpha):
 * |g_j - lambda w_j sign(alpha_j)| on the active set and (|g_j| - lambda w_j)_+ off it.
 * Zero-norm columns are excluded.
 */
double kkt_residual(const ThresholdDesign& design, const Vector& y, const Vector& alpha,
                    double lambda);

/// Smallest lambda for which alpha = 0 is optimal.
double lambda_max(const ThresholdDesign& design, const Vector& y);

/// Soft-thresholding operator sign(z) (|z| - t)_+.
inline double soft_threshold(double z, double t) {
    if (z > t) return z - t;
    if (z < -t) return z + t;
    return 0.0;
}

}  // namespace thrlasso
