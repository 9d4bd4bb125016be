#pragma once

#include "thrlasso/design.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace thrlasso {

// Gram matrices of the split design, all scaled by 1/n.
Matrix gram(const ThresholdDesign& design);
/// Psi_+(tau): Gram of X 1{Q < tau}.
Matrix gram_plus(const Dataset& data, double tau);
/// Psi_-(tau): Gram of X 1{Q >= tau}.
Matrix gram_minus(const Dataset& data, double tau);

enum class EigMode { Exhaustive, Sampled };

struct SparseEigOptions {
    EigMode mode = EigMode::Exhaustive;
    /// Exhaustive mode refuses when C(p, u) * u^3 exceeds this.
    double budget = 1e9;
    std::size_t samples = 2000;
    std::uint64_t seed = 1;
};

struct SparseEigResult {
    double phi_min = 0.0;
    double phi_max = 0.0;
    EigMode mode = EigMode::Exhaustive;
    std::size_t supports = 0;
    /// Sampled mode only: phi_min is an upper bound and phi_max a lower bound.
    bool bounds_only = false;
};

/**
 * Extremes of x'Gx / x'x over x with 1 <= |supp x| <= u. By interlacing it
 * suffices to scan supports of size exactly u; each one is solved by a
 * symmetric eigendecomposition of the principal submatrix.
 */
SparseEigResult sparse_eig_extremes(const Matrix& gram, int u, const SparseEigOptions& options = {});

struct SparseEigenEntry {
    double tau = 0.0;
    SparseEigResult full;   ///< Psi(tau)
    SparseEigResult plus;   ///< Psi_+(tau)
    SparseEigResult minus;  ///< Psi_-(tau)
};

struct SparseEigenReport {
    int u = 0;
    std::vector<SparseEigenEntry> entries;
};

/// Split-block variants are evaluated with u capped at M.
SparseEigenReport sparse_eigen_report(const Dataset& data, const std::vector<double>& taus, int u,
                                      const SparseEigOptions& options = {});

/// sqrt(phi_min(s+m)) (1 - c0 sqrt(s phi_max(m) / (m phi_min(s+m)))); may be <= 0.
double kappa2_bound(const Matrix& gram, int s, int m, double c0, const SparseEigOptions& options = {});

struct KappaSearchOptions {
    /// Low-discrepancy directions on the J0 unit sphere when |J0| >= 2.
    int directions = 256;
    int qp_iters = 20000;
    double qp_tol = 1e-14;
    /// Pattern-search refinement steps around the best direction.
    int refine_steps = 60;
};

struct KappaSearchResult {
    double kappa = 0.0;          ///< upper bound on the cone-restricted eigenvalue
    std::vector<Eigen::Index> support;
    Vector gamma;                ///< minimizing direction with |gamma_J0|_2 = 1
    std::size_t supports = 0;
    std::size_t directions = 0;
    bool exact_directions = false;  ///< every |J0| = 1, so the sphere is {-1, +1}
};

/**
 * min over |J0| <= s and gamma != 0 in the cone |gamma_J0c|_1 <= c0 |gamma_J0|_1 of
 * sqrt(gamma'G gamma) / |gamma_J0|_2. For each J0 and unit direction u on J0 the
 * inner problem over gamma_J0c is a convex quadratic on an l1 ball, solved by
 * accelerated projected gradient. Every evaluated point is feasible, so the result
 * is an upper bound on the true minimum.
 */
KappaSearchResult brute_force_kappa(const Matrix& gram, int s, double c0, const KappaSearchOptions& options = {});

struct UREReport {
    int s = 0;
    int m = 0;
    double c1 = 0.0;
    double psi = 0.0;
    double c0 = 0.0;                  ///< c1 sqrt(psi / (1 + psi))
    std::vector<double> taus;
    std::vector<double> kappa2;       ///< per tau at c0
    std::vector<bool> condition_holds;  ///< block conditions per tau
    double kappa2_min = 0.0;
    bool sufficient = false;          ///< all block conditions hold and psi > 0
    std::optional<double> brute_force_min;
};

/**
 * Sufficient condition for the uniform restricted eigenvalue assumption:
 * m phi_min,+-(2s+2m) > c1^2 s phi_max,+-(2m) on both blocks for every tau,
 * psi = min_tau (phi_max,-(2m) ^ phi_max,+(2m)) / (phi_max,-(2m) v phi_max,+(2m)).
 */
UREReport ure_report(const Dataset& data, const std::vector<double>& taus, int s, int m, double c1,
                     bool brute_force = false, const SparseEigOptions& eig = {},
                     const KappaSearchOptions& search = {});

/// Population covariance of X.
struct Population {
    enum class Kind { Identity, Toeplitz } kind = Kind::Identity;
    double rho = 0.0;

    static Population identity() { return {}; }
    static Population toeplitz(double rho) { return {Kind::Toeplitz, rho}; }
    Matrix sigma(Eigen::Index M) const;
};

/// V(tau) = Omega(tau) kron Sigma with Omega = [[1, tau], [tau, tau]] (Q uniform on (0, 1)).
Matrix population_v(const Matrix& sigma, double tau);

/// Largest absolute entrywise difference.
double sup_distance(const Matrix& a, const Matrix& b);

struct CovDistance {
    std::vector<double> taus;
    std::vector<double> distance;
    double max = 0.0;
};

CovDistance cov_sup_distance(const Dataset& data, const std::vector<double>& taus, const Population& population);

/**
 * h_n^2(eta) = (2 n eta)^-1 sum over ranks i in [max(1, [n(tau0 - eta)]), min([n(tau0 + eta)], n)]
 * of (X_i'delta0)^2, with rows ranked by Q. Requires eta >= 1/n; EmptyWindow if no rank falls inside.
 */
std::vector<double> hn_profile(const Dataset& data, const Vector& delta0, double tau0, const std::vector<double>& etas);

struct SignalCurve {
    std::vector<double> taus;
    std::vector<double> g;      ///< ||f(alpha0, tau) - f0||_n^2
    double c_hat = 0.0;         ///< min over |tau - tau0| >= min_gap of g / |tau - tau0|
    bool unidentified = false;  ///< delta0 = 0
};

SignalCurve signal_curve(const Dataset& data, const TrueModel& truth, const std::vector<double>& taus,
                         double min_gap = 0.0);

/// (t0 / t1)^2 c^2: the analytic identifiability slope for jump scale c on [t0, t1].
double analytic_signal_slope(double c, double t0 = 0.15, double t1 = 0.85);

/// Dominant eigenvalue of a symmetric positive semidefinite matrix by power iteration.
double power_iteration_max_eig(const Matrix& a, double tol = 1e-8, int max_iters = 100000);

/// max over tau of the largest eigenvalue of X(tau)'X(tau)/n; dense solve when 2M <= 64.
double phi_max_sup(const Dataset& data, const std::vector<double>& taus);

/// Smallest eigenvalue of Sigma_ij = rho^|i-j|, computed numerically.
double toeplitz_min_eigenvalue(double rho, Eigen::Index M);

/// sup_j sup_{|tau - tau0| < eta} n^-1 sum_i X_ij^2 |1{Q_i < tau0} - 1{Q_i < tau}|.
double smoothness_sup(const Dataset& data, double tau0, double eta);

}  // namespace thrlasso
