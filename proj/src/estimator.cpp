#include "thrlasso/estimator.hpp"

#include "thrlasso/error.hpp"
#include "thrlasso/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace thrlasso {

PenaltyLevels penalty_levels(double lambda, Eigen::Index n, PenaltyConvention convention) {
    if (convention == PenaltyConvention::Joint) return PenaltyLevels::joint(lambda);
    // Unit-l2 columns z_j = x_j / (sqrt(n) ||x_j||_n) in 1/2||y - Zb||^2 + lambda|b|_1 give
    // (2/n) x_j'r = (2 lambda / sqrt(n)) ||x_j||_n at the optimum.
    return {2.0 * lambda / std::sqrt(static_cast<double>(n)), lambda};
}

std::string to_string(LambdaKind kind) {
    switch (kind) {
        case LambdaKind::Theoretical: return "theoretical";
        case LambdaKind::Loocv: return "loocv";
        case LambdaKind::Fixed: return "fixed";
    }
    return "unknown";
}

std::string to_string(PenaltyConvention convention) {
    return convention == PenaltyConvention::Joint ? "joint" : "lars";
}

LambdaRule LambdaRule::theoretical(double A, double sigma, std::optional<double> mu,
                                   PenaltyConvention convention) {
    LambdaRule r;
    r.kind = LambdaKind::Theoretical;
    r.A = A;
    r.sigma = sigma;
    r.mu = mu;
    r.convention = convention;
    r.validate();
    return r;
}

LambdaRule LambdaRule::fixed(double lambda) {
    LambdaRule r;
    r.kind = LambdaKind::Fixed;
    r.fixed_value = lambda;
    r.validate();
    return r;
}

LambdaRule LambdaRule::loocv(std::vector<double> candidates) {
    LambdaRule r;
    r.kind = LambdaKind::Loocv;
    r.candidates = std::move(candidates);
    r.validate();
    return r;
}

void LambdaRule::validate() const {
    switch (kind) {
        case LambdaKind::Theoretical:
            if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma must be positive");
            if (!(A > 0.0)) throw Error(ErrorCode::InvalidArgument, "A must be positive");
            if (mu) {
                if (*mu > 0.0 && !(A > 2.0 * std::sqrt(2.0) / *mu))
                    throw Error(ErrorCode::InvalidArgument,
                                "A must exceed 2 sqrt(2) / mu for the theoretical lambda rule");
                if (!(*mu > 0.0 && *mu < 1.0))
                    throw Error(ErrorCode::InvalidArgument, "mu must lie in (0, 1)");
            }
            break;
        case LambdaKind::Fixed:
            if (!fixed_value || !(*fixed_value >= 0.0) || !std::isfinite(*fixed_value))
                throw Error(ErrorCode::InvalidArgument, "fixed lambda must be finite and >= 0");
            break;
        case LambdaKind::Loocv:
            for (const double c : candidates) {
                if (!(c >= 0.0) || !std::isfinite(c))
                    throw Error(ErrorCode::InvalidArgument, "lambda candidates must be finite and >= 0");
            }
            break;
    }
}

double lambda_theoretical(Eigen::Index n, Eigen::Index M, double sigma, double A, double rn) {
    if (!(rn > 0.0)) throw Error(ErrorCode::DegenerateRn, "r_n must be positive");
    if (n < 1 || M < 1) throw Error(ErrorCode::InvalidArgument, "n and M must be >= 1");
    if (!(sigma > 0.0) || !(A > 0.0))
        throw Error(ErrorCode::InvalidArgument, "sigma and A must be positive");
    return A * sigma *
           std::sqrt(std::log(3.0 * static_cast<double>(M)) /
                     (static_cast<double>(n) * rn));
}

Eigen::Index ThresholdLassoEstimate::sparsity() const {
    return static_cast<Eigen::Index>((alpha_hat.array() != 0.0).count());
}

bool ThresholdLassoEstimate::has_failures() const {
    return std::any_of(profile.begin(), profile.end(), [](const ProfilePoint& p) { return !p.ok(); });
}

std::vector<ProfilePoint> profile_fit(const Dataset& data, const TauGrid& grid,
                                      PenaltyLevels penalty, const SolverConfig& config) {
    if (grid.points.empty()) throw Error(ErrorCode::InvalidArgument, "tau grid is empty");
    std::vector<ProfilePoint> profile;
    profile.reserve(grid.points.size());

    ThresholdDesign design = build_design(data, grid.points.front());
    std::optional<Vector> warm;
    for (const double tau : grid.points) {
        advance_design(data, design, tau);
        ProfilePoint point;
        point.tau = tau;
        try {
            point.fit = fit_weighted_lasso(design, data.y(), penalty.fit, config, warm);
            point.criterion =
                point.fit.sn +
                penalty.select * design.col_norms.cwiseProduct(point.fit.alpha.cwiseAbs()).sum();
            warm = point.fit.alpha;
        } catch (const Error& e) {
            point.error = e.what();
            point.fit.tau = tau;
            point.fit.lambda = penalty.fit;
            point.fit.alpha = Vector::Zero(design.p());
            point.criterion = std::numeric_limits<double>::infinity();
            warm.reset();
        }
        profile.push_back(std::move(point));
    }
    return profile;
}

double default_tie_tol(double min_criterion) { return 1e-9 * (1.0 + std::abs(min_criterion)); }

ThresholdLassoEstimate select_tau(std::vector<ProfilePoint> profile, std::optional<double> tie_tol) {
    if (profile.empty()) throw Error(ErrorCode::InvalidArgument, "profile is empty");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : profile) best = std::min(best, p.criterion);
    if (!std::isfinite(best))
        throw Error(ErrorCode::NonFinite, "every profile point failed");
    const double tol = tie_tol.value_or(default_tie_tol(best));

    ThresholdLassoEstimate est;
    bool found = false;
    double lo = 0.0, hi = 0.0;
    for (std::size_t k = 0; k < profile.size(); ++k) {
        if (profile[k].criterion > best + tol) continue;
        const double t = profile[k].tau;
        if (!found || t < lo) lo = t;
        if (!found || t > hi) {
            hi = t;
            est.tau_index = k;
        }
        found = true;
    }
    est.argmin_interval = {lo, hi};
    const auto& chosen = profile[est.tau_index];
    est.tau_hat = chosen.tau;
    est.alpha_hat = chosen.fit.alpha;
    est.lambda_fit = chosen.fit.lambda;
    est.profile = std::move(profile);
    return est;
}

ThresholdLassoEstimate fit_threshold_lasso(const Dataset& data, const TauGrid& grid,
                                           PenaltyLevels penalty, const SolverConfig& config) {
    auto est = select_tau(profile_fit(data, grid, penalty, config));
    est.lambda = penalty.select;
    est.lambda_fit = penalty.fit;
    return est;
}

namespace {

double predict_row(const Dataset& data, Eigen::Index i, const Vector& alpha, double tau) {
    const Eigen::Index M = data.M();
    double v = data.X().row(i).dot(alpha.head(M));
    if (data.q()[i] < tau) v += data.X().row(i).dot(alpha.tail(M));
    return v;
}

}  // namespace

LoocvResult loocv_lambda(const Dataset& data, const TauGrid& grid, std::vector<double> candidates,
                         const SolverConfig& config, const LoocvOptions& options) {
    if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "no lambda candidates");
    LoocvResult result;
    result.candidates = candidates;
    result.cv_error.assign(candidates.size(), 0.0);
    result.failed_folds.assign(candidates.size(), 0);
    if (candidates.size() == 1) {
        result.lambda = candidates.front();
        return result;
    }
    if (data.n() < 3) throw Error(ErrorCode::InvalidArgument, "leave-one-out needs n >= 3");

    const auto n = static_cast<std::size_t>(data.n());
    std::vector<double> frozen_tau(candidates.size(), 0.0);
    if (options.profile_frozen) {
        parallel_for(candidates.size(), options.workers, [&](std::size_t c) {
            frozen_tau[c] = fit_threshold_lasso(data, grid, PenaltyLevels::joint(candidates[c]), config).tau_hat;
        });
    }

    std::vector<double> sq_error(candidates.size() * n, 0.0);
    std::vector<char> failed(candidates.size() * n, 0);
    parallel_for(candidates.size() * n, options.workers, [&](std::size_t task) {
        const std::size_t c = task / n;
        const auto i = static_cast<Eigen::Index>(task % n);
        try {
            const Dataset fold = data.without_row(i);
            const TauGrid fold_grid = options.profile_frozen ? TauGrid::single(frozen_tau[c]) : grid;
            const auto est = fit_threshold_lasso(fold, fold_grid, PenaltyLevels::joint(candidates[c]), config);
            if (est.has_failures()) {
                failed[task] = 1;
                return;
            }
            const double resid = data.y()[i] - predict_row(data, i, est.alpha_hat, est.tau_hat);
            sq_error[task] = resid * resid;
        } catch (const Error&) {
            failed[task] = 1;
        }
    });

    std::size_t best = candidates.size();
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        double total = 0.0;
        int fails = 0;
        for (std::size_t i = 0; i < n; ++i) {
            total += sq_error[c * n + i];
            fails += failed[c * n + i];
        }
        result.failed_folds[c] = fails;
        result.cv_error[c] = fails > 0 ? std::numeric_limits<double>::infinity() : total;
        if (fails > 0) continue;
        if (best == candidates.size() || total < result.cv_error[best] ||
            (total == result.cv_error[best] && candidates[c] < candidates[best]))
            best = c;
    }
    if (best == candidates.size())
        throw Error(ErrorCode::NonFinite, "every lambda candidate had a failed fold");
    result.lambda = candidates[best];
    return result;
}

std::vector<double> default_lambda_candidates(const Dataset& data, const TauGrid& grid, int count,
                                              double ratio) {
    if (count < 1 || !(ratio > 0.0 && ratio < 1.0))
        throw Error(ErrorCode::InvalidArgument, "need count >= 1 and 0 < ratio < 1");
    double top = 0.0;
    for (const double tau : grid.points) top = std::max(top, lambda_max(build_design(data, tau), data.y()));
    std::vector<double> out(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double frac = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
        out[static_cast<std::size_t>(k)] = top * std::pow(ratio, frac);
    }
    return out;
}

namespace {

struct RestrictedSolve {
    Vector coef;
    double rss = 0.0;
    bool singular = false;
};

RestrictedSolve solve_restricted(const ThresholdDesign& design, const Vector& y,
                                 const std::vector<Eigen::Index>& support) {
    const auto k = static_cast<Eigen::Index>(support.size());
    Matrix Xs(design.n(), k);
    for (Eigen::Index c = 0; c < k; ++c) Xs.col(c) = design.columns.col(support[static_cast<std::size_t>(c)]);
    RestrictedSolve out;
    Eigen::ColPivHouseholderQR<Matrix> qr(Xs);
    if (qr.rank() == k) {
        out.coef = qr.solve(y);
    } else {
        out.singular = true;
        out.coef = Eigen::CompleteOrthogonalDecomposition<Matrix>(Xs).solve(y);
    }
    out.rss = (y - Xs * out.coef).squaredNorm() / static_cast<double>(design.n());
    return out;
}

}  // namespace

LeastSquaresFit least_squares_fit(const Dataset& data, const std::vector<Eigen::Index>& support,
                                  std::optional<double> tau, const std::optional<TauGrid>& grid) {
    const Eigen::Index p = 2 * data.M();
    if (support.empty()) throw Error(ErrorCode::InvalidArgument, "least squares support is empty");
    if (static_cast<Eigen::Index>(support.size()) > data.n())
        throw Error(ErrorCode::InvalidArgument, "support larger than the sample size");
    for (const auto j : support) {
        if (j < 0 || j >= p) throw Error(ErrorCode::InvalidArgument, "support index out of range");
    }
    if (!tau && (!grid || grid->points.empty()))
        throw Error(ErrorCode::InvalidArgument, "least squares needs either tau or a grid");

    auto embed = [&](const RestrictedSolve& s) {
        Vector alpha = Vector::Zero(p);
        for (std::size_t c = 0; c < support.size(); ++c) alpha[support[c]] = s.coef[static_cast<Eigen::Index>(c)];
        return alpha;
    };

    LeastSquaresFit out;
    if (tau) {
        const auto s = solve_restricted(build_design(data, *tau), data.y(), support);
        out.alpha = embed(s);
        out.tau = *tau;
        out.rss = s.rss;
        out.singular = s.singular;
        return out;
    }

    std::vector<RestrictedSolve> fits;
    fits.reserve(grid->points.size());
    ThresholdDesign design = build_design(data, grid->points.front());
    double best = std::numeric_limits<double>::infinity();
    for (const double t : grid->points) {
        advance_design(data, design, t);
        fits.push_back(solve_restricted(design, data.y(), support));
        out.profile.emplace_back(t, fits.back().rss);
        best = std::min(best, fits.back().rss);
    }
    const double tol = default_tie_tol(best);
    std::size_t chosen = 0;
    for (std::size_t k = 0; k < fits.size(); ++k) {
        if (fits[k].rss <= best + tol && grid->points[k] >= grid->points[chosen]) chosen = k;
    }
    out.alpha = embed(fits[chosen]);
    out.tau = grid->points[chosen];
    out.rss = fits[chosen].rss;
    out.singular = fits[chosen].singular;
    return out;
}

ThresholdDesign regime_design(const Dataset& data, double tau) {
    const Eigen::Index M = data.M();
    Matrix cols = Matrix::Zero(data.n(), 2 * M);
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (data.q()[i] < tau)
            cols.row(i).tail(M) = data.X().row(i);
        else
            cols.row(i).head(M) = data.X().row(i);
    }
    auto d = ThresholdDesign::from_matrix(std::move(cols), tau);
    d.M = M;
    return d;
}

Vector regime_to_threshold(const Vector& regime_coef) {
    if (regime_coef.size() % 2 != 0)
        throw Error(ErrorCode::LengthMismatch, "regime coefficients must have even length");
    const Eigen::Index M = regime_coef.size() / 2;
    Vector out(2 * M);
    out.head(M) = regime_coef.head(M);
    out.tail(M) = regime_coef.tail(M) - regime_coef.head(M);
    return out;
}

PenaltyLevels resolve_lambda(const LambdaRule& rule, const Dataset& data, const TauGrid& grid,
                             const SolverConfig& config, const LoocvOptions& options) {
    rule.validate();
    switch (rule.kind) {
        case LambdaKind::Theoretical: {
            const auto rn = compute_rn(data, grid.t0);
            if (rn.degenerate)
                throw Error(ErrorCode::DegenerateRn, "r_n is zero at t0; the theoretical lambda is undefined");
            const double lambda = lambda_theoretical(data.n(), data.M(), rule.sigma, rule.A, rn.value);
            return penalty_levels(lambda, data.n(), rule.convention);
        }
        case LambdaKind::Fixed:
            return PenaltyLevels::joint(*rule.fixed_value);
        case LambdaKind::Loocv: {
            auto candidates = rule.candidates.empty() ? default_lambda_candidates(data, grid) : rule.candidates;
            return PenaltyLevels::joint(loocv_lambda(data, grid, std::move(candidates), config, options).lambda);
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown lambda rule");
}

double estimate_sigma_pilot(const Dataset& data, const TauGrid& grid,
                            const std::vector<double>& candidates, const SolverConfig& config) {
    const double lambda = loocv_lambda(data, grid, candidates, config).lambda;
    const auto est = fit_threshold_lasso(data, grid, PenaltyLevels::joint(lambda), config);
    const double rss = est.profile[est.tau_index].fit.sn * static_cast<double>(data.n());
    const Eigen::Index dof = data.n() - est.sparsity();
    const double denom = static_cast<double>(dof > 0 ? dof : data.n());
    return std::sqrt(rss / denom);
}

}  // namespace thrlasso
