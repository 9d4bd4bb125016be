#include "thrlasso/lasso.hpp"

#include "thrlasso/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace thrlasso {

void SolverConfig::validate() const {
    if (max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
    if (!(obj_tol > 0.0) || !(coef_tol > 0.0) || !(kkt_tol > 0.0))
        throw Error(ErrorCode::InvalidArgument, "solver tolerances must be positive");
    if (box_bound && !(*box_bound > 0.0))
        throw Error(ErrorCode::InvalidArgument, "box bound must be positive");
}

namespace {

constexpr int kPolishEvery = 32;
constexpr int kPolishRounds = 64;

void check_dims(const ThresholdDesign& design, const Vector& y) {
    if (design.n() != y.size())
        throw Error(ErrorCode::LengthMismatch, "design rows and response length differ");
}

double penalty(const ThresholdDesign& design, const Vector& alpha) {
    return design.col_norms.cwiseProduct(alpha.cwiseAbs()).sum();
}

// Coordinate descent state over a fixed design. The residual r = y - X alpha is
// maintained incrementally.
class CoordinateDescent {
public:
    CoordinateDescent(const ThresholdDesign& design, const Vector& y, double lambda,
                      const SolverConfig& config, Vector alpha)
        : design_(design), y_(y), lambda_(lambda), config_(config), alpha_(std::move(alpha)),
          inv_n_(1.0 / static_cast<double>(design.n())) {
        const Eigen::Index p = design.p();
        for (Eigen::Index j = 0; j < p; ++j) {
            if (design.col_norms[j] == 0.0) alpha_[j] = 0.0;
        }
        residual_ = y - design.columns * alpha_;
    }

    // One pass over `coords`; returns the largest scaled coefficient change.
    //
    // For coordinate j with w = ||col_j||_n and partial residual r_j = r + col_j alpha_j,
    // the one-dimensional problem n^-1 ||r_j - col_j a||^2 + lambda w |a| has
    // stationarity (2/n) col_j'(r_j - col_j a) = lambda w sign(a). Because
    // n^-1 col_j'col_j = w^2 this is solved by
    //     a = soft(n^-1 col_j'r_j, lambda w / 2) / w^2,
    // i.e. soft(col_j'r_j, lambda w n / 2) / (col_j'col_j).
    double sweep(const std::vector<Eigen::Index>& coords) {
        double max_change = 0.0;
        for (const Eigen::Index j : coords) {
            const double w = design_.col_norms[j];
            if (w == 0.0) continue;
            const auto col = design_.columns.col(j);
            const double old = alpha_[j];
            const double w2 = w * w;
            const double z = col.dot(residual_) * inv_n_ + w2 * old;
            double updated = soft_threshold(z, 0.5 * lambda_ * w) / w2;
            if (config_.box_bound) updated = std::clamp(updated, -*config_.box_bound, *config_.box_bound);
            if (!std::isfinite(updated))
                throw Error(ErrorCode::NonFinite, "coordinate update produced a non-finite value");
            const double delta = updated - old;
            if (delta != 0.0) {
                residual_.noalias() -= delta * col;
                alpha_[j] = updated;
                max_change = std::max(max_change, w * std::abs(delta));
            }
        }
        return max_change;
    }

    double objective() const {
        return residual_.squaredNorm() * inv_n_ + lambda_ * penalty(design_, alpha_);
    }

    std::vector<Eigen::Index> active() const {
        std::vector<Eigen::Index> out;
        for (Eigen::Index j = 0; j < alpha_.size(); ++j) {
            if (alpha_[j] != 0.0) out.push_back(j);
        }
        return out;
    }

    const Vector& alpha() const noexcept { return alpha_; }

    // Sign-fixed exact steps on the active set A. Each round solves
    // (2/n) X_A'X_A a = (2/n) X_A'y - lambda w_A s_A, then moves from the current point
    // toward that solution, stopping at whichever zero crossing or the endpoint gives the
    // lowest objective. A rank-deficient X_A takes a null-space step instead. No move
    // raises the objective, and each round either zeroes a coordinate or lands on the
    // sign-consistent solution. Cuts the slow tail of coordinate descent on
    // ill-conditioned active sets.
    bool polish() {
        bool moved = false;
        double current = objective();
        std::vector<Eigen::Index> support;
        for (Eigen::Index j = 0; j < alpha_.size(); ++j) {
            if (alpha_[j] != 0.0) support.push_back(j);
        }
        const int rounds = kPolishRounds + static_cast<int>(support.size());
        for (int round = 0; round < rounds && !support.empty(); ++round) {
            const auto sol = solve_support(support);
            if (!sol) {
                if (!null_step(support, current)) break;
                moved = true;
                support.erase(std::remove_if(support.begin(), support.end(),
                                             [&](Eigen::Index j) { return alpha_[j] == 0.0; }),
                              support.end());
                continue;
            }
            Vector target = Vector::Zero(alpha_.size());
            for (std::size_t t = 0; t < support.size(); ++t) target[support[t]] = (*sol)[static_cast<Eigen::Index>(t)];
            const Vector step = target - alpha_;

            // Candidate step lengths: each sign change along the segment, plus the endpoint.
            std::vector<double> ts{1.0};
            for (Eigen::Index j = 0; j < alpha_.size(); ++j) {
                if (alpha_[j] != 0.0 && target[j] * alpha_[j] < 0.0) ts.push_back(alpha_[j] / (alpha_[j] - target[j]));
            }
            double best_obj = current;
            std::optional<Vector> best;
            for (const double t : ts) {
                Vector x = alpha_ + t * step;
                for (Eigen::Index j = 0; j < x.size(); ++j) {
                    if (t < 1.0 && alpha_[j] != 0.0 && target[j] * alpha_[j] < 0.0 &&
                        alpha_[j] / (alpha_[j] - target[j]) == t)
                        x[j] = 0.0;
                }
                if (config_.box_bound && x.cwiseAbs().maxCoeff() > *config_.box_bound) continue;
                const double obj = (y_ - design_.columns * x).squaredNorm() * inv_n_ + lambda_ * penalty(design_, x);
                if (obj < best_obj) {
                    best_obj = obj;
                    best = std::move(x);
                }
            }
            if (!best) break;
            alpha_ = std::move(*best);
            residual_ = y_ - design_.columns * alpha_;
            current = best_obj;
            moved = true;
            std::vector<Eigen::Index> next;
            bool consistent = true;
            for (std::size_t t = 0; t < support.size(); ++t) {
                const Eigen::Index j = support[t];
                if (alpha_[j] != 0.0) next.push_back(j);
                consistent = consistent && alpha_[j] == target[j];
            }
            if (consistent && next.size() == support.size()) break;
            support = std::move(next);
        }
        return moved;
    }

private:
    // On a rank-deficient support, moves along a null vector of X_A (fit unchanged) in
    // the direction that does not raise the penalty until a coordinate reaches zero.
    bool null_step(const std::vector<Eigen::Index>& support, double& current) {
        const auto k = static_cast<Eigen::Index>(support.size());
        Matrix xa(design_.n(), k);
        for (Eigen::Index t = 0; t < k; ++t) xa.col(t) = design_.columns.col(support[static_cast<std::size_t>(t)]);
        Eigen::JacobiSVD<Matrix> svd(xa, Eigen::ComputeFullV);
        const Vector& sv = svd.singularValues();
        const double smin = sv.size() < k ? 0.0 : sv[sv.size() - 1];
        if (!(smin <= 1e-8 * sv[0])) return false;
        Vector v = svd.matrixV().col(k - 1);
        double slope = 0.0;
        for (Eigen::Index t = 0; t < k; ++t) {
            const Eigen::Index j = support[static_cast<std::size_t>(t)];
            slope += design_.col_norms[j] * (alpha_[j] > 0.0 ? 1.0 : -1.0) * v[t];
        }
        if (slope > 0.0) v = -v;
        double step = std::numeric_limits<double>::infinity();
        Eigen::Index hit = -1;
        for (Eigen::Index t = 0; t < k; ++t) {
            const double a = alpha_[support[static_cast<std::size_t>(t)]];
            if (a * v[t] < 0.0 && -a / v[t] < step) {
                step = -a / v[t];
                hit = t;
            }
        }
        if (hit < 0) return false;
        Vector x = alpha_;
        for (Eigen::Index t = 0; t < k; ++t) x[support[static_cast<std::size_t>(t)]] += step * v[t];
        x[support[static_cast<std::size_t>(hit)]] = 0.0;
        if (config_.box_bound && x.cwiseAbs().maxCoeff() > *config_.box_bound) return false;
        Vector residual = y_ - design_.columns * x;
        const double obj = residual.squaredNorm() * inv_n_ + lambda_ * penalty(design_, x);
        if (!(obj <= current)) return false;
        alpha_ = std::move(x);
        residual_ = std::move(residual);
        current = obj;
        return true;
    }

    std::optional<Vector> solve_support(const std::vector<Eigen::Index>& support) const {
        const auto k = static_cast<Eigen::Index>(support.size());
        Matrix xa(design_.n(), k);
        Vector rhs(k);
        for (Eigen::Index t = 0; t < k; ++t) {
            const Eigen::Index j = support[static_cast<std::size_t>(t)];
            xa.col(t) = design_.columns.col(j);
            const double sign = alpha_[j] > 0.0 ? 1.0 : -1.0;
            rhs[t] = xa.col(t).dot(y_) - 0.5 * lambda_ * design_.col_norms[j] * sign / inv_n_;
        }
        Eigen::LDLT<Matrix> ldlt(xa.transpose() * xa);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
        const double dmin = ldlt.vectorD().minCoeff(), dmax = ldlt.vectorD().maxCoeff();
        if (!(dmin > 1e-10 * dmax)) return std::nullopt;
        Vector sol = ldlt.solve(rhs);
        if (!sol.allFinite()) return std::nullopt;
        return sol;
    }

    const ThresholdDesign& design_;
    const Vector& y_;
    double lambda_;
    const SolverConfig& config_;
    Vector alpha_;
    Vector residual_;
    double inv_n_;
};

}  // namespace

double residual_mean_square(const ThresholdDesign& design, const Vector& y, const Vector& alpha) {
    check_dims(design, y);
    return (y - design.columns * alpha).squaredNorm() / static_cast<double>(design.n());
}

double penalized_objective(const ThresholdDesign& design, const Vector& y, const Vector& alpha,
                           double lambda) {
    return residual_mean_square(design, y, alpha) + lambda * penalty(design, alpha);
}

double kkt_residual(const ThresholdDesign& design, const Vector& y, const Vector& alpha,
                    double lambda) {
    check_dims(design, y);
    if (alpha.size() != design.p())
        throw Error(ErrorCode::LengthMismatch, "alpha length differs from design columns");
    const Vector grad = (2.0 / static_cast<double>(design.n())) *
                        (design.columns.transpose() * (y - design.columns * alpha));
    double worst = 0.0;
    for (Eigen::Index j = 0; j < design.p(); ++j) {
        const double w = design.col_norms[j];
        if (w == 0.0) continue;
        double violation;
        if (alpha[j] != 0.0)
            violation = std::abs(grad[j] - lambda * w * (alpha[j] > 0.0 ? 1.0 : -1.0));
        else
            violation = std::max(0.0, std::abs(grad[j]) - lambda * w);
        worst = std::max(worst, violation);
    }
    return worst;
}

double lambda_max(const ThresholdDesign& design, const Vector& y) {
    check_dims(design, y);
    const Vector corr = (2.0 / static_cast<double>(design.n())) * (design.columns.transpose() * y);
    double best = 0.0;
    bool any = false;
    for (Eigen::Index j = 0; j < design.p(); ++j) {
        const double w = design.col_norms[j];
        if (w == 0.0) continue;
        any = true;
        best = std::max(best, std::abs(corr[j]) / w);
    }
    if (!any) throw Error(ErrorCode::AllZeroDesign, "every design column has zero norm");
    return best;
}

LassoFit fit_weighted_lasso(const ThresholdDesign& design, const Vector& y, double lambda,
                            const SolverConfig& config, const std::optional<Vector>& warm_start) {
    check_dims(design, y);
    config.validate();
    if (!(lambda >= 0.0) || !std::isfinite(lambda))
        throw Error(ErrorCode::InvalidArgument, "lambda must be finite and >= 0");
    const Eigen::Index p = design.p();
    Vector start = Vector::Zero(p);
    if (warm_start) {
        if (warm_start->size() != p)
            throw Error(ErrorCode::LengthMismatch, "warm start length differs from design columns");
        start = *warm_start;
    }

    CoordinateDescent cd(design, y, lambda, config, std::move(start));
    std::vector<Eigen::Index> all(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;

    LassoFit fit;
    fit.tau = design.tau;
    fit.lambda = lambda;

    int sweeps = 0;
    double prev_obj = cd.objective();
    bool certified = false;
    while (sweeps < config.max_iters) {
        // Full sweep to refresh the active set.
        double change = cd.sweep(all);
        ++sweeps;
        auto active = cd.active();
        double obj = cd.objective();

        // Iterate on the active set until it settles, polishing periodically.
        bool polished = false;
        for (int inner = 1; sweeps < config.max_iters && !active.empty(); ++inner) {
            const bool small_step = change < config.coef_tol;
            const bool flat = prev_obj - obj <= config.obj_tol * std::max(1.0, std::abs(obj));
            if (small_step || flat) break;
            if (inner % kPolishEvery == 0 && cd.polish()) {
                polished = true;
                break;
            }
            prev_obj = obj;
            change = cd.sweep(active);
            ++sweeps;
            obj = cd.objective();
        }
        if (sweeps >= config.max_iters) break;
        if (!polished) cd.polish();
        prev_obj = cd.objective();

        // Verification sweep over every coordinate. On degenerate problems a coordinate
        // can enter or leave with a negligible step, so certification rests on the step
        // size and the KKT check rather than on an unchanged active set.
        const double verify_change = cd.sweep(all);
        ++sweeps;
        obj = cd.objective();
        if (verify_change < config.coef_tol && kkt_residual(design, y, cd.alpha(), lambda) <= config.kkt_tol) {
            certified = true;
            break;
        }
        prev_obj = obj;
    }

    fit.alpha = cd.alpha();
    fit.active_set = cd.active();
    fit.sn = residual_mean_square(design, y, fit.alpha);
    fit.objective = fit.sn + lambda * penalty(design, fit.alpha);
    fit.kkt_residual = kkt_residual(design, y, fit.alpha, lambda);
    fit.iters = sweeps;
    fit.converged = certified || fit.kkt_residual <= config.kkt_tol;
    return fit;
}

}  // namespace thrlasso
