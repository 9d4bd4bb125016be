#include "thrlasso/diagnostics.hpp"

#include "thrlasso/error.hpp"
#include "thrlasso/lasso.hpp"
#include "thrlasso/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace thrlasso {

Matrix gram(const ThresholdDesign& design) {
    return design.columns.transpose() * design.columns / static_cast<double>(design.n());
}

namespace {

Matrix masked_gram(const Dataset& data, double tau, bool below) {
    Matrix Xm = data.X();
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if ((data.q()[i] < tau) != below) Xm.row(i).setZero();
    }
    return Xm.transpose() * Xm / static_cast<double>(data.n());
}

double log_binomial(double p, double u) {
    return std::lgamma(p + 1.0) - std::lgamma(u + 1.0) - std::lgamma(p - u + 1.0);
}

Matrix principal(const Matrix& g, const std::vector<Eigen::Index>& idx) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    Matrix sub(k, k);
    for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) sub(a, b) = g(idx[static_cast<std::size_t>(a)], idx[static_cast<std::size_t>(b)]);
    }
    return sub;
}

// Advances idx to the next size-k combination of {0..p-1} in lexicographic order.
bool next_combination(std::vector<Eigen::Index>& idx, Eigen::Index p) {
    const auto k = static_cast<Eigen::Index>(idx.size());
    for (Eigen::Index pos = k - 1; pos >= 0; --pos) {
        auto& v = idx[static_cast<std::size_t>(pos)];
        if (v < p - k + pos) {
            ++v;
            for (Eigen::Index t = pos + 1; t < k; ++t)
                idx[static_cast<std::size_t>(t)] = idx[static_cast<std::size_t>(t - 1)] + 1;
            return true;
        }
    }
    return false;
}

std::vector<Eigen::Index> first_combination(int k) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    return idx;
}

}  // namespace

Matrix gram_plus(const Dataset& data, double tau) { return masked_gram(data, tau, true); }
Matrix gram_minus(const Dataset& data, double tau) { return masked_gram(data, tau, false); }

SparseEigResult sparse_eig_extremes(const Matrix& g, int u, const SparseEigOptions& options) {
    const Eigen::Index p = g.rows();
    if (g.cols() != p) throw Error(ErrorCode::InvalidArgument, "Gram matrix must be square");
    if (u < 1 || u > p) throw Error(ErrorCode::InvalidArgument, "support size must lie in [1, columns]");

    SparseEigResult out;
    out.mode = options.mode;
    out.phi_min = std::numeric_limits<double>::infinity();
    out.phi_max = -std::numeric_limits<double>::infinity();
    auto visit = [&](const std::vector<Eigen::Index>& idx) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(principal(g, idx), Eigen::EigenvaluesOnly);
        out.phi_min = std::min(out.phi_min, es.eigenvalues().minCoeff());
        out.phi_max = std::max(out.phi_max, es.eigenvalues().maxCoeff());
        ++out.supports;
    };

    if (options.mode == EigMode::Exhaustive) {
        const double log_cost = log_binomial(static_cast<double>(p), u) + 3.0 * std::log(static_cast<double>(u));
        if (log_cost > std::log(options.budget))
            throw Error(ErrorCode::BudgetExceeded, "exhaustive sparse eigenvalue search exceeds the budget");
        auto idx = first_combination(u);
        do visit(idx);
        while (next_combination(idx, p));
    } else {
        out.bounds_only = true;
        auto rng = make_stream(options.seed, 0, StreamPurpose::Design);
        std::vector<Eigen::Index> pool(static_cast<std::size_t>(p));
        for (std::size_t draw = 0; draw < options.samples; ++draw) {
            std::iota(pool.begin(), pool.end(), Eigen::Index{0});
            for (int k = 0; k < u; ++k) {
                const auto span = static_cast<std::uint64_t>(p - k);
                const auto pick = k + static_cast<Eigen::Index>(rng.next_u64() % span);
                std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick)]);
            }
            std::vector<Eigen::Index> idx(pool.begin(), pool.begin() + u);
            std::sort(idx.begin(), idx.end());
            visit(idx);
        }
    }
    out.phi_min = std::max(out.phi_min, 0.0);
    return out;
}

SparseEigenReport sparse_eigen_report(const Dataset& data, const std::vector<double>& taus, int u,
                                      const SparseEigOptions& options) {
    SparseEigenReport report;
    report.u = u;
    const int ub = std::min<int>(u, static_cast<int>(data.M()));
    for (const double tau : taus) {
        SparseEigenEntry e;
        e.tau = tau;
        e.full = sparse_eig_extremes(gram(build_design(data, tau)), u, options);
        e.plus = sparse_eig_extremes(gram_plus(data, tau), ub, options);
        e.minus = sparse_eig_extremes(gram_minus(data, tau), ub, options);
        report.entries.push_back(e);
    }
    return report;
}

double kappa2_bound(const Matrix& g, int s, int m, double c0, const SparseEigOptions& options) {
    if (s < 1 || m < s || s + m > g.rows())
        throw Error(ErrorCode::InvalidArgument, "kappa2 needs s >= 1, m >= s and s + m <= columns");
    if (!(c0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "c0 must be positive");
    const double phi_min = sparse_eig_extremes(g, s + m, options).phi_min;
    const double phi_max = sparse_eig_extremes(g, m, options).phi_max;
    // A singular (s+m)-block leaves only the trivial bound.
    if (phi_min <= 0.0) return 0.0;
    return std::sqrt(phi_min) * (1.0 - c0 * std::sqrt(s * phi_max / (m * phi_min)));
}

namespace {

Vector project_l1_ball(const Vector& v, double radius) {
    if (v.lpNorm<1>() <= radius) return v;
    std::vector<double> a(static_cast<std::size_t>(v.size()));
    for (Eigen::Index j = 0; j < v.size(); ++j) a[static_cast<std::size_t>(j)] = std::abs(v[j]);
    std::sort(a.begin(), a.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        cum += a[k];
        const double t = (cum - radius) / static_cast<double>(k + 1);
        if (k + 1 == a.size() || a[k + 1] <= t) {
            theta = t;
            break;
        }
    }
    Vector out(v.size());
    for (Eigen::Index j = 0; j < v.size(); ++j) out[j] = soft_threshold(v[j], theta);
    return out;
}


// min over |v|_1 <= r of u'A u + 2 v'B u + v'C v, with A = G_JJ, B = G_cJ, C = G_cc.
struct ConeProblem {
    Matrix A, B, C;
    double lipschitz = 0.0;

    double value(const Vector& u, const Vector& v) const {
        return u.dot(A * u) + 2.0 * v.dot(B * u) + v.dot(C * v);
    }

    std::pair<double, Vector> solve(const Vector& u, double radius, const KappaSearchOptions& opt) const {
        Vector v = Vector::Zero(C.rows());
        if (C.rows() == 0 || radius == 0.0) return {value(u, v), v};
        const Vector Bu = B * u;
        Vector y = v;
        double t = 1.0;
        double fv = value(u, v);
        for (int it = 0; it < opt.qp_iters; ++it) {
            const Vector grad = 2.0 * (Bu + C * y);
            Vector next = project_l1_ball(y - grad / lipschitz, radius);
            const double fn = value(u, next);
            if (fn > fv) {
                // Restart momentum.
                y = v;
                t = 1.0;
                continue;
            }
            const double step = (next - v).lpNorm<Eigen::Infinity>();
            const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = next + ((t - 1.0) / tn) * (next - v);
            v = std::move(next);
            fv = fn;
            t = tn;
            if (step <= opt.qp_tol) break;
        }
        return {fv, v};
    }
};

ConeProblem make_problem(const Matrix& g, const std::vector<Eigen::Index>& J) {
    const Eigen::Index p = g.rows();
    std::vector<Eigen::Index> comp;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (!std::binary_search(J.begin(), J.end(), j)) comp.push_back(j);
    }
    ConeProblem prob;
    const auto k = static_cast<Eigen::Index>(J.size());
    const auto r = static_cast<Eigen::Index>(comp.size());
    prob.A = principal(g, J);
    prob.C = principal(g, comp);
    prob.B.resize(r, k);
    for (Eigen::Index a = 0; a < r; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) prob.B(a, b) = g(comp[static_cast<std::size_t>(a)], J[static_cast<std::size_t>(b)]);
    }
    double top = 0.0;
    if (r > 0) top = Eigen::SelfAdjointEigenSolver<Matrix>(prob.C, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    prob.lipschitz = std::max(2.0 * top, 1e-12);
    return prob;
}

// Halton radical inverse in base b of index i (i >= 1), in (0, 1).
double radical_inverse(std::uint64_t i, std::uint64_t b) {
    double f = 1.0, r = 0.0;
    while (i > 0) {
        f /= static_cast<double>(b);
        r += f * static_cast<double>(i % b);
        i /= b;
    }
    return r;
}

constexpr std::uint64_t kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};

}  // namespace

KappaSearchResult brute_force_kappa(const Matrix& g, int s, double c0, const KappaSearchOptions& options) {
    const Eigen::Index p = g.rows();
    if (s < 1 || s > p) throw Error(ErrorCode::InvalidArgument, "s must lie in [1, columns]");
    if (!(c0 > 0.0)) throw Error(ErrorCode::InvalidArgument, "c0 must be positive");
    if (s > static_cast<int>(std::size(kPrimes)))
        throw Error(ErrorCode::InvalidArgument, "brute-force kappa supports s <= 16");

    KappaSearchResult best;
    best.kappa = std::numeric_limits<double>::infinity();
    best.exact_directions = s == 1;
    double best_value = std::numeric_limits<double>::infinity();

    auto consider = [&](const ConeProblem& prob, const std::vector<Eigen::Index>& J, const Vector& u) {
        const auto [value, v] = prob.solve(u, c0 * u.lpNorm<1>(), options);
        ++best.directions;
        if (value < best_value) {
            best_value = value;
            best.support = J;
            best.gamma = Vector::Zero(p);
            std::size_t ci = 0;
            for (Eigen::Index j = 0; j < p; ++j) {
                const auto pos = std::lower_bound(J.begin(), J.end(), j);
                if (pos != J.end() && *pos == j)
                    best.gamma[j] = u[pos - J.begin()];
                else
                    best.gamma[j] = v[static_cast<Eigen::Index>(ci++)];
            }
        }
        return value;
    };

    for (int k = 1; k <= s; ++k) {
        auto J = first_combination(k);
        do {
            ++best.supports;
            const ConeProblem prob = make_problem(g, J);
            if (k == 1) {
                for (const double sign : {1.0, -1.0}) consider(prob, J, Vector::Constant(1, sign));
                continue;
            }
            Vector best_u;
            double local = std::numeric_limits<double>::infinity();
            for (int d = 1; d <= options.directions; ++d) {
                Vector u(k);
                for (int c = 0; c < k; ++c)
                    u[c] = normal_quantile(radical_inverse(static_cast<std::uint64_t>(d), kPrimes[c]));
                u.normalize();
                const double val = consider(prob, J, u);
                if (val < local) {
                    local = val;
                    best_u = u;
                }
            }
            double step = 0.25;
            for (int r = 0; r < options.refine_steps && step > 1e-9; ++r) {
                bool improved = false;
                for (int c = 0; c < k && !improved; ++c) {
                    for (const double sign : {1.0, -1.0}) {
                        Vector u = best_u;
                        u[c] += sign * step;
                        if (u.norm() == 0.0) continue;
                        u.normalize();
                        const double val = consider(prob, J, u);
                        if (val < local) {
                            local = val;
                            best_u = u;
                            improved = true;
                            break;
                        }
                    }
                }
                if (!improved) step *= 0.5;
            }
        } while (next_combination(J, p));
    }
    best.kappa = std::sqrt(std::max(best_value, 0.0));
    return best;
}

UREReport ure_report(const Dataset& data, const std::vector<double>& taus, int s, int m, double c1,
                     bool brute_force, const SparseEigOptions& eig, const KappaSearchOptions& search) {
    const int M = static_cast<int>(data.M());
    if (s < 1 || m < s || 2 * s + 2 * m > M)
        throw Error(ErrorCode::InvalidArgument, "need 1 <= s <= m and 2s + 2m <= M");
    if (!(c1 > 0.0)) throw Error(ErrorCode::InvalidArgument, "c1 must be positive");
    if (taus.empty()) throw Error(ErrorCode::InvalidArgument, "tau grid is empty");

    UREReport r;
    r.s = s;
    r.m = m;
    r.c1 = c1;
    r.taus = taus;
    r.psi = std::numeric_limits<double>::infinity();
    bool all_hold = true;
    for (const double tau : taus) {
        const Matrix gp = gram_plus(data, tau);
        const Matrix gm = gram_minus(data, tau);
        const auto plus_big = sparse_eig_extremes(gp, 2 * s + 2 * m, eig);
        const auto minus_big = sparse_eig_extremes(gm, 2 * s + 2 * m, eig);
        const double plus_max = sparse_eig_extremes(gp, 2 * m, eig).phi_max;
        const double minus_max = sparse_eig_extremes(gm, 2 * m, eig).phi_max;
        const bool holds = m * plus_big.phi_min > c1 * c1 * s * plus_max &&
                           m * minus_big.phi_min > c1 * c1 * s * minus_max;
        r.condition_holds.push_back(holds);
        all_hold = all_hold && holds;
        const double hi = std::max(plus_max, minus_max);
        r.psi = std::min(r.psi, hi > 0.0 ? std::min(plus_max, minus_max) / hi : 0.0);
    }
    r.c0 = c1 * std::sqrt(r.psi / (1.0 + r.psi));
    r.sufficient = all_hold && r.psi > 0.0;
    r.kappa2_min = std::numeric_limits<double>::infinity();
    std::optional<double> bf;
    for (const double tau : taus) {
        const Matrix g = gram(build_design(data, tau));
        if (r.c0 > 0.0) {
            r.kappa2.push_back(kappa2_bound(g, s, m, r.c0, eig));
            if (brute_force) {
                const double k = brute_force_kappa(g, s, r.c0, search).kappa;
                bf = bf ? std::min(*bf, k) : k;
            }
        } else {
            r.kappa2.push_back(0.0);
        }
        r.kappa2_min = std::min(r.kappa2_min, r.kappa2.back());
    }
    r.brute_force_min = bf;
    return r;
}

Matrix Population::sigma(Eigen::Index M) const {
    Matrix s = Matrix::Identity(M, M);
    if (kind == Kind::Toeplitz) {
        for (Eigen::Index i = 0; i < M; ++i) {
            for (Eigen::Index j = 0; j < M; ++j) s(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
        }
    }
    return s;
}

Matrix population_v(const Matrix& sigma, double tau) {
    const Eigen::Index M = sigma.rows();
    Matrix v(2 * M, 2 * M);
    v.topLeftCorner(M, M) = sigma;
    v.topRightCorner(M, M) = tau * sigma;
    v.bottomLeftCorner(M, M) = tau * sigma;
    v.bottomRightCorner(M, M) = tau * sigma;
    return v;
}

double sup_distance(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw Error(ErrorCode::LengthMismatch, "matrices differ in shape");
    return (a - b).cwiseAbs().maxCoeff();
}

CovDistance cov_sup_distance(const Dataset& data, const std::vector<double>& taus, const Population& population) {
    CovDistance out;
    const Matrix sigma = population.sigma(data.M());
    for (const double tau : taus) {
        const double d = sup_distance(gram(build_design(data, tau)), population_v(sigma, tau));
        out.taus.push_back(tau);
        out.distance.push_back(d);
        out.max = std::max(out.max, d);
    }
    return out;
}

std::vector<double> hn_profile(const Dataset& data, const Vector& delta0, double tau0, const std::vector<double>& etas) {
    if (delta0.size() != data.M()) throw Error(ErrorCode::LengthMismatch, "delta0 length differs from M");
    const Eigen::Index n = data.n();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return data.q()[a] < data.q()[b]; });
    const Vector signal = data.X() * delta0;

    std::vector<double> out;
    const double nd = static_cast<double>(n);
    for (const double eta : etas) {
        if (!(eta >= 1.0 / nd)) throw Error(ErrorCode::InvalidArgument, "eta must be >= 1/n");
        const auto lo = std::max<long long>(1, static_cast<long long>(std::floor(nd * (tau0 - eta))));
        const auto hi = std::min<long long>(static_cast<long long>(std::floor(nd * (tau0 + eta))), n);
        if (lo > hi) throw Error(ErrorCode::EmptyWindow, "h_n window contains no observation");
        double sum = 0.0;
        for (long long r = lo; r <= hi; ++r) {
            const double v = signal[order[static_cast<std::size_t>(r - 1)]];
            sum += v * v;
        }
        out.push_back(sum / (2.0 * nd * eta));
    }
    return out;
}

SignalCurve signal_curve(const Dataset& data, const TrueModel& truth, const std::vector<double>& taus, double min_gap) {
    if (truth.delta0.size() != data.M()) throw Error(ErrorCode::LengthMismatch, "delta0 length differs from M");
    SignalCurve out;
    out.taus = taus;
    out.unidentified = (truth.delta0.array() == 0.0).all();
    const Vector jump_sq = (data.X() * truth.delta0).array().square();
    const double nd = static_cast<double>(data.n());
    double c_hat = std::numeric_limits<double>::infinity();
    for (const double tau : taus) {
        double g = 0.0;
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            if ((data.q()[i] < tau) != (data.q()[i] < truth.tau0)) g += jump_sq[i];
        }
        g /= nd;
        out.g.push_back(g);
        const double gap = std::abs(tau - truth.tau0);
        if (gap > 0.0 && gap >= min_gap) c_hat = std::min(c_hat, g / gap);
    }
    out.c_hat = out.unidentified || !std::isfinite(c_hat) ? 0.0 : c_hat;
    return out;
}

double analytic_signal_slope(double c, double t0, double t1) {
    const double r = t0 / t1;
    return r * r * c * c;
}

double power_iteration_max_eig(const Matrix& a, double tol, int max_iters) {
    const Eigen::Index p = a.rows();
    if (p == 0 || a.cols() != p) throw Error(ErrorCode::InvalidArgument, "power iteration needs a square matrix");
    Vector v(p);
    for (Eigen::Index j = 0; j < p; ++j) v[j] = 1.0 + 0.5 * std::sin(static_cast<double>(j + 1));
    v.normalize();
    double lambda = v.dot(a * v);
    for (int it = 0; it < max_iters; ++it) {
        Vector w = a * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        const double next = v.dot(a * v);
        if (std::abs(next - lambda) <= tol * std::max(1.0, std::abs(next))) return next;
        lambda = next;
    }
    return lambda;
}

double phi_max_sup(const Dataset& data, const std::vector<double>& taus) {
    if (taus.empty()) throw Error(ErrorCode::InvalidArgument, "tau grid is empty");
    double best = 0.0;
    for (const double tau : taus) {
        const Matrix g = gram(build_design(data, tau));
        const double top = g.rows() <= 64
                               ? Eigen::SelfAdjointEigenSolver<Matrix>(g, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff()
                               : power_iteration_max_eig(g);
        best = std::max(best, top);
    }
    return best;
}

double toeplitz_min_eigenvalue(double rho, Eigen::Index M) {
    if (M < 1) throw Error(ErrorCode::InvalidArgument, "M must be >= 1");
    const Matrix s = Population::toeplitz(rho).sigma(M);
    return Eigen::SelfAdjointEigenSolver<Matrix>(s, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

double smoothness_sup(const Dataset& data, double tau0, double eta) {
    if (!(eta > 0.0)) throw Error(ErrorCode::InvalidArgument, "eta must be positive");
    double best = 0.0;
    for (Eigen::Index j = 0; j < data.M(); ++j) {
        double left = 0.0, right = 0.0;
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            const double q = data.q()[i];
            const double x2 = data.X()(i, j) * data.X()(i, j);
            if (q > tau0 - eta && q < tau0) left += x2;
            if (q >= tau0 && q < tau0 + eta) right += x2;
        }
        best = std::max(best, std::max(left, right) / static_cast<double>(data.n()));
    }
    return best;
}

}  // namespace thrlasso
