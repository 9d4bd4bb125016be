#include "thrlasso/design.hpp"

#include "thrlasso/error.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace thrlasso {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::ZeroColumn: return "ZeroColumn";
        case ErrorCode::DuplicateQ: return "DuplicateQ";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::AllZeroDesign: return "AllZeroDesign";
        case ErrorCode::DegenerateRn: return "DegenerateRn";
        case ErrorCode::BudgetExceeded: return "BudgetExceeded";
        case ErrorCode::EmptyWindow: return "EmptyWindow";
        case ErrorCode::SingularDesign: return "SingularDesign";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

namespace {

std::vector<Eigen::Index> argsort(const Vector& v) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(v.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return v[a] < v[b]; });
    return order;
}

// Ties are separated by a rank-based epsilon: the k-th member of a tied run is
// shifted by k * eps, with eps small relative to the gap to the next distinct value.
int jitter_ties(Vector& q) {
    const auto order = argsort(q);
    int broken = 0;
    const auto n = static_cast<std::size_t>(q.size());
    std::size_t start = 0;
    while (start < n) {
        std::size_t stop = start + 1;
        while (stop < n && q[order[stop]] == q[order[start]]) ++stop;
        if (stop - start > 1) {
            const double value = q[order[start]];
            const double next = stop < n ? q[order[stop]] : value + 1.0;
            const double span = std::max(next - value, std::abs(value) * 1e-12 + 1e-300);
            const double eps = span / static_cast<double>(2 * (stop - start));
            for (std::size_t k = 1; k < stop - start; ++k) {
                q[order[start + k]] = value + static_cast<double>(k) * eps;
                ++broken;
            }
        }
        start = stop;
    }
    return broken;
}

}  // namespace

Dataset Dataset::create(Vector y, Matrix X, Vector q, std::vector<std::string> names,
                        TiePolicy ties) {
    if (y.size() < 1 || X.cols() < 1)
        throw Error(ErrorCode::InvalidArgument, "dataset needs n >= 1 and M >= 1");
    if (X.rows() != y.size() || q.size() != y.size())
        throw Error(ErrorCode::LengthMismatch, "y, X and q must share the same number of rows");
    if (!y.allFinite() || !X.allFinite() || !q.allFinite())
        throw Error(ErrorCode::NonFinite, "dataset contains non-finite entries");
    if (!names.empty() && static_cast<Eigen::Index>(names.size()) != X.cols())
        throw Error(ErrorCode::LengthMismatch, "covariate name count does not match X");

    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        if (X.col(j).cwiseAbs().maxCoeff() == 0.0)
            throw Error(ErrorCode::ZeroColumn,
                        "covariate column " + std::to_string(j + 1) + " is identically zero");
    }

    Dataset d;
    const auto order = argsort(q);
    for (std::size_t k = 1; k < order.size(); ++k) {
        if (q[order[k]] == q[order[k - 1]]) {
            if (ties == TiePolicy::Reject) {
                const auto a = std::min(order[k - 1], order[k]) + 1;
                const auto b = std::max(order[k - 1], order[k]) + 1;
                throw Error(ErrorCode::DuplicateQ,
                            "duplicate threshold value " + std::to_string(q[order[k]]) +
                                " in rows " + std::to_string(a) + " and " + std::to_string(b));
            }
            d.jittered_ties_ = jitter_ties(q);
            spdlog::warn("broke {} tied threshold value(s) by rank-based jitter", d.jittered_ties_);
            break;
        }
    }

    if (names.empty()) {
        names.reserve(static_cast<std::size_t>(X.cols()));
        for (Eigen::Index j = 0; j < X.cols(); ++j) names.push_back("x" + std::to_string(j + 1));
    }
    d.y_ = std::move(y);
    d.X_ = std::move(X);
    d.q_ = std::move(q);
    d.names_ = std::move(names);
    return d;
}

Dataset Dataset::without_row(Eigen::Index i) const {
    const Eigen::Index n = this->n();
    if (i < 0 || i >= n) throw Error(ErrorCode::InvalidArgument, "row index out of range");
    Dataset d;
    d.y_.resize(n - 1);
    d.q_.resize(n - 1);
    d.X_.resize(n - 1, M());
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < n; ++r) {
        if (r == i) continue;
        d.y_[k] = y_[r];
        d.q_[k] = q_[r];
        d.X_.row(k) = X_.row(r);
        ++k;
    }
    d.names_ = names_;
    return d;
}

double empirical_norm(const Eigen::Ref<const Vector>& v) {
    if (v.size() == 0) return 0.0;
    return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

ThresholdDesign ThresholdDesign::from_matrix(Matrix columns, double tau) {
    ThresholdDesign d;
    d.tau = tau;
    d.M = columns.cols() / 2;
    d.col_norms.resize(columns.cols());
    for (Eigen::Index j = 0; j < columns.cols(); ++j) d.col_norms[j] = empirical_norm(columns.col(j));
    d.columns = std::move(columns);
    return d;
}

ThresholdDesign build_design(const Dataset& data, double tau) {
    const Eigen::Index n = data.n();
    const Eigen::Index M = data.M();
    ThresholdDesign d;
    d.tau = tau;
    d.M = M;
    d.columns.resize(n, 2 * M);
    d.columns.leftCols(M) = data.X();
    for (Eigen::Index i = 0; i < n; ++i) {
        if (data.q()[i] < tau)
            d.columns.row(i).tail(M) = data.X().row(i);
        else
            d.columns.row(i).tail(M).setZero();
    }
    d.col_norms.resize(2 * M);
    for (Eigen::Index j = 0; j < 2 * M; ++j) d.col_norms[j] = empirical_norm(d.columns.col(j));
    return d;
}

void advance_design(const Dataset& data, ThresholdDesign& design, double new_tau) {
    const Eigen::Index M = data.M();
    if (design.M != M || design.n() != data.n())
        throw Error(ErrorCode::LengthMismatch, "design does not belong to this dataset");
    const double lo = std::min(design.tau, new_tau);
    const double hi = std::max(design.tau, new_tau);
    bool touched = false;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        const double qi = data.q()[i];
        if (qi < lo || qi >= hi) continue;
        if (qi < new_tau)
            design.columns.row(i).tail(M) = data.X().row(i);
        else
            design.columns.row(i).tail(M).setZero();
        touched = true;
    }
    design.tau = new_tau;
    if (touched) {
        for (Eigen::Index j = M; j < 2 * M; ++j)
            design.col_norms[j] = empirical_norm(design.columns.col(j));
    }
}

TauGrid TauGrid::equispaced(double t0, double t1, int points) {
    if (points < 1) throw Error(ErrorCode::InvalidArgument, "grid needs at least one point");
    if (!(t0 <= t1) || !std::isfinite(t0) || !std::isfinite(t1))
        throw Error(ErrorCode::InvalidArgument, "grid bounds must satisfy t0 <= t1");
    if (points > 1 && t0 == t1)
        throw Error(ErrorCode::InvalidArgument, "multi-point grid needs t0 < t1");
    TauGrid g;
    g.t0 = t0;
    g.t1 = t1;
    g.points.resize(static_cast<std::size_t>(points));
    if (points == 1) {
        g.points[0] = t0;
        return g;
    }
    const double step = (t1 - t0) / static_cast<double>(points - 1);
    for (int k = 0; k < points; ++k) g.points[static_cast<std::size_t>(k)] = t0 + step * k;
    g.points.back() = t1;
    return g;
}

TauGrid TauGrid::adaptive(const Dataset& data, double t0, double t1) {
    std::vector<double> sorted(data.q().begin(), data.q().end());
    std::sort(sorted.begin(), sorted.end());
    TauGrid g;
    g.t0 = t0;
    g.t1 = t1;
    for (std::size_t k = 1; k < sorted.size(); ++k) {
        const double mid = 0.5 * (sorted[k - 1] + sorted[k]);
        if (mid >= t0 && mid <= t1) g.points.push_back(mid);
    }
    if (g.points.empty())
        throw Error(ErrorCode::InvalidArgument, "no Q midpoints fall inside [t0, t1]");
    return g;
}

double empirical_quantile(const Vector& v, double p) {
    if (v.size() == 0) throw Error(ErrorCode::InvalidArgument, "quantile of empty vector");
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile level outside [0,1]");
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    const double h = p * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

TauGrid TauGrid::quantile(const Dataset& data, double lo, double hi, int points) {
    if (!(lo < hi)) throw Error(ErrorCode::InvalidArgument, "quantile grid needs lo < hi");
    return equispaced(empirical_quantile(data.q(), lo), empirical_quantile(data.q(), hi), points);
}

TauGrid TauGrid::single(double tau) { return equispaced(tau, tau, 1); }

void TauGrid::validate_for(const Dataset& data) const {
    if (points.empty()) throw Error(ErrorCode::InvalidArgument, "tau grid is empty");
    for (std::size_t k = 1; k < points.size(); ++k) {
        if (!(points[k] > points[k - 1]))
            throw Error(ErrorCode::InvalidArgument, "tau grid must be strictly increasing");
    }
    if (!(data.q_min() < t0 && t0 <= t1 && t1 < data.q_max()))
        throw Error(ErrorCode::InvalidArgument,
                    "tau range must satisfy min Q < t0 <= t1 < max Q");
}

Vector TrueModel::alpha0() const {
    Vector a(beta0.size() + delta0.size());
    a << beta0, delta0;
    return a;
}

Vector TrueModel::regression(const Matrix& X, const Vector& q) const {
    return threshold_regression(X, q, alpha0(), tau0);
}

Vector threshold_regression(const Matrix& X, const Vector& q, const Vector& alpha, double tau) {
    const Eigen::Index M = X.cols();
    if (alpha.size() != 2 * M) throw Error(ErrorCode::LengthMismatch, "alpha must have length 2M");
    const Vector base = X * alpha.head(M);
    const Vector shift = X * alpha.tail(M);
    Vector f(X.rows());
    for (Eigen::Index i = 0; i < X.rows(); ++i) f[i] = base[i] + (q[i] < tau ? shift[i] : 0.0);
    return f;
}

RnResult compute_rn(const Dataset& data, double t0) {
    RnResult out;
    out.value = 1.0;
    for (Eigen::Index j = 0; j < data.M(); ++j) {
        const auto col = data.X().col(j);
        const double full = col.squaredNorm();
        if (full == 0.0)
            throw Error(ErrorCode::ZeroColumn, "column " + std::to_string(j + 1) + " has zero norm");
        double part = 0.0;
        for (Eigen::Index i = 0; i < data.n(); ++i) {
            if (data.q()[i] < t0) part += col[i] * col[i];
        }
        out.value = std::min(out.value, part / full);
    }
    out.degenerate = out.value == 0.0;
    if (out.degenerate) spdlog::warn("r_n is zero at t0 = {}: no observation has Q < t0", t0);
    return out;
}

double prediction_risk_norm(const Eigen::Ref<const Vector>& fit_values,
                            const Eigen::Ref<const Vector>& true_values) {
    if (fit_values.size() != true_values.size())
        throw Error(ErrorCode::LengthMismatch, "prediction vectors differ in length");
    if (fit_values.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty prediction vectors");
    return empirical_norm(fit_values - true_values);
}

}  // namespace thrlasso
