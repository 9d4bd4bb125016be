#include "thrlasso/simulation.hpp"

#include "thrlasso/error.hpp"
#include "thrlasso/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace thrlasso {

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Lasso: return "lasso";
        case EstimatorKind::LeastSquares: return "least_squares";
        case EstimatorKind::Oracle1: return "oracle1";
        case EstimatorKind::Oracle2: return "oracle2";
    }
    return "unknown";
}

EstimatorKind estimator_from_string(const std::string& name) {
    for (const auto k : {EstimatorKind::Lasso, EstimatorKind::LeastSquares, EstimatorKind::Oracle1,
                         EstimatorKind::Oracle2}) {
        if (to_string(k) == name) return k;
    }
    throw Error(ErrorCode::ConfigError, "unknown estimator '" + name + "'");
}

TauGrid GridSpec::build(const Dataset& data) const {
    return adaptive ? TauGrid::adaptive(data, t0, t1) : TauGrid::equispaced(t0, t1, points);
}

void SimulationConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
    if (n < 3) fail("n must be >= 3");
    if (M < 3) fail("M must be >= 3 for the simulation coefficient pattern");
    if (!(rho >= 0.0 && rho < 1.0)) fail("rho must lie in [0, 1)");
    if (!std::isfinite(c)) fail("c must be finite");
    if (!(tau0 > 0.0 && tau0 < 1.0)) fail("tau0 must lie in (0, 1)");
    if (!(sigma > 0.0)) fail("sigma must be positive");
    if (!(grid.t0 > 0.0 && grid.t0 <= grid.t1 && grid.t1 < 1.0)) fail("grid must satisfy 0 < t0 <= t1 < 1");
    if (!grid.adaptive && grid.points < 1) fail("grid needs at least one point");
    if (replications < 1) fail("replications must be >= 1");
    if (eval_size < 1) fail("evaluation size must be >= 1");
    if (estimators.empty()) fail("no estimators requested");
    for (std::size_t a = 0; a < estimators.size(); ++a) {
        for (std::size_t b = a + 1; b < estimators.size(); ++b) {
            if (estimators[a] == estimators[b]) fail("estimator listed twice: " + to_string(estimators[a]));
        }
    }
    if (std::find(estimators.begin(), estimators.end(), EstimatorKind::LeastSquares) != estimators.end() &&
        M > n)
        fail("least_squares needs M <= n");
    try {
        lambda_rule.validate();
        solver.validate();
    } catch (const Error& e) {
        fail(e.what());
    }
}

TrueModel SimulationConfig::true_model() const {
    TrueModel t;
    t.beta0 = Vector::Zero(M);
    t.beta0[0] = 1.0;
    t.beta0[2] = 1.0;
    t.delta0 = Vector::Zero(M);
    t.delta0[1] = -c;
    t.delta0[2] = c;
    t.tau0 = tau0;
    t.sigma = sigma;
    return t;
}

Matrix draw_covariates(Philox4x32& rng, Eigen::Index n, Eigen::Index M, double rho) {
    Matrix X(n, M);
    const double innov = std::sqrt(1.0 - rho * rho);
    for (Eigen::Index i = 0; i < n; ++i) {
        double prev = 0.0;
        for (Eigen::Index j = 0; j < M; ++j) {
            const double z = rng.normal();
            prev = j == 0 ? z : rho * prev + innov * z;
            X(i, j) = prev;
        }
    }
    return X;
}

SimulatedSample simulate_dataset(const SimulationConfig& config, std::uint64_t index) {
    auto design_rng = make_stream(config.seed, index, StreamPurpose::Design);
    Matrix X = draw_covariates(design_rng, config.n, config.M, config.rho);
    Vector q(config.n);
    for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = design_rng.uniform();

    auto noise_rng = make_stream(config.seed, index, StreamPurpose::Noise);
    TrueModel truth = config.true_model();
    Vector y = truth.regression(X, q);
    for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += config.sigma * noise_rng.normal();

    return {Dataset::create(std::move(y), std::move(X), std::move(q)), std::move(truth)};
}

EvaluationSet draw_evaluation_set(const SimulationConfig& config, std::uint64_t index) {
    auto rng = make_stream(config.seed, index, StreamPurpose::Eval);
    EvaluationSet eval;
    eval.X = draw_covariates(rng, config.eval_size, config.M, config.rho);
    eval.q.resize(config.eval_size);
    for (Eigen::Index i = 0; i < eval.q.size(); ++i) eval.q[i] = rng.uniform();
    return eval;
}

double prediction_error(const Vector& alpha_hat, double tau_hat, const TrueModel& truth,
                        const EvaluationSet& eval) {
    const Vector f0 = truth.regression(eval.X, eval.q);
    const Vector fhat = threshold_regression(eval.X, eval.q, alpha_hat, tau_hat);
    return (f0 - fhat).squaredNorm() / static_cast<double>(f0.size());
}

const EstimatorRecord* ReplicationResult::find(EstimatorKind kind) const {
    for (const auto& [k, rec] : records) {
        if (k == kind) return &rec;
    }
    return nullptr;
}

double EstimatorSummary::failure_rate() const {
    const int total = completed + failed;
    return total == 0 ? 0.0 : static_cast<double>(failed) / total;
}

const EstimatorSummary& MonteCarloReport::summary(EstimatorKind kind) const {
    for (const auto& s : summaries) {
        if (s.kind == kind) return s;
    }
    throw Error(ErrorCode::InvalidArgument, "estimator not in report: " + to_string(kind));
}

namespace {

std::vector<Eigen::Index> true_support(const TrueModel& truth) {
    const Vector a0 = truth.alpha0();
    std::vector<Eigen::Index> s;
    for (Eigen::Index j = 0; j < a0.size(); ++j) {
        if (a0[j] != 0.0) s.push_back(j);
    }
    return s;
}

EstimatorRecord score(const Vector& alpha, double tau_hat, const SimulationConfig& config,
                      const TrueModel& truth, const EvaluationSet& eval) {
    EstimatorRecord r;
    const Vector a0 = truth.alpha0();
    r.pe = prediction_error(alpha, tau_hat, truth, eval);
    r.m_alpha = static_cast<int>((alpha.array() != 0.0).count());
    r.l1_alpha = (alpha - a0).lpNorm<1>();
    if (config.c != 0.0) r.l1_tau = std::abs(tau_hat - truth.tau0);
    r.support_recovered = true;
    for (const auto j : true_support(truth)) {
        if (alpha[j] == 0.0) r.support_recovered = false;
    }
    r.tau_hat = tau_hat;
    return r;
}

EstimatorRecord run_estimator(EstimatorKind kind, const SimulationConfig& config, const SimulatedSample& sample,
                              const TauGrid& grid, const EvaluationSet& eval) {
    const auto& data = sample.data;
    try {
        switch (kind) {
            case EstimatorKind::Lasso: {
                const auto levels = resolve_lambda(config.lambda_rule, data, grid, config.solver);
                const auto est = fit_threshold_lasso(data, grid, levels, config.solver);
                if (est.has_failures()) {
                    EstimatorRecord r;
                    r.failed = true;
                    r.failure = "profile fit did not converge at every grid point";
                    return r;
                }
                auto r = score(est.alpha_hat, est.tau_hat, config, sample.truth, eval);
                r.lambda = est.lambda;
                return r;
            }
            case EstimatorKind::LeastSquares: {
                std::vector<Eigen::Index> all(static_cast<std::size_t>(2 * data.M()));
                std::iota(all.begin(), all.end(), Eigen::Index{0});
                const auto ls = least_squares_fit(data, all, std::nullopt, grid);
                auto r = score(ls.alpha, ls.tau, config, sample.truth, eval);
                r.singular = ls.singular;
                return r;
            }
            case EstimatorKind::Oracle1: {
                const auto ls = least_squares_fit(data, true_support(sample.truth), std::nullopt, grid);
                auto r = score(ls.alpha, ls.tau, config, sample.truth, eval);
                r.singular = ls.singular;
                return r;
            }
            case EstimatorKind::Oracle2: {
                const auto ls = least_squares_fit(data, true_support(sample.truth), sample.truth.tau0);
                auto r = score(ls.alpha, ls.tau, config, sample.truth, eval);
                r.singular = ls.singular;
                return r;
            }
        }
    } catch (const Error& e) {
        EstimatorRecord r;
        r.failed = true;
        r.failure = e.what();
        return r;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown estimator");
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double ss = 0.0;
    for (const double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double median(std::vector<double> values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t k = values.size() / 2;
    return values.size() % 2 == 1 ? values[k] : 0.5 * (values[k - 1] + values[k]);
}

ReplicationResult run_replication(const SimulationConfig& config, std::uint64_t index) {
    const auto sample = simulate_dataset(config, index);
    const auto eval = draw_evaluation_set(config, index);
    const TauGrid grid = config.grid.build(sample.data);
    ReplicationResult out;
    out.index = index;
    for (const auto kind : config.estimators)
        out.records.emplace_back(kind, run_estimator(kind, config, sample, grid, eval));
    return out;
}

std::vector<EstimatorSummary> summarize(const std::vector<EstimatorKind>& estimators,
                                        const std::vector<ReplicationResult>& replications) {
    std::vector<EstimatorSummary> out;
    for (const auto kind : estimators) {
        EstimatorSummary s;
        s.kind = kind;
        std::vector<double> pe, m, l1a, l1t;
        int recovered = 0;
        for (const auto& rep : replications) {
            const auto* r = rep.find(kind);
            if (r == nullptr) continue;
            if (r->failed) {
                ++s.failed;
                continue;
            }
            ++s.completed;
            pe.push_back(r->pe);
            m.push_back(r->m_alpha);
            l1a.push_back(r->l1_alpha);
            if (r->l1_tau) l1t.push_back(*r->l1_tau);
            recovered += r->support_recovered ? 1 : 0;
        }
        s.pe_mean = mean(pe);
        s.pe_median = median(pe);
        s.pe_sd = sample_sd(pe);
        s.m_alpha_mean = mean(m);
        s.l1_alpha_mean = mean(l1a);
        s.l1_alpha_median = median(l1a);
        if (!l1t.empty()) {
            s.l1_tau_mean = mean(l1t);
            s.l1_tau_median = median(l1t);
        }
        s.support_frequency = s.completed == 0 ? 0.0 : static_cast<double>(recovered) / s.completed;
        out.push_back(s);
    }
    return out;
}

MonteCarloReport run_monte_carlo(const SimulationConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    MonteCarloReport report;
    report.config = config;
    report.replications.resize(static_cast<std::size_t>(config.replications));
    parallel_for(report.replications.size(), config.workers, [&](std::size_t r) {
        report.replications[r] = run_replication(config, r);
    });
    report.summaries = summarize(config.estimators, report.replications);
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw Error(ErrorCode::InvalidArgument, "slope needs two or more paired points");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
    }
    if (sxx == 0.0) throw Error(ErrorCode::InvalidArgument, "slope undefined for constant x");
    return sxy / sxx;
}

RateExperiment run_rate_experiment(SimulationConfig base, const std::vector<int>& ns) {
    base.estimators = {EstimatorKind::Lasso};
    RateExperiment out;
    std::vector<double> logn, logt, loga;
    for (const int n : ns) {
        base.n = n;
        const auto report = run_monte_carlo(base);
        std::vector<double> tau_err, l1;
        RatePoint p;
        p.n = n;
        for (const auto& rep : report.replications) {
            const auto* r = rep.find(EstimatorKind::Lasso);
            if (r->failed) {
                ++p.failed;
                continue;
            }
            tau_err.push_back(r->l1_tau.value_or(0.0));
            l1.push_back(r->l1_alpha);
        }
        p.tau_error_median = median(tau_err);
        p.l1_alpha_median = median(l1);
        out.points.push_back(p);
        logn.push_back(std::log(static_cast<double>(n)));
        logt.push_back(std::log(p.tau_error_median));
        loga.push_back(std::log(p.l1_alpha_median));
    }
    out.tau_slope = ols_slope(logn, logt);
    out.alpha_slope = ols_slope(logn, loga);
    return out;
}

}  // namespace thrlasso
