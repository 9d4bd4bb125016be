#include "thrlasso/cli.hpp"

#include "thrlasso/diagnostics.hpp"
#include "thrlasso/error.hpp"
#include "thrlasso/estimator.hpp"
#include "thrlasso/io.hpp"
#include "thrlasso/report.hpp"
#include "thrlasso/simulation.hpp"

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <fstream>
#include <optional>
#include <ostream>

namespace thrlasso {

namespace {

struct RunConfig {
    std::string command;
    std::string data;
    std::string out;
    std::string plot_prefix;
    std::string replication_csv;
    std::string ties = "reject";
    bool emit_plot_data = false;
    bool timing = false;

    double t0 = 0.15;
    double t1 = 0.85;
    int grid_points = TauGrid::kDefaultPoints;
    int diag_grid_points = 11;
    bool quantile_grid = false;
    double q_lo = 0.10;
    double q_hi = 0.90;
    bool adaptive_grid = false;

    std::string lambda = "theoretical";
    double A = 2.8;
    double mu = 0.0;
    double sigma = 0.5;
    double lambda_value = 0.0;
    std::vector<double> candidates;
    int cv_count = 20;
    double cv_ratio = 1e-3;
    std::string convention = "lars";
    bool loocv_frozen = false;
    bool estimate_sigma = false;

    SolverConfig solver;
    double box_bound = 0.0;

    std::uint64_t seed = 20120101;
    int reps = 400;
    int workers = 1;
    int n = 200;
    int M = 50;
    double rho = 0.0;
    double c = 1.0;
    double tau0 = 0.5;
    int eval_size = 400;
    std::vector<std::string> estimators{"lasso"};
    std::vector<int> rate_ns;

    int u = 2;
    int s = 1;
    int m = 1;
    double c1 = 1.0;
    bool brute_force = false;
    std::string population = "identity";
    std::vector<double> etas;
    std::vector<double> delta0;
    double eta_smooth = 0.0;
    bool sampled = false;
    std::size_t samples = 2000;
    double budget = 1e9;
    double min_gap = 0.05;
};

// Options present on the selected subcommand (command line or config file).
struct Presence {
    const CLI::App* app = nullptr;
    bool has(const std::string& name) const {
        try {
            return app->get_option(name)->count() > 0;
        } catch (const CLI::OptionNotFound&) {
            return false;
        }
    }
};

[[noreturn]] void config_fail(const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); }

PenaltyConvention parse_convention(const std::string& s) {
    if (s == "lars") return PenaltyConvention::Lars;
    if (s == "joint") return PenaltyConvention::Joint;
    config_fail("--convention must be lars or joint");
}

SolverConfig solver_config(const RunConfig& cfg, const Presence& p) {
    SolverConfig s = cfg.solver;
    if (p.has("--box-bound")) s.box_bound = cfg.box_bound;
    try {
        s.validate();
    } catch (const Error& e) {
        config_fail(e.what());
    }
    return s;
}

LambdaRule lambda_rule(const RunConfig& cfg, const Presence& p, double sigma) {
    try {
        if (cfg.lambda == "theoretical") {
            std::optional<double> mu;
            if (p.has("--mu")) mu = cfg.mu;
            return LambdaRule::theoretical(cfg.A, sigma, mu, parse_convention(cfg.convention));
        }
        if (cfg.lambda == "fixed") {
            if (!p.has("--lambda-value")) config_fail("--lambda fixed needs --lambda-value");
            return LambdaRule::fixed(cfg.lambda_value);
        }
        if (cfg.lambda == "loocv") return LambdaRule::loocv(cfg.candidates);
    } catch (const Error& e) {
        config_fail(e.what());
    }
    config_fail("--lambda must be theoretical, loocv or fixed");
}

TiePolicy tie_policy(const std::string& s) {
    if (s == "reject") return TiePolicy::Reject;
    if (s == "jitter") return TiePolicy::Jitter;
    config_fail("--ties must be reject or jitter");
}

struct GridChoice {
    TauGrid grid;
    Json echo;
};

GridChoice grid_for(const RunConfig& cfg, const Presence& p, const Dataset& data, int points, bool quantile_default) {
    const bool has_t0 = p.has("--t0"), has_t1 = p.has("--t1");
    if (has_t0 != has_t1) config_fail("--t0 and --t1 must be given together");
    if (cfg.quantile_grid && has_t0) config_fail("--quantile-grid conflicts with --t0/--t1");
    const bool quantile = cfg.quantile_grid || (quantile_default && !has_t0);
    GridChoice g;
    try {
        if (quantile) {
            g.grid = TauGrid::quantile(data, cfg.q_lo, cfg.q_hi, points);
            if (cfg.adaptive_grid) g.grid = TauGrid::adaptive(data, g.grid.t0, g.grid.t1);
        } else {
            g.grid = cfg.adaptive_grid ? TauGrid::adaptive(data, cfg.t0, cfg.t1)
                                       : TauGrid::equispaced(cfg.t0, cfg.t1, points);
        }
        g.grid.validate_for(data);
    } catch (const Error& e) {
        config_fail(e.what());
    }
    g.echo = {{"mode", quantile ? "quantile" : "range"},
              {"quantile_lo", quantile ? Json(cfg.q_lo) : Json(nullptr)},
              {"quantile_hi", quantile ? Json(cfg.q_hi) : Json(nullptr)},
              {"adaptive", cfg.adaptive_grid},
              {"t0", g.grid.t0},
              {"t1", g.grid.t1},
              {"points", g.grid.points.size()}};
    return g;
}

Json solver_echo(const SolverConfig& s) {
    return {{"max_iters", s.max_iters},
            {"obj_tol", s.obj_tol},
            {"coef_tol", s.coef_tol},
            {"kkt_tol", s.kkt_tol},
            {"box_bound", s.box_bound ? Json(*s.box_bound) : Json(nullptr)}};
}

Json rule_echo(const LambdaRule& r) {
    return {{"kind", to_string(r.kind)},
            {"A", r.A},
            {"mu", r.mu ? Json(*r.mu) : Json(nullptr)},
            {"sigma", r.sigma},
            {"fixed_value", r.fixed_value ? Json(*r.fixed_value) : Json(nullptr)},
            {"candidates", r.candidates},
            {"convention", to_string(r.convention)}};
}

Dataset load_data(const RunConfig& cfg) {
    if (cfg.data.empty()) config_fail("--data is required");
    try {
        return load_csv(cfg.data, tie_policy(cfg.ties));
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ConfigError) throw;
        // Everything raised while reading the input is a data error.
        const ErrorCode code = exit_code_for(e.code()) == 3 ? e.code() : ErrorCode::ParseError;
        throw Error(code, e.what());
    }
}

std::string plot_prefix(const RunConfig& cfg) {
    if (!cfg.plot_prefix.empty()) return cfg.plot_prefix;
    if (cfg.out.empty()) return "thrlasso";
    const auto dot = cfg.out.rfind(".json");
    return dot != std::string::npos && dot + 5 == cfg.out.size() ? cfg.out.substr(0, dot) : cfg.out;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) config_fail("cannot write '" + path + "'");
    return f;
}

void write_document(const RunConfig& cfg, const Json& doc, std::ostream& out) {
    if (cfg.out.empty()) {
        out << dump(doc);
        return;
    }
    auto f = open_output(cfg.out);
    f << dump(doc);
}

using Clock = std::chrono::steady_clock;

void add_timing(const RunConfig& cfg, Json& doc, Clock::time_point start) {
    if (cfg.timing) doc["timing"] = {{"wall_seconds", std::chrono::duration<double>(Clock::now() - start).count()}};
}

int run_fit(const RunConfig& cfg, const Presence& p, std::ostream& out, bool cv_command) {
    const auto start = Clock::now();
    const Dataset data = load_data(cfg);
    const auto g = grid_for(cfg, p, data, cfg.grid_points, true);
    const SolverConfig solver = solver_config(cfg, p);
    LoocvOptions cv_opts;
    cv_opts.profile_frozen = cfg.loocv_frozen;
    cv_opts.workers = cfg.workers;

    auto candidates = [&] {
        return cfg.candidates.empty() ? default_lambda_candidates(data, g.grid, cfg.cv_count, cfg.cv_ratio)
                                      : cfg.candidates;
    };

    double sigma = cfg.sigma;
    Json lambda_info;
    if (cfg.estimate_sigma) {
        sigma = estimate_sigma_pilot(data, g.grid, candidates(), solver);
        lambda_info["sigma_estimated"] = sigma;
    }
    LambdaRule rule = lambda_rule(cfg, p, sigma);
    if (cv_command) rule = LambdaRule::loocv(cfg.candidates);

    PenaltyLevels levels;
    std::optional<LoocvResult> cv;
    if (rule.kind == LambdaKind::Loocv) {
        cv = loocv_lambda(data, g.grid, candidates(), solver, cv_opts);
        levels = PenaltyLevels::joint(cv->lambda);
    } else {
        levels = resolve_lambda(rule, data, g.grid, solver, cv_opts);
    }
    if (rule.kind == LambdaKind::Theoretical) lambda_info["rn"] = compute_rn(data, g.grid.t0).value;
    lambda_info["select"] = levels.select;
    lambda_info["fit"] = levels.fit;

    const auto est = fit_threshold_lasso(data, g.grid, levels, solver);

    Json doc;
    doc["schema"] = kReportSchema;
    doc["command"] = cv_command ? "cv" : "fit";
    Json config;
    config["data"] = cfg.data;
    config["ties"] = cfg.ties;
    config["grid"] = g.echo;
    config["lambda_rule"] = rule_echo(rule);
    if (rule.kind == LambdaKind::Loocv) {
        config["cv"] = {{"count", cfg.cv_count}, {"ratio", cfg.cv_ratio}, {"profile_frozen", cfg.loocv_frozen}};
    }
    config["estimate_sigma"] = cfg.estimate_sigma;
    config["solver"] = solver_echo(solver);
    config["tie_tol"] = "1e-9 * (1 + |min criterion|)";
    doc["config"] = config;
    doc["data"] = {{"n", data.n()}, {"M", data.M()}, {"jittered_ties", data.jittered_ties()}};
    doc["lambda"] = lambda_info;
    doc["estimates"] = estimate_json(data, est);
    doc["profile"] = profile_json(est.profile);
    if (cv) {
        Json curve = Json::array();
        for (std::size_t k = 0; k < cv->candidates.size(); ++k) {
            curve.push_back({{"lambda", cv->candidates[k]},
                             {"cv_error", std::isfinite(cv->cv_error[k]) ? Json(cv->cv_error[k]) : Json(nullptr)},
                             {"failed_folds", cv->failed_folds[k]}});
        }
        doc["cv"] = {{"lambda", cv->lambda}, {"curve", curve}};
    }
    int failed_points = 0;
    for (const auto& pt : est.profile) failed_points += pt.ok() ? 0 : 1;
    doc["metrics"] = {{"failed_points", failed_points}, {"grid_points", est.profile.size()}};
    add_timing(cfg, doc, start);
    write_document(cfg, doc, out);
    if (!cfg.out.empty()) {
        out << "tau_hat = " << format_double(est.tau_hat) << ", lambda = " << format_double(est.lambda)
            << ", active = " << est.sparsity() << "\n"
            << coefficient_table(data, est.alpha_hat);
    }

    if (cfg.emit_plot_data) {
        const auto prefix = plot_prefix(cfg);
        auto f = open_output(prefix + ".profile.csv");
        f << "tau,criterion,sn,active,converged\n";
        for (const auto& pt : est.profile) {
            f << format_double(pt.tau) << ',' << format_double(pt.criterion) << ',' << format_double(pt.fit.sn)
              << ',' << pt.fit.sparsity() << ',' << (pt.ok() ? 1 : 0) << '\n';
        }
        if (cv) {
            auto c = open_output(prefix + ".cv.csv");
            c << "lambda,cv_error,failed_folds\n";
            for (std::size_t k = 0; k < cv->candidates.size(); ++k)
                c << format_double(cv->candidates[k]) << ',' << format_double(cv->cv_error[k]) << ','
                  << cv->failed_folds[k] << '\n';
        }
    }
    return 0;
}

std::string tau_cell(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", *v);
    return buf;
}

SimulationConfig simulation_config(const RunConfig& cfg, const Presence& p) {
    SimulationConfig sc;
    sc.n = cfg.n;
    sc.M = cfg.M;
    sc.rho = cfg.rho;
    sc.c = cfg.c;
    sc.tau0 = cfg.tau0;
    sc.sigma = cfg.sigma;
    sc.grid.t0 = cfg.t0;
    sc.grid.t1 = cfg.t1;
    sc.grid.points = cfg.grid_points;
    sc.grid.adaptive = cfg.adaptive_grid;
    if (cfg.quantile_grid) config_fail("simulate uses --t0/--t1; --quantile-grid applies to fit and cv");
    sc.lambda_rule = lambda_rule(cfg, p, cfg.sigma);
    sc.solver = solver_config(cfg, p);
    sc.replications = cfg.reps;
    sc.seed = cfg.seed;
    sc.workers = cfg.workers;
    sc.eval_size = cfg.eval_size;
    sc.estimators.clear();
    for (const auto& e : cfg.estimators) sc.estimators.push_back(estimator_from_string(e));
    sc.validate();
    return sc;
}

int run_simulate(const RunConfig& cfg, const Presence& p, std::ostream& out) {
    const auto start = Clock::now();
    const SimulationConfig sc = simulation_config(cfg, p);
    Json doc;
    doc["schema"] = kReportSchema;
    doc["command"] = "simulate";
    Json config = simulation_config_json(sc);
    if (!cfg.rate_ns.empty()) config["rate_ns"] = cfg.rate_ns;
    doc["config"] = config;

    std::optional<MonteCarloReport> mc;
    std::optional<RateExperiment> rate;
    if (cfg.rate_ns.empty()) {
        mc = run_monte_carlo(sc);
        doc["results"] = monte_carlo_json(*mc);
    } else {
        for (const int n : cfg.rate_ns) {
            if (n < 3) config_fail("--rate-ns entries must be >= 3");
        }
        if (cfg.rate_ns.size() < 2) config_fail("--rate-ns needs at least two sample sizes");
        rate = run_rate_experiment(sc, cfg.rate_ns);
        doc["rate"] = rate_json(*rate);
    }
    add_timing(cfg, doc, start);
    write_document(cfg, doc, out);

    if (mc && !cfg.out.empty()) {
        char line[256];
        std::snprintf(line, sizeof line, "%-14s %10s %10s %10s %10s %10s\n", "estimator", "PE", "M(alpha)", "l1(alpha)",
                      "|tau-tau0|", "failed");
        out << line;
        for (const auto& s : mc->summaries) {
            std::snprintf(line, sizeof line, "%-14s %10.4f %10.2f %10.4f %10s %10d\n", to_string(s.kind).c_str(),
                          s.pe_mean, s.m_alpha_mean, s.l1_alpha_mean,
                          tau_cell(s.l1_tau_mean).c_str(), s.failed);
            out << line;
        }
    }
    if (mc && !cfg.replication_csv.empty()) {
        auto f = open_output(cfg.replication_csv);
        f << "replication,estimator,failed,pe,m_alpha,l1_alpha,l1_tau,support_recovered,tau_hat\n";
        for (const auto& r : mc->replications) {
            for (const auto& [kind, rec] : r.records) {
                f << r.index << ',' << to_string(kind) << ',' << (rec.failed ? 1 : 0) << ',' << format_double(rec.pe)
                  << ',' << rec.m_alpha << ',' << format_double(rec.l1_alpha) << ','
                  << (rec.l1_tau ? format_double(*rec.l1_tau) : std::string()) << ','
                  << (rec.support_recovered ? 1 : 0) << ',' << format_double(rec.tau_hat) << '\n';
            }
        }
    }
    if (cfg.emit_plot_data) {
        const auto prefix = plot_prefix(cfg);
        if (mc) {
            auto f = open_output(prefix + ".support.csv");
            f << "estimator,support_frequency,completed,failed\n";
            for (const auto& s : mc->summaries)
                f << to_string(s.kind) << ',' << format_double(s.support_frequency) << ',' << s.completed << ','
                  << s.failed << '\n';
        }
        if (rate) {
            auto f = open_output(prefix + ".rate.csv");
            f << "n,log_n,tau_error_median,log_tau_error_median,l1_alpha_median,log_l1_alpha_median\n";
            for (const auto& pt : rate->points)
                f << pt.n << ',' << format_double(std::log(pt.n)) << ',' << format_double(pt.tau_error_median) << ','
                  << format_double(std::log(pt.tau_error_median)) << ',' << format_double(pt.l1_alpha_median) << ','
                  << format_double(std::log(pt.l1_alpha_median)) << '\n';
        }
    }
    return 0;
}

Json eig_json(const SparseEigResult& r) {
    return {{"phi_min", r.phi_min}, {"phi_max", r.phi_max}, {"supports", r.supports}, {"bounds_only", r.bounds_only}};
}

int run_diagnose(const RunConfig& cfg, const Presence& p, std::ostream& out) {
    const auto start = Clock::now();
    std::optional<Dataset> data;
    std::optional<TrueModel> truth;
    Json source;
    if (!cfg.data.empty()) {
        data = load_data(cfg);
        source = {{"data", cfg.data}};
        if (!cfg.delta0.empty()) {
            if (static_cast<Eigen::Index>(cfg.delta0.size()) != data->M())
                config_fail("--delta0 needs one entry per covariate");
            TrueModel t;
            t.delta0 = Eigen::Map<const Vector>(cfg.delta0.data(), static_cast<Eigen::Index>(cfg.delta0.size()));
            t.beta0 = Vector::Zero(data->M());
            t.tau0 = cfg.tau0;
            truth = t;
        }
    } else {
        RunConfig sim = cfg;
        sim.estimators = {"lasso"};
        const auto sc = simulation_config(sim, p);
        auto sample = simulate_dataset(sc, 0);
        data = std::move(sample.data);
        truth = sample.truth;
        source = {{"simulated", {{"n", sc.n}, {"M", sc.M}, {"rho", sc.rho}, {"c", sc.c}, {"tau0", sc.tau0},
                                 {"sigma", sc.sigma}, {"seed", sc.seed}, {"replication", 0}}}};
    }

    const auto g = grid_for(cfg, p, *data, cfg.diag_grid_points, !cfg.data.empty());
    const auto& taus = g.grid.points;
    SparseEigOptions eig;
    eig.mode = cfg.sampled ? EigMode::Sampled : EigMode::Exhaustive;
    eig.samples = cfg.samples;
    eig.budget = cfg.budget;
    eig.seed = cfg.seed;
    Population pop;
    if (cfg.population == "identity")
        pop = Population::identity();
    else if (cfg.population == "toeplitz")
        pop = Population::toeplitz(cfg.rho);
    else
        config_fail("--population must be identity or toeplitz");

    Json doc;
    doc["schema"] = kReportSchema;
    doc["command"] = "diagnose";
    doc["config"] = {{"source", source},
                     {"grid", g.echo},
                     {"u", cfg.u},
                     {"s", cfg.s},
                     {"m", cfg.m},
                     {"c1", cfg.c1},
                     {"brute_force", cfg.brute_force},
                     {"eig_mode", cfg.sampled ? "sampled" : "exhaustive"},
                     {"samples", cfg.samples},
                     {"budget", cfg.budget},
                     {"population", cfg.population},
                     {"rho", cfg.rho},
                     {"etas", cfg.etas},
                     {"eta_smooth", cfg.eta_smooth},
                     {"min_gap", cfg.min_gap}};

    Json diag;
    const auto rn = compute_rn(*data, g.grid.t0);
    diag["rn"] = {{"value", rn.value}, {"degenerate", rn.degenerate}};
    diag["phi_max_sup"] = phi_max_sup(*data, taus);
    diag["population_min_eigenvalue"] =
        Eigen::SelfAdjointEigenSolver<Matrix>(pop.sigma(data->M()), Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    const auto cov = cov_sup_distance(*data, taus, pop);
    diag["cov_sup_distance"] = {{"max", cov.max}, {"per_tau", cov.distance}};

    const auto se = sparse_eigen_report(*data, taus, cfg.u, eig);
    Json se_rows = Json::array();
    for (const auto& e : se.entries)
        se_rows.push_back({{"tau", e.tau}, {"full", eig_json(e.full)}, {"plus", eig_json(e.plus)}, {"minus", eig_json(e.minus)}});
    diag["sparse_eigen"] = {{"u", se.u}, {"per_tau", se_rows}};

    if (2 * cfg.s + 2 * cfg.m <= data->M()) {
        const auto ure = ure_report(*data, taus, cfg.s, cfg.m, cfg.c1, cfg.brute_force, eig);
        std::vector<int> holds(ure.condition_holds.begin(), ure.condition_holds.end());
        diag["ure"] = {{"psi", ure.psi},
                       {"c0", ure.c0},
                       {"kappa2", ure.kappa2},
                       {"kappa2_min", ure.kappa2_min},
                       {"condition_holds", holds},
                       {"sufficient", ure.sufficient},
                       {"brute_force_min", ure.brute_force_min ? Json(*ure.brute_force_min) : Json(nullptr)}};
    } else {
        diag["ure"] = {{"skipped", "needs 2s + 2m <= M"}};
    }
    if (cfg.eta_smooth > 0.0) diag["smoothness_sup"] = smoothness_sup(*data, cfg.tau0, cfg.eta_smooth);

    std::optional<SignalCurve> curve;
    if (truth) {
        if (!cfg.etas.empty()) diag["hn2"] = {{"etas", cfg.etas}, {"values", hn_profile(*data, truth->delta0, truth->tau0, cfg.etas)}};
        curve = signal_curve(*data, *truth, taus, cfg.min_gap);
        diag["signal_curve"] = {{"g", curve->g},
                                {"c_hat", curve->c_hat},
                                {"unidentified", curve->unidentified},
                                {"analytic_slope", analytic_signal_slope(truth->delta0.cwiseAbs().maxCoeff(), g.grid.t0, g.grid.t1)}};
    }
    doc["diagnostics"] = diag;
    add_timing(cfg, doc, start);
    write_document(cfg, doc, out);

    if (cfg.emit_plot_data) {
        const auto prefix = plot_prefix(cfg);
        auto f = open_output(prefix + ".cov.csv");
        f << "tau,d_inf\n";
        for (std::size_t k = 0; k < cov.taus.size(); ++k) f << format_double(cov.taus[k]) << ',' << format_double(cov.distance[k]) << '\n';
        if (curve) {
            auto s = open_output(prefix + ".signal.csv");
            s << "tau,g\n";
            for (std::size_t k = 0; k < curve->taus.size(); ++k)
                s << format_double(curve->taus[k]) << ',' << format_double(curve->g[k]) << '\n';
        }
    }
    return 0;
}

void add_io_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--out", cfg.out, "Report path (default: stdout)");
    sub->add_flag("--emit-plot-data", cfg.emit_plot_data, "Write CSV curves next to the report");
    sub->add_option("--plot-prefix", cfg.plot_prefix, "Path prefix for plot CSVs (default: report path without .json)");
    sub->add_flag("--timing", cfg.timing, "Record wall time in the report (makes reports run-dependent)");
    sub->add_option("--workers", cfg.workers, "Worker threads; results do not depend on it")->check(CLI::PositiveNumber);
}

void add_grid_options(CLI::App* sub, RunConfig& cfg, int& points) {
    sub->add_option("--grid-points", points, "Equi-spaced tau grid size")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--t0", cfg.t0, "Lower tau grid end")->capture_default_str();
    sub->add_option("--t1", cfg.t1, "Upper tau grid end")->capture_default_str();
    sub->add_flag("--adaptive-grid", cfg.adaptive_grid, "Use midpoints of sorted Q inside [t0, t1]");
}

void add_data_grid_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--data", cfg.data, "CSV with columns y, q, covariates");
    sub->add_option("--ties", cfg.ties, "Repeated Q values: reject or jitter")->capture_default_str();
    sub->add_flag("--quantile-grid", cfg.quantile_grid, "Grid between empirical Q quantiles (default when --t0/--t1 are absent)");
    sub->add_option("--quantile-lo", cfg.q_lo, "Lower quantile")->capture_default_str();
    sub->add_option("--quantile-hi", cfg.q_hi, "Upper quantile")->capture_default_str();
}

void add_lambda_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--lambda", cfg.lambda, "theoretical, loocv or fixed")->capture_default_str();
    sub->add_option("--A", cfg.A, "Constant of the theoretical rule")->capture_default_str();
    sub->add_option("--mu", cfg.mu, "When set, requires A > 2 sqrt(2) / mu");
    sub->add_option("--sigma", cfg.sigma, "Noise standard deviation")->capture_default_str();
    sub->add_option("--lambda-value", cfg.lambda_value, "Penalty for --lambda fixed");
    sub->add_option("--convention", cfg.convention, "Theoretical rule scaling: lars or joint")->capture_default_str();
    sub->add_option("--candidates", cfg.candidates, "LOOCV lambda candidates")->delimiter(',');
    sub->add_option("--cv-count", cfg.cv_count, "Default LOOCV candidate count")->capture_default_str();
    sub->add_option("--cv-ratio", cfg.cv_ratio, "Smallest default candidate as a fraction of lambda_max")->capture_default_str();
    sub->add_flag("--loocv-frozen", cfg.loocv_frozen, "Reuse the full-sample tau_hat inside folds");
    sub->add_option("--max-iters", cfg.solver.max_iters, "Coordinate sweeps per fit")->capture_default_str();
    sub->add_option("--obj-tol", cfg.solver.obj_tol, "Relative objective tolerance")->capture_default_str();
    sub->add_option("--coef-tol", cfg.solver.coef_tol, "Scaled coefficient change tolerance")->capture_default_str();
    sub->add_option("--kkt-tol", cfg.solver.kkt_tol, "KKT certification tolerance")->capture_default_str();
    sub->add_option("--box-bound", cfg.box_bound, "Optional |alpha_j| bound");
}

void add_simulation_options(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--seed", cfg.seed, "Base seed")->capture_default_str();
    sub->add_option("--n", cfg.n, "Sample size")->capture_default_str();
    sub->add_option("--M", cfg.M, "Covariates per regime block")->capture_default_str();
    sub->add_option("--rho", cfg.rho, "Toeplitz correlation (0 = identity)")->capture_default_str();
    sub->add_option("--c", cfg.c, "Jump scale")->capture_default_str();
    sub->add_option("--tau0", cfg.tau0, "True threshold")->capture_default_str();
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Threshold regression with a weighted Lasso penalty"};
    app.name(args.empty() ? "thrlasso" : args.front());
    app.set_config("--config", "", "INI file; keys are long option names, sections [fit] [cv] [simulate] [diagnose]");
    app.require_subcommand(1, 1);
    app.fallthrough();

    auto* fit = app.add_subcommand("fit", "Estimate (alpha, tau) on a CSV dataset");
    auto* cv = app.add_subcommand("cv", "Choose lambda by leave-one-out cross validation, then fit");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo replications of the simulation design");
    auto* diag = app.add_subcommand("diagnose", "Design diagnostics for the oracle-inequality assumptions");

    for (auto* sub : {fit, cv}) {
        add_io_options(sub, cfg);
        add_data_grid_options(sub, cfg);
        add_grid_options(sub, cfg, cfg.grid_points);
        add_lambda_options(sub, cfg);
        sub->add_flag("--estimate-sigma", cfg.estimate_sigma, "Replace --sigma by a LOOCV pilot residual SD");
    }

    add_io_options(sim, cfg);
    add_grid_options(sim, cfg, cfg.grid_points);
    add_lambda_options(sim, cfg);
    add_simulation_options(sim, cfg);
    sim->add_option("--reps", cfg.reps, "Replications")->capture_default_str();
    sim->add_option("--estimators", cfg.estimators, "lasso, least_squares, oracle1, oracle2")->delimiter(',');
    sim->add_option("--eval-size", cfg.eval_size, "Evaluation sample size for PE")->capture_default_str();
    sim->add_option("--replication-csv", cfg.replication_csv, "Per-replication CSV path");
    sim->add_option("--rate-ns", cfg.rate_ns, "Run the rate experiment over these n")->delimiter(',');

    add_io_options(diag, cfg);
    add_data_grid_options(diag, cfg);
    add_grid_options(diag, cfg, cfg.diag_grid_points);
    add_simulation_options(diag, cfg);
    diag->add_option("--sigma", cfg.sigma, "Noise SD of the simulated design")->capture_default_str();
    diag->add_option("--u", cfg.u, "Support size for sparse eigenvalues")->capture_default_str();
    diag->add_option("--s", cfg.s, "Sparsity s of the URE check")->capture_default_str();
    diag->add_option("--m", cfg.m, "Block size m of the URE check")->capture_default_str();
    diag->add_option("--c1", cfg.c1, "Constant c1 of the URE sufficient condition")->capture_default_str();
    diag->add_flag("--brute-force", cfg.brute_force, "Cone search for kappa (tiny designs only)");
    diag->add_flag("--sampled", cfg.sampled, "Random supports instead of exhaustive enumeration");
    diag->add_option("--samples", cfg.samples, "Supports drawn in sampled mode")->capture_default_str();
    diag->add_option("--budget", cfg.budget, "Exhaustive mode limit on C(p,u) u^3")->capture_default_str();
    diag->add_option("--population", cfg.population, "identity or toeplitz (uses --rho)")->capture_default_str();
    diag->add_option("--etas", cfg.etas, "eta values for h_n^2")->delimiter(',');
    diag->add_option("--delta0", cfg.delta0, "True jump for user data (with --tau0)")->delimiter(',');
    diag->add_option("--eta-smooth", cfg.eta_smooth, "eta for the design smoothness supremum");
    diag->add_option("--min-gap", cfg.min_gap, "Exclusion around tau0 for c_hat")->capture_default_str();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? 0 : 2;
    }

    const CLI::App* selected = app.get_subcommands().front();
    cfg.command = selected->get_name();
    const Presence presence{selected};
    try {
        if (cfg.command == "fit") return run_fit(cfg, presence, out, false);
        if (cfg.command == "cv") return run_fit(cfg, presence, out, true);
        if (cfg.command == "simulate") return run_simulate(cfg, presence, out);
        return run_diagnose(cfg, presence, out);
    } catch (const Error& e) {
        const Json block = error_json(e.code(), e.what());
        err << block.dump() << "\n";
        if (!cfg.out.empty()) {
            std::ofstream f(cfg.out, std::ios::binary);
            if (f) f << dump(block);
        }
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        const Json block = error_json(ErrorCode::NonFinite, e.what());
        err << block.dump() << "\n";
        return 4;
    }
}

}  // namespace thrlasso
