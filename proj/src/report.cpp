#include "thrlasso/report.hpp"

#include "thrlasso/lasso.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace thrlasso {

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::ConfigError:
        case ErrorCode::BudgetExceeded:
        case ErrorCode::EmptyWindow:
            return 2;
        case ErrorCode::LengthMismatch:
        case ErrorCode::ZeroColumn:
        case ErrorCode::DuplicateQ:
        case ErrorCode::ParseError:
        case ErrorCode::AllZeroDesign:
            return 3;
        case ErrorCode::NonFinite:
        case ErrorCode::DegenerateRn:
        case ErrorCode::SingularDesign:
            return 4;
    }
    return 4;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

namespace {

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json coefficient_rows(const Dataset& data, const Vector& alpha) {
    const Eigen::Index M = data.M();
    if (alpha.size() != 2 * M) throw Error(ErrorCode::LengthMismatch, "alpha length differs from 2M");
    Json rows = Json::array();
    for (Eigen::Index j = 0; j < M; ++j) {
        const double b = alpha[j], d = alpha[M + j];
        if (b == 0.0 && d == 0.0) continue;
        Json row;
        row["name"] = data.names()[static_cast<std::size_t>(j)];
        row["beta"] = b != 0.0 ? Json(b) : Json(nullptr);
        row["delta"] = d != 0.0 ? Json(d) : Json(nullptr);
        rows.push_back(std::move(row));
    }
    return rows;
}

Vector alpha_from_rows(const Dataset& data, const Json& rows) {
    const Eigen::Index M = data.M();
    Vector alpha = Vector::Zero(2 * M);
    for (const auto& row : rows) {
        const auto name = row.at("name").get<std::string>();
        Eigen::Index j = 0;
        while (j < M && data.names()[static_cast<std::size_t>(j)] != name) ++j;
        if (j == M) throw Error(ErrorCode::LengthMismatch, "unknown covariate '" + name + "' in report");
        if (!row.at("beta").is_null()) alpha[j] = row.at("beta").get<double>();
        if (!row.at("delta").is_null()) alpha[M + j] = row.at("delta").get<double>();
    }
    return alpha;
}

std::string coefficient_table(const Dataset& data, const Vector& alpha) {
    const Eigen::Index M = data.M();
    std::size_t width = 8;
    for (const auto& n : data.names()) width = std::max(width, n.size());
    auto cell = [](double v) {
        if (v == 0.0) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        return std::string(buf);
    };
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-*s %12s %12s\n", static_cast<int>(width), "variable", "beta", "delta");
    os << line;
    for (Eigen::Index j = 0; j < M; ++j) {
        const double b = alpha[j], d = alpha[M + j];
        if (b == 0.0 && d == 0.0) continue;
        std::snprintf(line, sizeof line, "%-*s %12s %12s\n", static_cast<int>(width),
                      data.names()[static_cast<std::size_t>(j)].c_str(), cell(b).c_str(), cell(d).c_str());
        os << line;
    }
    return os.str();
}

Json estimate_json(const Dataset& data, const ThresholdLassoEstimate& est) {
    const auto& at = est.profile[est.tau_index];
    Json j;
    j["tau"] = est.tau_hat;
    j["argmin_interval"] = {est.argmin_interval.first, est.argmin_interval.second};
    j["lambda"] = est.lambda;
    j["lambda_fit"] = est.lambda_fit;
    j["criterion"] = at.criterion;
    j["sn"] = at.fit.sn;
    j["active_count"] = est.sparsity();
    j["delta_zero"] = (est.alpha_hat.tail(data.M()).array() == 0.0).all();
    j["kkt_residual"] = at.fit.kkt_residual;
    j["all_converged"] = !est.has_failures();
    j["coefficients"] = coefficient_rows(data, est.alpha_hat);
    return j;
}

Json profile_json(const std::vector<ProfilePoint>& profile) {
    Json arr = Json::array();
    for (const auto& p : profile) {
        Json row;
        row["tau"] = p.tau;
        row["criterion"] = number_or_null(p.criterion);
        row["active"] = p.fit.sparsity();
        row["converged"] = p.ok();
        if (!p.error.empty()) row["error"] = p.error;
        arr.push_back(std::move(row));
    }
    return arr;
}

double recompute_criterion(const Dataset& data, const Json& estimates) {
    const Vector alpha = alpha_from_rows(data, estimates.at("coefficients"));
    const auto design = build_design(data, estimates.at("tau").get<double>());
    return residual_mean_square(design, data.y(), alpha) +
           estimates.at("lambda").get<double>() * design.col_norms.cwiseProduct(alpha.cwiseAbs()).sum();
}

Json simulation_config_json(const SimulationConfig& c) {
    Json j;
    j["n"] = c.n;
    j["M"] = c.M;
    j["rho"] = c.rho;
    j["c"] = c.c;
    j["tau0"] = c.tau0;
    j["sigma"] = c.sigma;
    j["grid"] = {{"t0", c.grid.t0}, {"t1", c.grid.t1}, {"points", c.grid.points}, {"adaptive", c.grid.adaptive}};
    Json rule;
    rule["kind"] = to_string(c.lambda_rule.kind);
    rule["A"] = c.lambda_rule.A;
    rule["mu"] = c.lambda_rule.mu ? Json(*c.lambda_rule.mu) : Json(nullptr);
    rule["sigma"] = c.lambda_rule.sigma;
    rule["fixed_value"] = c.lambda_rule.fixed_value ? Json(*c.lambda_rule.fixed_value) : Json(nullptr);
    rule["candidates"] = c.lambda_rule.candidates;
    rule["convention"] = to_string(c.lambda_rule.convention);
    j["lambda_rule"] = rule;
    j["solver"] = {{"max_iters", c.solver.max_iters},
                   {"obj_tol", c.solver.obj_tol},
                   {"coef_tol", c.solver.coef_tol},
                   {"kkt_tol", c.solver.kkt_tol},
                   {"box_bound", c.solver.box_bound ? Json(*c.solver.box_bound) : Json(nullptr)}};
    j["replications"] = c.replications;
    j["seed"] = c.seed;
    j["eval_size"] = c.eval_size;
    Json est = Json::array();
    for (const auto k : c.estimators) est.push_back(to_string(k));
    j["estimators"] = est;
    return j;
}

Json summary_json(const EstimatorSummary& s) {
    Json j;
    j["estimator"] = to_string(s.kind);
    j["completed"] = s.completed;
    j["failed"] = s.failed;
    j["pe_mean"] = s.pe_mean;
    j["pe_median"] = s.pe_median;
    j["pe_sd"] = s.pe_sd;
    j["m_alpha_mean"] = s.m_alpha_mean;
    j["l1_alpha_mean"] = s.l1_alpha_mean;
    j["l1_alpha_median"] = s.l1_alpha_median;
    j["l1_tau_mean"] = s.l1_tau_mean ? Json(*s.l1_tau_mean) : Json(nullptr);
    j["l1_tau_median"] = s.l1_tau_median ? Json(*s.l1_tau_median) : Json(nullptr);
    j["support_frequency"] = s.support_frequency;
    return j;
}

Json replication_json(const ReplicationResult& r) {
    Json j;
    j["index"] = r.index;
    for (const auto& [kind, rec] : r.records) {
        Json e;
        e["failed"] = rec.failed;
        if (rec.failed) {
            e["failure"] = rec.failure;
        } else {
            e["pe"] = rec.pe;
            e["m_alpha"] = rec.m_alpha;
            e["l1_alpha"] = rec.l1_alpha;
            e["l1_tau"] = rec.l1_tau ? Json(*rec.l1_tau) : Json(nullptr);
            e["support_recovered"] = rec.support_recovered;
            e["tau_hat"] = rec.tau_hat;
            if (kind == EstimatorKind::Lasso) e["lambda"] = rec.lambda;
            if (rec.singular) e["singular"] = true;
        }
        j[to_string(kind)] = std::move(e);
    }
    return j;
}

Json monte_carlo_json(const MonteCarloReport& report) {
    Json j;
    Json rows = Json::array();
    int failed = 0, total = 0;
    for (const auto& s : report.summaries) {
        rows.push_back(summary_json(s));
        failed += s.failed;
        total += s.failed + s.completed;
    }
    j["summaries"] = rows;
    j["failed_records"] = failed;
    j["failure_rate"] = total == 0 ? 0.0 : static_cast<double>(failed) / total;
    Json reps = Json::array();
    for (const auto& r : report.replications) reps.push_back(replication_json(r));
    j["replications"] = reps;
    return j;
}

Json rate_json(const RateExperiment& rate) {
    Json j;
    Json pts = Json::array();
    for (const auto& p : rate.points) {
        pts.push_back({{"n", p.n},
                       {"tau_error_median", p.tau_error_median},
                       {"l1_alpha_median", p.l1_alpha_median},
                       {"failed", p.failed}});
    }
    j["points"] = pts;
    j["tau_slope"] = number_or_null(rate.tau_slope);
    j["alpha_slope"] = number_or_null(rate.alpha_slope);
    return j;
}

Json error_json(ErrorCode code, const std::string& message) {
    Json j;
    j["schema"] = kReportSchema;
    j["error"] = {{"code", std::string(to_string(code))}, {"message", message}, {"exit_code", exit_code_for(code)}};
    return j;
}

}  // namespace thrlasso
