#pragma once

#include "thrlasso/design.hpp"
#include "thrlasso/diagnostics.hpp"
#include "thrlasso/error.hpp"
#include "thrlasso/estimator.hpp"
#include "thrlasso/simulation.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace thrlasso {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "thrlasso-report/1";

/// 0 success, 2 configuration, 3 data, 4 numerical failure.
int exit_code_for(ErrorCode code);

/// Pretty-printed document with a trailing newline.
std::string dump(const Json& doc);

/// Rows {name, beta, delta} for covariates with a nonzero beta or delta; null marks an unselected entry.
Json coefficient_rows(const Dataset& data, const Vector& alpha);

/// Rebuilds the length-2M coefficient vector from coefficient_rows output.
Vector alpha_from_rows(const Dataset& data, const Json& rows);

/// Two-column (beta, delta) text table; '-' marks an unselected entry.
std::string coefficient_table(const Dataset& data, const Vector& alpha);

Json estimate_json(const Dataset& data, const ThresholdLassoEstimate& est);
Json profile_json(const std::vector<ProfilePoint>& profile);

/// Criterion at the reported tau from the stored estimate and the data.
double recompute_criterion(const Dataset& data, const Json& estimates);

Json simulation_config_json(const SimulationConfig& config);
Json summary_json(const EstimatorSummary& s);
Json replication_json(const ReplicationResult& r);
Json monte_carlo_json(const MonteCarloReport& report);
Json rate_json(const RateExperiment& rate);

Json error_json(ErrorCode code, const std::string& message);

}  // namespace thrlasso
