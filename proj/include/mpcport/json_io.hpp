#pragma once

// JSON serialization for the library's exchange types: regime models,
// forecast paths, allocation plans, solver traces, and synthetic-market
// specs. Vectors are flat arrays, matrices are row-major arrays of rows.

#include <Eigen/Dense>
#include <filesystem>
#include <json.hpp>

#include "mpcport/mpc_rp.hpp"
#include "mpcport/plan.hpp"
#include "mpcport/regime.hpp"
#include "mpcport/simulate.hpp"

namespace mpcport::json_io {

nlohmann::json vector_to_json(const Eigen::VectorXd& v);
nlohmann::json matrix_to_json(const Eigen::MatrixXd& m);

/// Parse helpers; `what` names the field in error messages.
Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& what);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what);

nlohmann::json to_json(const regime::RegimeModel& model);
regime::RegimeModel regime_model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const regime::ForecastPath& path);
regime::ForecastPath forecast_path_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AllocationPlan& plan);
AllocationPlan allocation_plan_from_json(const nlohmann::json& j);

nlohmann::json trace_to_json(const std::vector<rp::ScaIterate>& trace);

SyntheticMarketSpec market_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SyntheticMarketSpec& spec);

/// Reads and parses a JSON document; malformed syntax raises ParseError
/// carrying the line as the row coordinate, a missing file raises Error.
nlohmann::json load_json_file(const std::filesystem::path& path);
void save_json_file(const nlohmann::json& j, const std::filesystem::path& path);

}  // namespace mpcport::json_io
