#include "mpcport/json_io.hpp"

#include <fstream>

#include "mpcport/errors.hpp"

namespace mpcport::json_io {

namespace {

const nlohmann::json& require(const nlohmann::json& j, const std::string& key) {
  const auto it = j.find(key);
  if (it == j.end()) throw ValidationError("missing JSON field '" + key + "'");
  return *it;
}

double number(const nlohmann::json& j, const std::string& key) {
  const nlohmann::json& v = require(j, key);
  if (!v.is_number()) throw ValidationError("JSON field '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + " must be a JSON array");
  Eigen::VectorXd v(static_cast<int>(j.size()));
  int i = 0;
  for (const auto& cell : j) {
    if (!cell.is_number()) throw ValidationError(what + " must contain only numbers");
    v[i++] = cell.get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) throw ValidationError(what + " must be a nonempty array of rows");
  const Eigen::VectorXd first = vector_from_json(j.front(), what + " row");
  Eigen::MatrixXd m(static_cast<int>(j.size()), first.size());
  int r = 0;
  for (const auto& row : j) {
    const Eigen::VectorXd v = vector_from_json(row, what + " row");
    if (v.size() != first.size()) throw ValidationError(what + " rows have unequal lengths");
    m.row(r++) = v.transpose();
  }
  return m;
}

nlohmann::json to_json(const regime::RegimeModel& model) {
  return {
      {"mu_normal", vector_to_json(model.mu_normal)},
      {"mu_contraction", vector_to_json(model.mu_contraction)},
      {"sigma_normal", matrix_to_json(model.sigma_normal)},
      {"sigma_contraction", matrix_to_json(model.sigma_contraction)},
      {"p_nn", model.p_nn},
      {"p_cc", model.p_cc},
      {"q_current", model.q_current},
  };
}

regime::RegimeModel regime_model_from_json(const nlohmann::json& j) {
  regime::RegimeModel model;
  model.mu_normal = vector_from_json(require(j, "mu_normal"), "mu_normal");
  model.mu_contraction = vector_from_json(require(j, "mu_contraction"), "mu_contraction");
  model.sigma_normal = matrix_from_json(require(j, "sigma_normal"), "sigma_normal");
  model.sigma_contraction = matrix_from_json(require(j, "sigma_contraction"), "sigma_contraction");
  model.p_nn = number(j, "p_nn");
  model.p_cc = number(j, "p_cc");
  model.q_current = number(j, "q_current");
  model.validate();
  return model;
}

nlohmann::json to_json(const regime::ForecastPath& path) {
  nlohmann::json mu = nlohmann::json::array(), sigma = nlohmann::json::array();
  for (const auto& m : path.mu_hat) mu.push_back(vector_to_json(m));
  for (const auto& s : path.sigma_hat) sigma.push_back(matrix_to_json(s));
  return {{"q_hat", path.q_hat}, {"mu_hat", mu}, {"sigma_hat", sigma}};
}

regime::ForecastPath forecast_path_from_json(const nlohmann::json& j) {
  regime::ForecastPath path;
  const nlohmann::json& q = require(j, "q_hat");
  const nlohmann::json& mu = require(j, "mu_hat");
  const nlohmann::json& sigma = require(j, "sigma_hat");
  if (!q.is_array() || q.size() != mu.size() || q.size() != sigma.size() || q.empty())
    throw ValidationError("forecast path arrays must be nonempty and equally long");
  for (const auto& cell : q) path.q_hat.push_back(cell.get<double>());
  for (const auto& cell : mu) path.mu_hat.push_back(vector_from_json(cell, "mu_hat entry"));
  for (const auto& cell : sigma)
    path.sigma_hat.push_back(matrix_from_json(cell, "sigma_hat entry"));
  for (std::size_t t = 0; t < path.mu_hat.size(); ++t) {
    if (path.mu_hat[t].size() != path.mu_hat[0].size() ||
        path.sigma_hat[t].rows() != path.mu_hat[0].size() ||
        path.sigma_hat[t].cols() != path.mu_hat[0].size())
      throw ValidationError("forecast path entries have inconsistent asset counts");
  }
  return path;
}

nlohmann::json to_json(const AllocationPlan& plan) {
  return {{"weights", matrix_to_json(plan.weights)}};
}

AllocationPlan allocation_plan_from_json(const nlohmann::json& j) {
  AllocationPlan plan;
  plan.weights = matrix_from_json(require(j, "weights"), "weights");
  plan.validate();
  return plan;
}

nlohmann::json trace_to_json(const std::vector<rp::ScaIterate>& trace) {
  nlohmann::json rows = nlohmann::json::array();
  for (const rp::ScaIterate& it : trace)
    rows.push_back({{"iteration", it.iteration},
                    {"objective", it.objective},
                    {"step_size", it.step_size},
                    {"rc_deviation", it.rc_deviation}});
  return rows;
}

SyntheticMarketSpec market_spec_from_json(const nlohmann::json& j) {
  SyntheticMarketSpec spec;
  spec.n_assets = static_cast<int>(number(j, "n_assets"));
  spec.mu_normal = vector_from_json(require(j, "mu_normal"), "mu_normal");
  spec.mu_contraction = vector_from_json(require(j, "mu_contraction"), "mu_contraction");
  spec.sigma_normal = matrix_from_json(require(j, "sigma_normal"), "sigma_normal");
  spec.sigma_contraction = matrix_from_json(require(j, "sigma_contraction"), "sigma_contraction");
  spec.p_nn = number(j, "p_nn");
  spec.p_cc = number(j, "p_cc");
  spec.horizon = static_cast<int>(number(j, "horizon"));
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("asset_names"))
    spec.asset_names = j.at("asset_names").get<std::vector<std::string>>();
  if (j.contains("start_date")) spec.start_date = j.at("start_date").get<std::string>();
  spec.validate();
  return spec;
}

nlohmann::json to_json(const SyntheticMarketSpec& spec) {
  nlohmann::json j{
      {"n_assets", spec.n_assets},
      {"mu_normal", vector_to_json(spec.mu_normal)},
      {"mu_contraction", vector_to_json(spec.mu_contraction)},
      {"sigma_normal", matrix_to_json(spec.sigma_normal)},
      {"sigma_contraction", matrix_to_json(spec.sigma_contraction)},
      {"p_nn", spec.p_nn},
      {"p_cc", spec.p_cc},
      {"horizon", spec.horizon},
      {"seed", spec.seed},
      {"start_date", spec.start_date},
  };
  if (!spec.asset_names.empty()) j["asset_names"] = spec.asset_names;
  return j;
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void save_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace mpcport::json_io
