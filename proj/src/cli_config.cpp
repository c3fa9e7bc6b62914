#include "mpcport/cli_config.hpp"

#include <cstdlib>
#include <string>

#include "mpcport/errors.hpp"
#include "mpcport/json_io.hpp"

namespace mpcport::cli {

namespace {

template <typename T>
void read_into(const nlohmann::json& j, const char* key, T& target) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  try {
    target = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ValidationError(std::string("JSON field '") + key + "' has the wrong type");
  }
}

void read_vector(const nlohmann::json& j, const char* key, Eigen::VectorXd& target) {
  const auto it = j.find(key);
  if (it == j.end()) return;
  target = json_io::vector_from_json(*it, key);
}

void read_em(const nlohmann::json& j, regime::EmConfig& em) {
  read_into(j, "min_window", em.min_window);
  read_into(j, "tolerance", em.tolerance);
  read_into(j, "max_iterations", em.max_iterations);
}

void read_mv(const nlohmann::json& j, mv::MeanVarianceSpec& spec) {
  read_into(j, "gamma_risk", spec.gamma_risk);
  read_into(j, "gamma_trade", spec.gamma_trade);
  read_into(j, "horizon", spec.horizon);
}

void read_sca(const nlohmann::json& j, rp::ScaSettings& sca) {
  read_into(j, "gamma0", sca.gamma0);
  read_into(j, "gamma_update_rate", sca.gamma_update_rate);
  read_into(j, "delta_denominator", sca.delta_denominator);
  read_into(j, "tolerance", sca.tolerance);
  read_into(j, "max_outer_iterations", sca.max_outer_iterations);
}

void read_rp(const nlohmann::json& j, rp::RiskParitySpec& spec) {
  read_into(j, "gamma_trade", spec.gamma_trade);
  read_into(j, "horizon", spec.horizon);
  read_vector(j, "budgets", spec.budgets);
  if (const auto it = j.find("sca"); it != j.end()) read_sca(*it, spec.sca);
}

}  // namespace

RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("configuration must be a JSON object");
  RunConfig config;

  std::string strategy;
  read_into(j, "strategy", strategy);
  if (!strategy.empty()) config.backtest.strategy = backtest::strategy_from_name(strategy);
  read_into(j, "cost_rate", config.backtest.cost_rate);
  read_into(j, "window", config.backtest.window);
  read_into(j, "refit_interval", config.backtest.refit_interval);
  read_into(j, "risk_free_column", config.backtest.risk_free_column);
  read_into(j, "use_regime_model", config.backtest.use_regime_model);
  read_into(j, "driving_assets", config.backtest.driving_assets);
  if (const auto it = j.find("em"); it != j.end()) read_em(*it, config.backtest.em);
  if (const auto it = j.find("mv"); it != j.end()) read_mv(*it, config.backtest.mv_spec);
  if (const auto it = j.find("rp"); it != j.end()) read_rp(*it, config.backtest.rp_spec);

  read_into(j, "input", config.input);
  read_into(j, "model_file", config.model_file);
  read_into(j, "out_dir", config.out_dir);
  read_into(j, "seed", config.seed);
  read_into(j, "forecast_horizon", config.forecast_horizon);
  read_into(j, "max_flagged_fraction", config.max_flagged_fraction);
  read_vector(j, "current_allocation", config.current_allocation);

  if (const auto it = j.find("sweep"); it != j.end()) {
    read_into(*it, "horizons", config.sweep.horizons);
    read_into(*it, "gamma_risk", config.sweep.gamma_risk);
    read_into(*it, "gamma_trade", config.sweep.gamma_trade);
    read_into(*it, "cost_rate", config.sweep.cost_rate);
  }
  if (const auto it = j.find("compare"); it != j.end()) {
    read_into(*it, "horizons", config.compare.horizons);
    read_into(*it, "gamma_trade", config.compare.gamma_trade);
    read_into(*it, "paths", config.compare.paths);
    read_into(*it, "assets", config.compare.assets);
  }
  if (const auto it = j.find("market"); it != j.end()) config.market = *it;

  if (config.forecast_horizon < 1) throw ValidationError("forecast_horizon must be positive");
  if (!(config.max_flagged_fraction >= 0.0 && config.max_flagged_fraction <= 1.0))
    throw ValidationError("max_flagged_fraction must lie in [0, 1]");
  if (config.compare.paths < 1 || config.compare.assets < 2)
    throw ValidationError("compare grids need at least 1 path over at least 2 assets");
  return config;
}

int worker_count() {
  const char* raw = std::getenv("MPCPORT_WORKERS");
  if (raw == nullptr || *raw == '\0') return 0;
  char* end = nullptr;
  const long value = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || value < 1) return 0;
  return static_cast<int>(value);
}

}  // namespace mpcport::cli
