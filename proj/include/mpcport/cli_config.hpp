#pragma once

// Run configuration shared by every CLI subcommand: one JSON document whose
// fields individual flags override. Grids drive the sweep and compare
// subcommands; everything else maps onto the backtest and solver specs.

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "mpcport/backtest.hpp"
#include "mpcport/simulate.hpp"

namespace mpcport::cli {

struct SweepGrids {
  std::vector<int> horizons;
  std::vector<double> gamma_risk;
  std::vector<double> gamma_trade;
  std::vector<double> cost_rate;
};

struct CompareGrids {
  std::vector<int> horizons;
  std::vector<double> gamma_trade;
  int paths = 20;   ///< random covariance paths per grid point
  int assets = 10;  ///< universe size of those paths
};

struct RunConfig {
  backtest::BacktestConfig backtest;
  std::string input;               ///< returns CSV path
  std::string model_file;          ///< serialized regime model (forecast/solve inputs)
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  int forecast_horizon = 15;
  double max_flagged_fraction = 0.1;  ///< backtest exit-code-3 threshold
  Eigen::VectorXd current_allocation; ///< solve-mv / solve-rp anchor; empty = equal weights
  SweepGrids sweep;
  CompareGrids compare;
  std::optional<nlohmann::json> market;  ///< synthetic-market spec for `simulate`
};

/// Builds a RunConfig from a parsed JSON document. Unknown keys are ignored;
/// type mismatches and invalid values raise ValidationError.
RunConfig config_from_json(const nlohmann::json& j);

/// Worker count for parallel grid evaluation: the MPCPORT_WORKERS
/// environment variable when set to a positive integer, otherwise 0
/// (meaning "let OpenMP decide").
int worker_count();

}  // namespace mpcport::cli
