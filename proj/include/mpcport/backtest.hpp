#pragma once

// Rolling investment loop: each period after a warm-up window, refit or
// filter-update the regime model, forecast H steps ahead, solve the
// configured strategy's allocation problem, execute only the first plan
// step, and account wealth net of proportional transaction costs. Produces
// an exactly replayable ledger and the standard performance metrics.

#include <Eigen/Dense>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mpcport/errors.hpp"
#include "mpcport/mpc_mv.hpp"
#include "mpcport/mpc_rp.hpp"
#include "mpcport/regime.hpp"
#include "mpcport/returns_panel.hpp"

namespace mpcport::backtest {

/// Trading-day periods per year used by every annualized figure.
inline constexpr double kPeriodsPerYear = 252.0;

enum class Strategy {
  FixedMix,    ///< rebalance to equal weights every period
  BuyAndHold,  ///< never trade after the initial allocation
  Spo,         ///< single-period mean-variance (horizon forced to 1)
  Mpo,         ///< multi-period mean-variance plan, first step executed
  SpoRp,       ///< single-period risk parity (horizon forced to 1)
  MpoRp,       ///< multi-period risk parity plan, first step executed
};

/// Maps "fixed-mix", "buy-and-hold", "spo", "mpo", "spo-rp", "mpo-rp" to the
/// enum; throws ValidationError listing the valid names otherwise.
Strategy strategy_from_name(const std::string& name);
std::string strategy_name(Strategy strategy);

struct PortfolioState {
  double wealth = 1.0;
  Eigen::VectorXd weights;  ///< simplex allocation currently held
  int date_index = 0;       ///< panel row of the last applied return

  void validate() const;
};

struct BacktestConfig {
  Strategy strategy = Strategy::FixedMix;
  double cost_rate = 0.001;  ///< proportional cost on traded weight (10 bp)
  int window = 2000;         ///< lookback length; also the untraded warm-up
  int refit_interval = 21;   ///< periods between full regime refits
  mv::MeanVarianceSpec mv_spec;  ///< used by spo / mpo
  rp::RiskParitySpec rp_spec;    ///< used by spo-rp / mpo-rp
  std::string risk_free_column;  ///< optional panel column; excluded from investables
  bool use_regime_model = true;  ///< off = trailing-window historical moments
  std::vector<std::string> driving_assets;  ///< regime-fit columns; empty = all
  regime::EmConfig em;

  void validate() const;
};

struct LedgerRecord {
  int date_index = 0;       ///< row in the source panel
  std::string date;
  double wealth = 0.0;      ///< end-of-period wealth, net of this period's cost
  Eigen::VectorXd weights;  ///< post-trade allocation held into next period
  Eigen::VectorXd trade;    ///< executed trade u = target - drifted weights
  double cost = 0.0;        ///< currency paid for this period's trade
  double risk_free = 0.0;   ///< period risk-free return (0 when none configured)
  bool flagged = false;     ///< solver fell back to holding current weights
};

struct BacktestLedger {
  int start_index = 0;            ///< first traded panel row
  double initial_wealth = 1.0;
  Eigen::VectorXd initial_weights;
  double cost_rate = 0.0;
  std::vector<std::string> asset_names;  ///< investable columns, ledger order
  std::vector<LedgerRecord> records;

  int flagged_periods() const;
};

struct MetricsReport {
  double annualized_return_pct = 0.0;  ///< 252 x mean daily net return, in %
  double annualized_vol_pct = 0.0;     ///< sqrt(252) x std of daily net returns, in %
  double max_drawdown = 0.0;           ///< worst peak-to-trough wealth fraction
  std::optional<double> sharpe;        ///< absent when volatility is zero
  std::optional<double> calmar;        ///< absent when drawdown is zero
  double annual_turnover = 0.0;        ///< sum ||u||_1 scaled to a 252-period year
  double cumulative_return = 0.0;      ///< final wealth / initial wealth
};

struct StepOutcome {
  PortfolioState state;
  LedgerRecord record;
};

/// One period of the wealth dynamics: grow wealth by the portfolio gross
/// return, drift weights with realized returns, trade to `target`, and pay
/// cost = grown wealth x cost_rate x ||target - drifted||_1. Throws
/// WealthWipeoutError when the gross return or the net wealth reaches zero.
StepOutcome step(const PortfolioState& state, const Eigen::VectorXd& target,
                 const Eigen::VectorXd& realized_returns, double cost_rate);

/// Runs the full loop over the panel. The first `window` rows are never
/// traded on; the initial allocation is equal weights. A solver failure in
/// some period holds the drifted allocation and flags the record instead of
/// aborting. Deterministic for fixed inputs.
BacktestLedger run(const ReturnsPanel& panel, const BacktestConfig& config);

/// Performance summary of a ledger with at least two records.
MetricsReport metrics(const BacktestLedger& ledger);

/// Recomputes the wealth path from the recorded targets and the panel and
/// throws ValidationError if any period's wealth drifts from the record by
/// more than `tolerance` relative.
void replay(const BacktestLedger& ledger, const ReturnsPanel& panel, double tolerance = 1e-10);

/// CSV export: header `date,wealth,<asset...>,cost,flagged`, one row per
/// period, shortest-round-trip number formatting.
void save_ledger_csv(const BacktestLedger& ledger, const std::filesystem::path& path);

/// Metrics as a flat JSON object; absent ratios serialize as null.
void save_metrics_json(const MetricsReport& report, const std::filesystem::path& path);

/// Inverse of save_metrics_json; null ratios become absent optionals.
MetricsReport load_metrics_json(const std::filesystem::path& path);

/// Full content of one ledger CSV row. Trade vectors and the risk-free
/// column are deliberately not part of the CSV export, so reading one back
/// yields this view rather than a replayable BacktestLedger.
struct LedgerCsvRow {
  std::string date;
  double wealth = 0.0;
  Eigen::VectorXd weights;
  double cost = 0.0;
  bool flagged = false;
};

struct LedgerCsv {
  std::vector<std::string> asset_names;
  std::vector<LedgerCsvRow> rows;
};

/// Reads a file written by save_ledger_csv; asset names come from the
/// header. Malformed cells raise ParseError naming row and column.
LedgerCsv load_ledger_csv(const std::filesystem::path& path);

}  // namespace mpcport::backtest
