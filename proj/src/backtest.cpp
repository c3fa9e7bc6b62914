#include "mpcport/backtest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "mpcport/plan.hpp"

namespace mpcport::backtest {

namespace {

constexpr double kSimplexTol = 1e-8;

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

/// Weights after one period of realized returns, renormalized to the simplex.
Eigen::VectorXd drift_weights(const Eigen::VectorXd& weights, const Eigen::VectorXd& returns,
                              double gross) {
  return weights.cwiseProduct(Eigen::VectorXd::Ones(returns.size()) + returns) / gross;
}

/// Clamps solver output onto the simplex; interior-point iterates satisfy the
/// constraints only to solver tolerance and long backtests compound drift.
Eigen::VectorXd sanitize_target(Eigen::VectorXd w) {
  w = w.cwiseMax(0.0);
  const double total = w.sum();
  if (total <= 0.0) throw ValidationError("allocation target collapsed to zero");
  return w / total;
}

}  // namespace

Strategy strategy_from_name(const std::string& name) {
  if (name == "fixed-mix") return Strategy::FixedMix;
  if (name == "buy-and-hold") return Strategy::BuyAndHold;
  if (name == "spo") return Strategy::Spo;
  if (name == "mpo") return Strategy::Mpo;
  if (name == "spo-rp") return Strategy::SpoRp;
  if (name == "mpo-rp") return Strategy::MpoRp;
  throw ValidationError("unknown strategy '" + name +
                        "'; valid: fixed-mix, buy-and-hold, spo, mpo, spo-rp, mpo-rp");
}

std::string strategy_name(Strategy strategy) {
  switch (strategy) {
    case Strategy::FixedMix: return "fixed-mix";
    case Strategy::BuyAndHold: return "buy-and-hold";
    case Strategy::Spo: return "spo";
    case Strategy::Mpo: return "mpo";
    case Strategy::SpoRp: return "spo-rp";
    case Strategy::MpoRp: return "mpo-rp";
  }
  throw ValidationError("invalid strategy value");
}

void PortfolioState::validate() const {
  if (!(wealth > 0.0) || !std::isfinite(wealth))
    throw ValidationError("portfolio wealth must be positive and finite");
  check_simplex(weights, "portfolio weights", kSimplexTol);
}

void BacktestConfig::validate() const {
  if (cost_rate < 0.0 || !std::isfinite(cost_rate))
    throw ValidationError("cost rate must be nonnegative and finite");
  if (refit_interval < 1) throw ValidationError("refit interval must be at least 1");
  if (use_regime_model && window < em.min_window)
    throw ValidationError("lookback window shorter than the minimum regime-fit length");
  if (!use_regime_model && window < 2)
    throw ValidationError("lookback window must cover at least two observations");
}

int BacktestLedger::flagged_periods() const {
  return static_cast<int>(std::count_if(records.begin(), records.end(),
                                        [](const LedgerRecord& r) { return r.flagged; }));
}

StepOutcome step(const PortfolioState& state, const Eigen::VectorXd& target,
                 const Eigen::VectorXd& realized_returns, double cost_rate) {
  state.validate();
  check_simplex(target, "trade target", kSimplexTol);
  if (target.size() != state.weights.size() || realized_returns.size() != state.weights.size())
    throw ValidationError("state, target, and returns must have matching asset counts");
  if (!realized_returns.allFinite())
    throw ValidationError("realized returns must be finite");
  if (cost_rate < 0.0) throw ValidationError("cost rate must be nonnegative");

  const double gross = 1.0 + state.weights.dot(realized_returns);
  if (gross <= 0.0)
    throw WealthWipeoutError("portfolio gross return fell to -100% or below");

  const double grown = state.wealth * gross;
  const Eigen::VectorXd drifted = drift_weights(state.weights, realized_returns, gross);

  StepOutcome out;
  out.record.date_index = state.date_index + 1;
  out.record.trade = target - drifted;
  out.record.cost = grown * cost_rate * out.record.trade.lpNorm<1>();
  out.record.wealth = grown - out.record.cost;
  out.record.weights = target;
  if (out.record.wealth <= 0.0)
    throw WealthWipeoutError("transaction costs exhausted portfolio wealth");

  out.state.wealth = out.record.wealth;
  out.state.weights = target;
  out.state.date_index = state.date_index + 1;
  return out;
}

namespace {

/// Per-period strategy engine: owns the regime model (or historical moments)
/// and produces the next target allocation from data up to the current row.
class StrategyEngine {
public:
  StrategyEngine(const ReturnsPanel& investables, const BacktestConfig& config)
      : panel_(investables), config_(config) {
    driving_ = config.driving_assets.empty() ? panel_.assets : config.driving_assets;
    for (const auto& name : driving_) panel_.asset_index(name);  // validate names
  }

  /// Target allocation decided at the close of row `t`, anchored at the
  /// post-drift allocation. Throws solver errors through to the caller.
  Eigen::VectorXd decide(int t, const Eigen::VectorXd& drifted) {
    const int n = panel_.num_assets();
    switch (config_.strategy) {
      case Strategy::FixedMix:
        return Eigen::VectorXd::Constant(n, 1.0 / n);
      case Strategy::BuyAndHold:
        return drifted;
      case Strategy::Spo:
      case Strategy::Mpo: {
        mv::MeanVarianceSpec spec = config_.mv_spec;
        if (config_.strategy == Strategy::Spo) spec.horizon = 1;
        spec.current_allocation = drifted;
        return sanitize_target(
            mv::solve(spec, forecast(t, spec.horizon)).first_step());
      }
      case Strategy::SpoRp:
      case Strategy::MpoRp: {
        rp::RiskParitySpec spec = config_.rp_spec;
        if (config_.strategy == Strategy::SpoRp) spec.horizon = 1;
        spec.current_allocation = drifted;
        return sanitize_target(
            rp::solve_sca(spec, forecast(t, spec.horizon)).plan.first_step());
      }
    }
    throw ValidationError("invalid strategy value");
  }

  /// Advances the model through row `t`'s observation: a full refit on the
  /// cadence (warm-started from the previous parameters), a Bayes filter
  /// update otherwise. A refit that degenerates falls back to the previous
  /// model when one exists; with no model at all the error propagates.
  void observe(int t) {
    if (!config_.use_regime_model) return;
    // Strategies that never consume forecasts need no model upkeep.
    if (config_.strategy == Strategy::FixedMix || config_.strategy == Strategy::BuyAndHold)
      return;
    const bool due = !model_ || (t - last_fit_) >= config_.refit_interval;
    if (due) {
      try {
        const ReturnsPanel window = panel_.window(t - config_.window + 1, config_.window);
        const regime::RegimeModel* init = model_ ? &*model_ : nullptr;
        model_ = regime::fit_em(window, driving_, config_.em, init).model;
        last_fit_ = t;
        return;
      } catch (const DegenerateRegimeError&) {
        if (!model_) throw;
        // keep the stale model; the filter update below still runs
      }
    }
    model_->q_current = regime::filter_update(*model_, panel_.returns.row(t).transpose());
  }

private:
  regime::ForecastPath forecast(int t, int horizon) {
    if (config_.use_regime_model) return regime::forecast_path(*model_, horizon);

    // Historical-average mode: trailing-window sample moments, constant
    // across the horizon.
    const ReturnsPanel window = panel_.window(t - config_.window + 1, config_.window);
    const Eigen::VectorXd mu = window.returns.colwise().mean().transpose();
    const Eigen::MatrixXd centered = window.returns.rowwise() - mu.transpose();
    Eigen::MatrixXd sigma =
        centered.transpose() * centered / static_cast<double>(window.periods() - 1);
    regime::regularize_covariance(sigma);
    regime::ForecastPath path;
    for (int h = 0; h < horizon; ++h) {
      path.q_hat.push_back(1.0);
      path.mu_hat.push_back(mu);
      path.sigma_hat.push_back(sigma);
    }
    return path;
  }

  ReturnsPanel panel_;
  BacktestConfig config_;
  std::vector<std::string> driving_;
  std::optional<regime::RegimeModel> model_;
  int last_fit_ = 0;
};

}  // namespace

BacktestLedger run(const ReturnsPanel& panel, const BacktestConfig& config) {
  panel.validate();
  config.validate();

  ReturnsPanel investables = panel;
  int rf_col = -1;
  if (!config.risk_free_column.empty()) {
    rf_col = panel.asset_index(config.risk_free_column);
    investables = panel.without_column(rf_col);
  }
  const int n = investables.num_assets();
  const int total = investables.periods();
  if (total <= config.window + 1)
    throw ValidationError("panel must be longer than the warm-up window plus one period");

  BacktestLedger ledger;
  ledger.start_index = config.window;
  ledger.initial_wealth = 1.0;
  ledger.initial_weights = Eigen::VectorXd::Constant(n, 1.0 / n);
  ledger.cost_rate = config.cost_rate;
  ledger.asset_names = investables.assets;
  ledger.records.reserve(static_cast<std::size_t>(total - config.window));

  StrategyEngine engine(investables, config);
  PortfolioState state{1.0, ledger.initial_weights, config.window - 1};

  for (int t = config.window; t < total; ++t) {
    const Eigen::VectorXd returns = investables.returns.row(t).transpose();
    const double gross = 1.0 + state.weights.dot(returns);
    if (gross <= 0.0)
      throw WealthWipeoutError("portfolio gross return fell to -100% or below");
    const Eigen::VectorXd drifted = drift_weights(state.weights, returns, gross);

    engine.observe(t);

    Eigen::VectorXd target;
    bool flagged = false;
    try {
      target = engine.decide(t, drifted);
    } catch (const NonConvergenceError&) {
      target = drifted;  // hold the current allocation and flag the period
      flagged = true;
    } catch (const DegenerateRiskError&) {
      target = drifted;
      flagged = true;
    }

    StepOutcome outcome = step(state, target, returns, config.cost_rate);
    outcome.record.date = investables.dates[static_cast<std::size_t>(t)];
    outcome.record.risk_free = rf_col >= 0 ? panel.returns(t, rf_col) : 0.0;
    outcome.record.flagged = flagged;
    state = std::move(outcome.state);
    ledger.records.push_back(std::move(outcome.record));
  }
  return ledger;
}

MetricsReport metrics(const BacktestLedger& ledger) {
  const int n = static_cast<int>(ledger.records.size());
  if (n < 2) throw ValidationError("metrics require at least two ledger periods");

  Eigen::VectorXd daily(n), rf(n);
  double turnover_sum = 0.0;
  double prev = ledger.initial_wealth;
  for (int i = 0; i < n; ++i) {
    const LedgerRecord& rec = ledger.records[static_cast<std::size_t>(i)];
    daily[i] = rec.wealth / prev - 1.0;
    rf[i] = rec.risk_free;
    turnover_sum += rec.trade.lpNorm<1>();
    prev = rec.wealth;
  }

  const double mean = daily.mean();
  const double variance = (daily.array() - mean).square().sum() / (n - 1);
  const double stddev = std::sqrt(variance);

  double peak = ledger.initial_wealth;
  double max_dd = 0.0;
  for (const LedgerRecord& rec : ledger.records) {
    peak = std::max(peak, rec.wealth);
    max_dd = std::max(max_dd, (peak - rec.wealth) / peak);
  }

  MetricsReport report;
  report.annualized_return_pct = kPeriodsPerYear * mean * 100.0;
  report.annualized_vol_pct = std::sqrt(kPeriodsPerYear) * stddev * 100.0;
  report.max_drawdown = max_dd;
  const double ann_excess = kPeriodsPerYear * (mean - rf.mean());
  if (stddev > 0.0) report.sharpe = ann_excess / (std::sqrt(kPeriodsPerYear) * stddev);
  if (max_dd > 0.0) report.calmar = kPeriodsPerYear * mean / max_dd;
  report.annual_turnover = turnover_sum * kPeriodsPerYear / n;
  report.cumulative_return = ledger.records.back().wealth / ledger.initial_wealth;
  return report;
}

void replay(const BacktestLedger& ledger, const ReturnsPanel& panel, double tolerance) {
  std::vector<int> columns;
  columns.reserve(ledger.asset_names.size());
  for (const auto& name : ledger.asset_names) columns.push_back(panel.asset_index(name));

  PortfolioState state{ledger.initial_wealth, ledger.initial_weights, ledger.start_index - 1};
  for (std::size_t i = 0; i < ledger.records.size(); ++i) {
    const LedgerRecord& rec = ledger.records[i];
    Eigen::VectorXd returns(static_cast<int>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j)
      returns[static_cast<int>(j)] = panel.returns(rec.date_index, columns[j]);
    const StepOutcome outcome = step(state, rec.weights, returns, ledger.cost_rate);
    const double err = std::abs(outcome.record.wealth - rec.wealth) /
                       std::max(1.0, std::abs(rec.wealth));
    if (err > tolerance)
      throw ValidationError("ledger replay diverged at period " + std::to_string(i) +
                            " (relative wealth error " + format_double(err) + ")");
    state = outcome.state;
  }
}

void save_ledger_csv(const BacktestLedger& ledger, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << "date,wealth";
  for (const auto& name : ledger.asset_names) out << ',' << name;
  out << ",cost,flagged\n";
  for (const LedgerRecord& rec : ledger.records) {
    out << rec.date << ',' << format_double(rec.wealth);
    for (int j = 0; j < rec.weights.size(); ++j) out << ',' << format_double(rec.weights[j]);
    out << ',' << format_double(rec.cost) << ',' << (rec.flagged ? 1 : 0) << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

void save_metrics_json(const MetricsReport& report, const std::filesystem::path& path) {
  nlohmann::json j{
      {"annualized_return_pct", report.annualized_return_pct},
      {"annualized_vol_pct", report.annualized_vol_pct},
      {"max_drawdown", report.max_drawdown},
      {"sharpe", report.sharpe ? nlohmann::json(*report.sharpe) : nlohmann::json(nullptr)},
      {"calmar", report.calmar ? nlohmann::json(*report.calmar) : nlohmann::json(nullptr)},
      {"annual_turnover", report.annual_turnover},
      {"cumulative_return", report.cumulative_return},
  };
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

MetricsReport load_metrics_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open metrics file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("malformed metrics JSON in " + path.string() + ": " + e.what());
  }
  MetricsReport report;
  try {
    report.annualized_return_pct = j.at("annualized_return_pct").get<double>();
    report.annualized_vol_pct = j.at("annualized_vol_pct").get<double>();
    report.max_drawdown = j.at("max_drawdown").get<double>();
    if (!j.at("sharpe").is_null()) report.sharpe = j.at("sharpe").get<double>();
    if (!j.at("calmar").is_null()) report.calmar = j.at("calmar").get<double>();
    report.annual_turnover = j.at("annual_turnover").get<double>();
    report.cumulative_return = j.at("cumulative_return").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("metrics JSON " + path.string() + " is missing fields: " + e.what());
  }
  return report;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(line.substr(start, comma - start));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

double parse_csv_double(const std::string& cell, int row, int column) {
  double value = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, value);
  if (ec != std::errc{} || ptr != end)
    throw ParseError("malformed numeric cell '" + cell + "'", row, column);
  return value;
}

}  // namespace

LedgerCsv load_ledger_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ledger file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty ledger file " + path.string());
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 5 || header.front() != "date" || header[1] != "wealth" ||
      header[header.size() - 2] != "cost" || header.back() != "flagged")
    throw ParseError("unexpected ledger header in " + path.string());
  LedgerCsv ledger;
  ledger.asset_names.assign(header.begin() + 2, header.end() - 2);
  const std::size_t n = ledger.asset_names.size();
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("row has " + std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(header.size()),
                       row, 1);
    LedgerCsvRow rec;
    rec.date = cells[0];
    rec.wealth = parse_csv_double(cells[1], row, 2);
    rec.weights.resize(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j)
      rec.weights[static_cast<Eigen::Index>(j)] =
          parse_csv_double(cells[2 + j], row, static_cast<int>(3 + j));
    rec.cost = parse_csv_double(cells[2 + n], row, static_cast<int>(3 + n));
    const std::string& flag = cells[3 + n];
    if (flag != "0" && flag != "1")
      throw ParseError("flag cell must be 0 or 1, got '" + flag + "'", row,
                       static_cast<int>(4 + n));
    rec.flagged = flag == "1";
    ledger.rows.push_back(std::move(rec));
  }
  return ledger;
}

}  // namespace mpcport::backtest
